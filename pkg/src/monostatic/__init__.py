"""Centroids, equilibria and mono-monostatic bodies in spaces of constant curvature and normed spaces."""
from .spaces import (
    DomainError,
    Geometry,
    NormProfile,
    OrientedGeodesicHyperplane,
    RoundProfile,
    SpaceKind,
    SplineProfile,
    SuperellipsoidProfile,
)
from .radial import RadialBody
from .gomboc import GombocParams, build_body
from .integrate import (
    MomentReport,
    NoSignChange,
    QuadratureSpec,
    centroid,
    find_centering_c,
    first_moment_M3,
    moment_condition_check,
)
from .equilibria import (
    EquilibriumCensus,
    EquilibriumKind,
    EquilibriumPoint,
    certify_mono_monostatic,
    find_equilibria,
    gaussian_curvature,
    min_curvature,
    poincare_hopf_check,
)

__all__ = [
    "DomainError", "Geometry", "NormProfile", "OrientedGeodesicHyperplane", "RoundProfile", "SpaceKind",
    "SplineProfile", "SuperellipsoidProfile", "RadialBody", "GombocParams", "build_body", "MomentReport",
    "NoSignChange", "QuadratureSpec", "centroid", "find_centering_c", "first_moment_M3",
    "moment_condition_check", "EquilibriumCensus", "EquilibriumKind", "EquilibriumPoint",
    "certify_mono_monostatic", "find_equilibria", "gaussian_curvature", "min_curvature", "poincare_hopf_check",
]
__version__ = "0.1.0"
