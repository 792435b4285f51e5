"""Chart models of Euclidean, spherical, hyperbolic and normed spaces.

Spherical space is represented through the gnomonic chart of the open
northern hemisphere (tangent hyperplane at the north pole), hyperbolic
space through the projective (Klein) ball model. Both charts map geodesics
to straight lines, so convexity and geodesic hyperplanes are inherited from
the ambient Euclidean structure of the chart. All functions accept arrays
of chart points of shape ``(..., dim)``.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar


class DomainError(ValueError):
    """A point or parameter lies outside the domain of a chart or formula."""


class Geometry(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    SPHERICAL = "spherical"
    HYPERBOLIC = "hyperbolic"
    NORMED = "normed"


# ---------------------------------------------------------------------------
# Norm profiles
# ---------------------------------------------------------------------------

class NormProfile:
    """Radial function of an o-symmetric unit ball.

    In 3D the ball is rotationally symmetric about the x3 axis and the
    profile is a function of the latitude ``theta`` in [-pi/2, pi/2]. In 2D
    the argument is the polar angle of the direction.
    """

    def __call__(self, theta):
        return self.derivatives(theta)[0]

    def derivatives(self, theta):
        """Return ``(rho, rho', rho'')`` at ``theta``."""
        raise NotImplementedError

    def support(self, angle: float) -> float:
        """Support function h_M of the unit ball in direction ``angle``.

        For a rotationally symmetric ball the maximum of ``rho(t) cos(t - angle)``
        is attained in the meridian plane containing the normal, so this
        is a one dimensional maximisation.
        """
        res = minimize_scalar(
            lambda t: -float(self(t)) * np.cos(t - angle),
            bounds=(angle - np.pi / 2, angle + np.pi / 2),
            method="bounded",
            options={"xatol": 1e-12},
        )
        # the bounded search is local; guard it with a coarse scan
        ts = np.linspace(angle - np.pi / 2, angle + np.pi / 2, 721)
        coarse = np.max(self(ts) * np.cos(ts - angle))
        return float(max(-res.fun, coarse))


@dataclass(frozen=True)
class RoundProfile(NormProfile):
    """Euclidean unit ball."""

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        one = np.ones_like(theta)
        return one, 0.0 * one, 0.0 * one

    def support(self, angle: float) -> float:
        return 1.0


@dataclass(frozen=True)
class SuperellipsoidProfile(NormProfile):
    """Blend of the Euclidean norm and a superellipsoid-of-revolution gauge.

    The gauge of a unit direction at latitude ``theta`` is
    ``(1 - blend) + blend * (|cos theta|**p + |sin theta|**p) ** (1/p)``.
    ``blend = 1`` gives the pure superellipsoid ``(x^2+y^2)^(p/2) + |z|^p = 1``
    (in 2D the superellipse ``|x|^p + |y|^p = 1``), which for ``p != 2`` has
    flat points on the axes. Any ``blend < 1`` yields a unit ball with
    strictly positive curvature.
    """

    p: float = 4.0
    blend: float = 0.5

    def __post_init__(self):
        if self.p < 2:
            raise DomainError(f"superellipsoid exponent must be >= 2, got {self.p}")
        if not 0.0 <= self.blend <= 1.0:
            raise DomainError(f"blend must lie in [0, 1], got {self.blend}")

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        p, t = self.p, self.blend
        c, s = np.cos(theta), np.sin(theta)
        ac, as_ = np.abs(c), np.abs(s)
        w = ac**p + as_**p
        w1 = p * c * s * (as_ ** (p - 2) - ac ** (p - 2))
        w2 = p * (
            np.cos(2 * theta) * (as_ ** (p - 2) - ac ** (p - 2))
            + (p - 2) * (c**2 * as_ ** (p - 2) + s**2 * ac ** (p - 2))
        )
        q = 1.0 / p
        n0 = (1 - t) + t * w**q
        n1 = t * q * w ** (q - 1) * w1
        n2 = t * q * ((q - 1) * w ** (q - 2) * w1**2 + w ** (q - 1) * w2)
        rho = 1.0 / n0
        return rho, -n1 / n0**2, -n2 / n0**2 + 2 * n1**2 / n0**3


@dataclass(frozen=True, eq=False)
class SplineProfile(NormProfile):
    """Cubic interpolant of tabulated ``(theta, rho)`` samples."""

    theta: np.ndarray
    rho: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        rh = np.asarray(self.rho, dtype=float)
        order = np.argsort(th)
        th, rh = th[order], rh[order]
        if th.size < 4:
            raise DomainError("profile table needs at least 4 samples")
        if np.any(rh <= 0):
            raise DomainError("profile values must be strictly positive")
        if th[0] > -np.pi / 2 + 1e-9 or th[-1] < np.pi / 2 - 1e-9:
            raise DomainError("profile table must cover [-pi/2, pi/2]")
        spline = CubicSpline(th, rh)
        probe = np.linspace(-np.pi / 2, np.pi / 2, 201)
        if np.max(np.abs(spline(probe) - spline(-probe))) > 1e-6 * np.max(rh):
            raise DomainError("profile must be even in theta (o-symmetric unit ball)")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "rho", rh)
        object.__setattr__(self, "_spline", spline)

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        sp = self._spline
        return sp(theta), sp(theta, 1), sp(theta, 2)


def load_profile_csv(path: str | Path) -> SplineProfile:
    """Read a ``theta,rho`` table (header optional) into a :class:`SplineProfile`."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header line
    if not rows:
        raise DomainError(f"{path}: no numeric (theta, rho) rows")
    arr = np.array(rows)
    return SplineProfile(arr[:, 0], arr[:, 1])


def builtin_profile(name: str, **params) -> NormProfile:
    if name in ("sphere", "round", "euclidean"):
        return RoundProfile()
    if name == "superellipsoid":
        return SuperellipsoidProfile(**params)
    raise DomainError(f"unknown norm profile {name!r}")


# ---------------------------------------------------------------------------
# Space descriptor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceKind:
    geometry: Geometry
    dim: int = 3
    normed_profile: NormProfile | None = None

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        if self.dim not in (2, 3):
            raise DomainError(f"dim must be 2 or 3, got {self.dim}")
        if (self.geometry is Geometry.NORMED) != (self.normed_profile is not None):
            raise DomainError("normed_profile is required exactly for the normed geometry")

    @classmethod
    def euclidean(cls, dim: int = 3) -> SpaceKind:
        return cls(Geometry.EUCLIDEAN, dim)

    @classmethod
    def spherical(cls, dim: int = 3) -> SpaceKind:
        return cls(Geometry.SPHERICAL, dim)

    @classmethod
    def hyperbolic(cls, dim: int = 3) -> SpaceKind:
        return cls(Geometry.HYPERBOLIC, dim)

    @classmethod
    def normed(cls, profile: NormProfile, dim: int = 3) -> SpaceKind:
        return cls(Geometry.NORMED, dim, profile)

    @property
    def curved(self) -> bool:
        return self.geometry in (Geometry.SPHERICAL, Geometry.HYPERBOLIC)

    def describe(self) -> str:
        if self.geometry is Geometry.NORMED:
            return f"normed{self.dim}d[{self.normed_profile!r}]"
        return f"{self.geometry.value}{self.dim}d"


@dataclass(frozen=True)
class OrientedGeodesicHyperplane:
    """Chart hyperplane ``{x : normal . x = offset}`` oriented by ``normal``."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise DomainError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)


# ---------------------------------------------------------------------------
# Point-wise chart quantities
# ---------------------------------------------------------------------------

def _points(space: SpaceKind, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != space.dim:
        raise DomainError(f"expected chart points of dimension {space.dim}, got shape {p.shape}")
    if space.geometry is Geometry.HYPERBOLIC and np.any(np.sum(p * p, axis=-1) >= 1.0):
        raise DomainError("hyperbolic chart points must lie in the open unit ball")
    return p


def _direction_angle(space: SpaceKind, p: np.ndarray) -> np.ndarray:
    """Angle fed to the norm profile: latitude in 3D, polar angle in 2D."""
    if space.dim == 3:
        return np.arctan2(p[..., 2], np.hypot(p[..., 0], p[..., 1]))
    return np.arctan2(p[..., 1], p[..., 0])


def gauge(space: SpaceKind, v) -> np.ndarray:
    """Norm of chart vectors ``v`` in a normed space: ``|v| / rho_M(direction)``."""
    v = np.asarray(v, dtype=float)
    prof = space.normed_profile
    if prof is None:
        return np.linalg.norm(v, axis=-1)
    return np.linalg.norm(v, axis=-1) / prof(_direction_angle(space, v))


def dist_from_origin(space: SpaceKind, p) -> np.ndarray:
    p = _points(space, p)
    r = np.linalg.norm(p, axis=-1)
    g = space.geometry
    if g is Geometry.SPHERICAL:
        return np.arctan(r)
    if g is Geometry.HYPERBOLIC:
        return np.arctanh(r)
    if g is Geometry.NORMED:
        return gauge(space, p)
    return r


def chart_radius(space: SpaceKind, dist) -> np.ndarray:
    """Chart radius of the point at geodesic distance ``dist`` from the origin.

    Inverse of :func:`dist_from_origin` along a ray; for normed spaces the
    result depends on the direction, so only the Euclidean value is returned.
    """
    dist = np.asarray(dist, dtype=float)
    if space.geometry is Geometry.SPHERICAL:
        return np.tan(dist)
    if space.geometry is Geometry.HYPERBOLIC:
        return np.tanh(dist)
    return dist


def volume_weight(space: SpaceKind, p) -> np.ndarray:
    p = _points(space, p)
    r2 = np.sum(p * p, axis=-1)
    expo = -(space.dim + 1) / 2.0
    if space.geometry is Geometry.SPHERICAL:
        return (1.0 + r2) ** expo
    if space.geometry is Geometry.HYPERBOLIC:
        return (1.0 - r2) ** expo
    return np.ones_like(r2)


def moment_weight_x3(space: SpaceKind, p) -> np.ndarray:
    """Signed first-moment density w.r.t. the chart plane ``x3 = 0``."""
    if space.dim != 3:
        raise DomainError("moment_weight_x3 is defined for dim = 3 only")
    p = _points(space, p)
    r2 = np.sum(p * p, axis=-1)
    x3 = p[..., 2]
    if space.geometry is Geometry.SPHERICAL:
        return x3 * (1.0 + r2) ** -2.5
    if space.geometry is Geometry.HYPERBOLIC:
        return x3 * (1.0 - r2) ** -2.5
    return x3.copy()


def lorentz(a, b) -> np.ndarray:
    """Lorentz form ``x1 y1 + ... + xd yd - x_{d+1} y_{d+1}``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a[..., :-1] * b[..., :-1], axis=-1) - a[..., -1] * b[..., -1]


def embed(space: SpaceKind, p) -> np.ndarray:
    p = _points(space, p)
    if not space.curved:
        return p.copy()
    r2 = np.sum(p * p, axis=-1, keepdims=True)
    scale = 1.0 / np.sqrt(1.0 + r2) if space.geometry is Geometry.SPHERICAL else 1.0 / np.sqrt(1.0 - r2)
    return np.concatenate([p * scale, scale], axis=-1)


def unembed(space: SpaceKind, y) -> np.ndarray:
    """Chart coordinates of embedded points (central projection to ``x_{d+1} = 1``)."""
    y = np.asarray(y, dtype=float)
    if not space.curved:
        return y.copy()
    last = y[..., -1:]
    if np.any(last <= 0):
        raise DomainError("embedded point outside the charted hemisphere / sheet")
    return y[..., :-1] / last


def distance(space: SpaceKind, p, q) -> np.ndarray:
    """Geodesic distance between chart points (well conditioned for close points)."""
    p = _points(space, p)
    q = _points(space, q)
    g = space.geometry
    if g is Geometry.SPHERICAL:
        chord = np.linalg.norm(embed(space, p) - embed(space, q), axis=-1)
        return 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))
    if g is Geometry.HYPERBOLIC:
        diff = embed(space, p) - embed(space, q)
        return 2.0 * np.arcsinh(np.sqrt(np.maximum(lorentz(diff, diff), 0.0)) / 2.0)
    if g is Geometry.NORMED:
        return gauge(space, q - p)
    return np.linalg.norm(q - p, axis=-1)


def dual_norm(space: SpaceKind, normal) -> float:
    """Support function of the unit ball at a unit ``normal`` (1 for non-normed)."""
    prof = space.normed_profile
    if prof is None:
        return 1.0
    n = np.asarray(normal, dtype=float)
    if space.dim == 3:
        angle = float(np.arctan2(n[2], np.hypot(n[0], n[1])))
    else:
        angle = float(np.arctan2(n[1], n[0]))
    return prof.support(angle)


def sin_signed_distance(space: SpaceKind, h: OrientedGeodesicHyperplane, p) -> np.ndarray:
    """sin / sinh / plain signed distance of ``p`` to a hyperplane through the origin.

    Spherical and hyperbolic values are the (Lorentz) inner product of the
    embedded point with the embedded unit normal ``(n, 0)``; in a normed space
    the distance to a hyperplane is the Euclidean one divided by the
    support function of the unit ball at the normal.
    """
    if abs(h.offset) > 1e-14:
        raise DomainError("hyperplane must pass through the chart origin")
    p = _points(space, p)
    n = h.normal
    proj = p @ n
    if space.geometry is Geometry.SPHERICAL:
        return proj / np.sqrt(1.0 + np.sum(p * p, axis=-1))
    if space.geometry is Geometry.HYPERBOLIC:
        return proj / np.sqrt(1.0 - np.sum(p * p, axis=-1))
    if space.geometry is Geometry.NORMED:
        return proj / dual_norm(space, n)
    return proj


# ---------------------------------------------------------------------------
# Isometries
# ---------------------------------------------------------------------------

def _plane_rotation(u: np.ndarray, v: np.ndarray, cos_a: float, sin_a: float) -> np.ndarray:
    """Rotation by angle a in the plane of orthonormal u, v taking u towards v."""
    n = u.size
    return (
        np.eye(n)
        + (cos_a - 1.0) * (np.outer(u, u) + np.outer(v, v))
        + sin_a * (np.outer(v, u) - np.outer(u, v))
    )


def center_isometry(space: SpaceKind, p) -> Callable[[np.ndarray], np.ndarray]:
    """Isometry in chart coordinates sending the chart point ``p`` to the origin.

    Spherical: the rotation of S^d in the plane of embed(p) and the pole.
    Hyperbolic: the Lorentz boost along the geodesic through o and p.
    Euclidean / normed: translation.
    """
    p = _points(space, p).reshape(space.dim)
    if not space.curved:
        return lambda x: np.asarray(x, dtype=float) - p

    r = float(np.linalg.norm(p))
    if r == 0.0:
        return lambda x: _points(space, x).copy()
    d = space.dim
    pole = np.zeros(d + 1)
    pole[-1] = 1.0
    axis = np.zeros(d + 1)
    axis[:d] = p / r
    if space.geometry is Geometry.SPHERICAL:
        q = embed(space, p)
        # q = cos(a) pole + sin(a) axis; turning axis towards pole by a sends q to the pole
        mat = _plane_rotation(axis, pole, q[-1], np.dot(q, axis))
    else:
        ch = 1.0 / np.sqrt(1.0 - r * r)
        sh = r * ch
        mat = (
            np.eye(d + 1)
            + (ch - 1.0) * (np.outer(axis, axis) + np.outer(pole, pole))
            - sh * (np.outer(axis, pole) + np.outer(pole, axis))
        )

    def iso(x):
        y = embed(space, x) @ mat.T
        return unembed(space, y)

    return iso
