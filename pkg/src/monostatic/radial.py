"""Star-shaped bodies described by a radial function around the chart origin."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .spaces import SpaceKind


def unit_vectors(theta, phi) -> np.ndarray:
    """``(cos t cos p, cos t sin p, sin t)`` stacked on the last axis."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct = np.cos(theta)
    return np.stack(np.broadcast_arrays(ct * np.cos(phi), ct * np.sin(phi), np.sin(theta)), axis=-1)


def direction_angles(u) -> tuple[np.ndarray, np.ndarray]:
    """Latitude/longitude of (not necessarily unit) 3-vectors."""
    u = np.asarray(u, dtype=float)
    theta = np.arctan2(u[..., 2], np.hypot(u[..., 0], u[..., 1]))
    phi = np.arctan2(u[..., 1], u[..., 0])
    return theta, phi


@dataclass(frozen=True)
class RadialBody:
    """Body ``{lambda u : 0 <= lambda <= radial(u)}`` in chart coordinates.

    In 3D ``radial(theta, phi)`` takes latitude ``theta`` in [-pi/2, pi/2]
    and longitude ``phi``; in 2D ``radial(phi)`` takes the polar angle.
    ``partials`` (optional) returns the radial value together with its
    first and second partial derivatives: ``(r, r_t, r_p, r_tt, r_tp, r_pp)``
    in 3D and ``(r, r', r'')`` in 2D.

    ``chart_map`` is an isometry (in chart coordinates) applied after the
    radial description; it lets a body be moved without re-parametrising it.
    """

    space: SpaceKind
    radial: Callable
    partials: Callable | None = None
    chart_map: Callable | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return self.space.dim

    def radial_dir(self, u) -> np.ndarray:
        """Radial value in the direction of the 3-vectors ``u`` (3D only)."""
        theta, phi = direction_angles(u)
        return np.asarray(self.radial(theta, phi), dtype=float)

    def boundary_points(self, *angles) -> np.ndarray:
        """Chart boundary points at the given direction angles (after ``chart_map``)."""
        if self.dim == 3:
            theta, phi = angles
            pts = np.asarray(self.radial(theta, phi))[..., None] * unit_vectors(theta, phi)
        else:
            (phi,) = angles
            phi = np.asarray(phi, dtype=float)
            r = np.asarray(self.radial(phi))
            pts = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
        return self.chart_map(pts) if self.chart_map is not None else pts

    def boundary_dir(self, u) -> np.ndarray:
        """Chart boundary points along the 3-vectors ``u``."""
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u, axis=-1, keepdims=True)
        pts = self.radial_dir(u)[..., None] * u
        return self.chart_map(pts) if self.chart_map is not None else pts

    def moved(self, isometry: Callable) -> RadialBody:
        """The image of this body under a chart isometry."""
        if self.chart_map is None:
            new_map = isometry
        else:
            inner = self.chart_map
            new_map = lambda x: isometry(inner(x))  # noqa: E731
        return replace(self, chart_map=new_map, partials=None)
