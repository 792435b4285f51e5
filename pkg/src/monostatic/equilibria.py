"""Equilibrium points, curvature and the mono-monostatic certificate.

Equilibria of a body with respect to a reference point are the critical
points of the distance from the reference point to the boundary, viewed as
a function of the boundary parameter (a direction on S^2, or an angle in
2D). Stable points are minima, unstable points maxima.
"""
from __future__ import annotations

import enum
import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from . import spaces
from .gomboc import GombocParams, build_body
from .integrate import (
    DEFAULT_SPEC,
    QuadratureSpec,
    bracketed_root,
    centroid,
    find_centering_c,
    first_moment_M3,
)
from .radial import RadialBody, direction_angles, unit_vectors
from .spaces import DomainError, Geometry, SpaceKind

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps
GRAD_STEP = 1e-5
HESS_STEP = 1e-4
CURV_STEP = 2e-4
MERGE_RADIUS = 1e-3
DEGENERATE_REL = 1e-8
CURVATURE_MARGIN = 1e-6
HEMISPHERE_MARGIN = 0.2
POLE_CAP = 0.05


class EquilibriumWarning(UserWarning):
    pass


class HemisphereError(DomainError):
    """A spherical body leaves the open hemisphere around its centroid."""


class PoincareHopfInconclusive(ValueError):
    """The census contains degenerate points, so the index sum is undefined."""


class EquilibriumKind(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    SADDLE = "Saddle"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class EquilibriumPoint:
    location: tuple | float
    distance_value: float
    kind: EquilibriumKind
    hessian_eigenvalues: tuple


@dataclass
class EquilibriumCensus:
    S: int
    H: int
    U: int
    degenerate_count: int
    points: list = field(default_factory=list)

    @classmethod
    def from_points(cls, points: list) -> EquilibriumCensus:
        kinds = [p.kind for p in points]
        return cls(
            S=kinds.count(EquilibriumKind.STABLE),
            H=kinds.count(EquilibriumKind.SADDLE),
            U=kinds.count(EquilibriumKind.UNSTABLE),
            degenerate_count=kinds.count(EquilibriumKind.DEGENERATE),
            points=list(points),
        )

    @property
    def total(self) -> int:
        return self.S + self.H + self.U + self.degenerate_count

    def summary(self) -> dict:
        return {"S": self.S, "H": self.H, "U": self.U, "degenerate": self.degenerate_count}


def classify(eigenvalues, floor: float = 0.0) -> EquilibriumKind:
    ev = np.asarray(eigenvalues, dtype=float)
    scale = np.max(np.abs(ev)) if ev.size else 0.0
    if scale == 0.0 or np.any(np.abs(ev) < max(DEGENERATE_REL * scale, floor)):
        return EquilibriumKind.DEGENERATE
    if np.all(ev > 0):
        return EquilibriumKind.STABLE
    if np.all(ev < 0):
        return EquilibriumKind.UNSTABLE
    return EquilibriumKind.SADDLE


# ---------------------------------------------------------------------------
# Distance profile
# ---------------------------------------------------------------------------

def _check_interior(body: RadialBody, ref: np.ndarray) -> None:
    # only decidable from the radial description when the body is unmoved
    if body.chart_map is not None:
        return
    r = float(np.linalg.norm(ref))
    if r == 0.0:
        return
    if body.dim == 3:
        bound = float(body.radial_dir(ref / r))
    else:
        bound = float(body.radial(np.arctan2(ref[1], ref[0])))
    if r >= bound:
        raise DomainError(f"reference point {ref} is not interior to the body")


def distance_profile(body: RadialBody, ref=None) -> Callable:
    """Geometry distance from ``ref`` to the boundary point with parameter ``u``.

    3D bodies take unit 3-vectors ``u`` (shape (..., 3)), 2D bodies polar
    angles. The body is first moved by the isometry sending ``ref`` to the
    chart origin.
    """
    space = body.space
    ref = np.zeros(space.dim) if ref is None else np.asarray(ref, dtype=float)
    _check_interior(body, ref)
    iso = spaces.center_isometry(space, ref)
    if body.dim == 3:
        def profile(u):
            return spaces.dist_from_origin(space, iso(body.boundary_dir(u)))
    else:
        def profile(phi):
            return spaces.dist_from_origin(space, iso(body.boundary_points(phi)))
    return profile


def chart_radial_profile(body: RadialBody) -> Callable:
    """The chart radial function as a profile (same critical points as the distance)."""
    if body.dim == 3:
        return lambda u: np.linalg.norm(body.boundary_dir(u), axis=-1)
    return lambda phi: np.linalg.norm(body.boundary_points(phi), axis=-1)


# ---------------------------------------------------------------------------
# Tangent-chart calculus on S^2
# ---------------------------------------------------------------------------

def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def tangent_frame(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=float)
    helper = np.where(np.abs(u[..., :1]) < 0.9, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    e1 = _normalize(helper - np.sum(helper * u, axis=-1, keepdims=True) * u)
    return e1, np.cross(u, e1)


def _chart(u, e1, e2, s, t):
    return _normalize(u + np.asarray(s)[..., None] * e1 + np.asarray(t)[..., None] * e2)


def _gradient(D, u, e1, e2, h=GRAD_STEP):
    vals = D(np.stack([_chart(u, e1, e2, h, 0), _chart(u, e1, e2, -h, 0),
                       _chart(u, e1, e2, 0, h), _chart(u, e1, e2, 0, -h)]))
    return np.stack([(vals[0] - vals[1]) / (2 * h), (vals[2] - vals[3]) / (2 * h)], axis=-1)


def _hessian(D, u, e1, e2, h=HESS_STEP):
    offs = [(0, 0), (h, 0), (-h, 0), (0, h), (0, -h), (h, h), (h, -h), (-h, h), (-h, -h)]
    v = D(np.stack([_chart(u, e1, e2, s, t) for s, t in offs]))
    hss = (v[1] - 2 * v[0] + v[2]) / h**2
    htt = (v[3] - 2 * v[0] + v[4]) / h**2
    hst = (v[5] - v[6] - v[7] + v[8]) / (4 * h * h)
    return np.array([[hss, hst], [hst, htt]])


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    rad = np.sqrt(1 - z * z)
    ang = np.pi * (3 - np.sqrt(5)) * i
    return np.stack([rad * np.cos(ang), rad * np.sin(ang), z], axis=-1)


def _edges(points: np.ndarray) -> np.ndarray:
    tri = ConvexHull(points).simplices
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def _strict_local(values: np.ndarray, edges: np.ndarray, mode: str) -> np.ndarray:
    """Vertices strictly below (``"min"``) or above (``"max"``) every neighbour."""
    i, j = edges[:, 0], edges[:, 1]
    ok = np.ones(values.size, dtype=bool)
    if mode == "min":
        bad_i, bad_j = values[i] >= values[j], values[j] >= values[i]
    else:
        bad_i, bad_j = values[i] <= values[j], values[j] <= values[i]
    ok[i[bad_i]] = False
    ok[j[bad_j]] = False
    return np.flatnonzero(ok)


@dataclass
class _Polish:
    u: np.ndarray
    grad_norm: float
    status: str  # "converged", "stalled", "left", "maxiter"


def _newton_polish(D, u0, gtol: float, trust: float, maxiter: int = 40) -> _Polish:
    """Damped Newton iteration for grad D = 0 in the tangent chart.

    Each step must decrease |grad D|; the iterate may not move farther than
    ``trust`` (radians) from the starting point.
    """
    u = np.asarray(u0, dtype=float)
    e1, e2 = tangent_frame(u)
    g = _gradient(D, u, e1, e2)
    gn = float(np.linalg.norm(g))
    for _ in range(maxiter):
        if gn <= gtol:
            return _Polish(u, gn, "converged")
        H = _hessian(D, u, e1, e2)
        step = np.linalg.lstsq(H, -g, rcond=None)[0]
        lam, accepted = 1.0, False
        while lam > 1e-3:
            v = _chart(u, e1, e2, lam * step[0], lam * step[1])
            f1, f2 = tangent_frame(v)
            gv = _gradient(D, v, f1, f2)
            if np.linalg.norm(gv) < gn:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            return _Polish(u, gn, "stalled")
        u, e1, e2, g = v, f1, f2, gv
        gn = float(np.linalg.norm(g))
        if np.arccos(np.clip(np.dot(u, u0), -1.0, 1.0)) > trust:
            return _Polish(u, gn, "left")
    return _Polish(u, gn, "converged" if gn <= gtol else "maxiter")


def _location_3d(u: np.ndarray) -> tuple[float, float]:
    theta, phi = direction_angles(u)
    return float(theta), float(phi)


def _find_equilibria_3d(D, grid: int, gtol: float | None) -> EquilibriumCensus:
    pts = fibonacci_sphere(grid)
    vals = D(pts)
    e1, e2 = tangent_frame(pts)
    gnorm = np.linalg.norm(_gradient(D, pts, e1, e2), axis=-1)
    scale = float(np.max(np.abs(vals)))
    spread = float(np.ptp(vals))
    noise = 64 * EPS * scale / GRAD_STEP
    if gtol is None:
        gtol = max(1e-8 * spread, noise)
    hess_floor = 256 * EPS * scale / HESS_STEP**2
    spacing = float(np.sqrt(4 * np.pi / grid))

    near = gnorm <= gtol
    if near.mean() > 0.5:
        warnings.warn(
            f"degenerate profile: {near.sum()} of {grid} samples are critical within {gtol:.2e}",
            EquilibriumWarning,
            stacklevel=3,
        )
        points = [
            EquilibriumPoint(_location_3d(p), float(v), EquilibriumKind.DEGENERATE, ())
            for p, v in zip(pts[near], vals[near])
        ]
        return EquilibriumCensus.from_points(points)

    edges = _edges(pts)
    seeds = np.concatenate([
        _strict_local(vals, edges, "min"),
        _strict_local(vals, edges, "max"),
        _strict_local(gnorm, edges, "min"),
    ])
    cand = [pts[i] for i in np.unique(seeds)]
    cand += [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]

    near_tol = max(1e-5 * spread, 10 * gtol)
    found: list[tuple[np.ndarray, float, str]] = []
    for u0 in cand:
        res = _newton_polish(D, u0, gtol, trust=4 * spacing)
        if res.status == "converged":
            found.append((res.u, res.grad_norm, "ok"))
        elif res.status != "left" and res.grad_norm <= near_tol:
            found.append((res.u, res.grad_norm, "unconverged"))
        else:
            log.debug("discarded candidate %s (%s, |g| = %.3g)", u0, res.status, res.grad_norm)

    # merge: keep the best-converged representative of each cluster
    found.sort(key=lambda item: item[1])
    kept: list[tuple[np.ndarray, float, str]] = []
    for item in found:
        if all(np.arccos(np.clip(np.dot(item[0], k[0]), -1, 1)) > MERGE_RADIUS for k in kept):
            kept.append(item)

    points = []
    for u, gn, status in kept:
        f1, f2 = tangent_frame(u)
        ev = np.linalg.eigvalsh(_hessian(D, u, f1, f2))
        kind = classify(ev, hess_floor)
        if status == "unconverged":
            warnings.warn(
                f"Newton did not converge at {_location_3d(u)} (|grad| = {gn:.2e}); recorded as degenerate",
                EquilibriumWarning,
                stacklevel=3,
            )
            kind = EquilibriumKind.DEGENERATE
        points.append(EquilibriumPoint(_location_3d(u), float(D(u)), kind, tuple(float(x) for x in ev)))
    points.sort(key=lambda p: p.location)
    return EquilibriumCensus.from_points(points)


def _find_equilibria_2d(D, grid: int, gtol: float | None) -> EquilibriumCensus:
    h = GRAD_STEP
    psi = 2 * np.pi * np.arange(grid) / grid
    vals = D(psi)

    def deriv(x):
        return (D(np.asarray(x) + h) - D(np.asarray(x) - h)) / (2 * h)

    def second(x):
        return (D(x + HESS_STEP) - 2 * D(x) + D(x - HESS_STEP)) / HESS_STEP**2

    dv = deriv(psi)
    scale = float(np.max(np.abs(vals)))
    spread = float(np.ptp(vals))
    if gtol is None:
        gtol = max(1e-8 * spread, 64 * EPS * scale / h)
    floor = 256 * EPS * scale / HESS_STEP**2

    near = np.abs(dv) <= gtol
    if near.mean() > 0.5:
        warnings.warn(
            f"degenerate profile: {near.sum()} of {grid} samples are critical", EquilibriumWarning, stacklevel=3
        )
        return EquilibriumCensus.from_points(
            [EquilibriumPoint(float(p), float(v), EquilibriumKind.DEGENERATE, ()) for p, v in zip(psi[near], vals[near])]
        )

    points = []
    nxt = np.roll(np.arange(grid), -1)
    for i in range(grid):
        j = nxt[i]
        lo, hi = psi[i], psi[i] + 2 * np.pi / grid
        a_, b_ = dv[i], dv[j]
        if a_ == 0.0 or np.sign(a_) != np.sign(b_):
            if a_ == 0.0 and i > 0 and dv[i - 1] == 0.0:
                continue
            res = bracketed_root(lambda x: float(deriv(x)), lo, hi, a_, b_, ftol=gtol, xtol=1e-14)
            x = float(np.mod(res.root, 2 * np.pi))
            # a root sitting on a grid node shows up in both neighbouring cells
            if any(min(abs(x - p.location), 2 * np.pi - abs(x - p.location)) <= MERGE_RADIUS for p in points):
                continue
            d2 = float(second(x))
            kind = classify([d2], floor)
            points.append(EquilibriumPoint(x, float(D(x)), kind, (d2,)))
    # tangential zeros of D' (no sign change) are degenerate critical points
    mag = np.abs(dv)
    prev, after = np.roll(mag, 1), np.roll(mag, -1)
    touch = np.flatnonzero((mag <= gtol) & (mag < prev) & (mag <= after) & (np.sign(np.roll(dv, 1)) == np.sign(np.roll(dv, -1))))
    for i in touch:
        x = float(psi[i])
        if all(min(abs(x - p.location), 2 * np.pi - abs(x - p.location)) > MERGE_RADIUS for p in points):
            warnings.warn(f"tangential critical point near phi = {x:.6f}", EquilibriumWarning, stacklevel=3)
            points.append(EquilibriumPoint(x, float(vals[i]), EquilibriumKind.DEGENERATE, (float(second(x)),)))
    points.sort(key=lambda p: p.location)
    return EquilibriumCensus.from_points(points)


def find_equilibria(body: RadialBody, ref=None, grid: int | None = None, tol: float | None = None,
                    profile: Callable | None = None) -> EquilibriumCensus:
    """Critical points of the distance profile of ``body`` seen from ``ref``.

    3D: a Fibonacci point set of ``grid`` directions (default 40000) is
    scanned for discrete extrema and local minima of the gradient norm; the
    poles are always added as seeds. Each seed is polished by damped Newton
    in a tangent chart and classified by the eigenvalues of the Hessian in
    that chart. 2D: sign changes of the derivative on ``grid`` angles
    (default 4096), refined by bracketing.

    ``tol`` is the gradient-norm tolerance; the default scales with the
    range of the profile and the finite-difference noise level.
    ``profile`` overrides the distance profile (e.g. with the chart radial
    function, which has the same critical points).
    """
    D = profile if profile is not None else distance_profile(body, ref)
    if body.dim == 3:
        return _find_equilibria_3d(D, grid or 40000, tol)
    return _find_equilibria_2d(D, grid or 4096, tol)


def poincare_hopf_check(census: EquilibriumCensus, dim: int) -> bool:
    """S - U = 0 on a closed curve, S - H + U = 2 on a sphere."""
    if census.degenerate_count > 0:
        raise PoincareHopfInconclusive(
            f"{census.degenerate_count} degenerate equilibria: index sum undefined"
        )
    if dim == 2:
        return census.S - census.U == 0
    if dim == 3:
        return census.S - census.H + census.U == 2
    raise ValueError(f"dim must be 2 or 3, got {dim}")


def count_equilibria_2d(body: RadialBody, space: SpaceKind | None = None, grid: int = 4096,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> EquilibriumCensus:
    """Census of a planar body with respect to its own centroid."""
    if body.dim != 2:
        raise DomainError("count_equilibria_2d needs a 2D body")
    if space is not None and space != body.space:
        raise DomainError("space does not match the body's space")
    space = body.space
    c = centroid(body, spec)
    iso = spaces.center_isometry(space, c)
    psi = 2 * np.pi * np.arange(grid) / grid
    if space.geometry is Geometry.SPHERICAL:
        try:
            moved = iso(body.boundary_points(psi))
        except DomainError as exc:
            raise HemisphereError("body leaves the hemisphere around its centroid") from exc
        limit = np.tan(np.pi / 2 - HEMISPHERE_MARGIN)
        if np.max(np.linalg.norm(moved, axis=-1)) >= limit:
            raise HemisphereError(
                f"body reaches chart radius >= tan(pi/2 - {HEMISPHERE_MARGIN}) around its centroid"
            )
    return find_equilibria(body, c, grid=grid)


# ---------------------------------------------------------------------------
# Curvature
# ---------------------------------------------------------------------------

def _curvature_from_derivatives(Xs, Xt, Xss, Xst, Xtt) -> np.ndarray:
    n = np.cross(Xs, Xt)
    n = n / np.linalg.norm(n, axis=-1, keepdims=True)
    E = np.sum(Xs * Xs, -1)
    F_ = np.sum(Xs * Xt, -1)
    G = np.sum(Xt * Xt, -1)
    L = np.sum(Xss * n, -1)
    M = np.sum(Xst * n, -1)
    N = np.sum(Xtt * n, -1)
    return (L * N - M * M) / (E * G - F_ * F_)


def _curvature_analytic(body: RadialBody, theta, phi) -> np.ndarray:
    r, r_t, r_p, r_tt, r_tp, r_pp = (np.asarray(v, dtype=float) for v in body.partials(theta, phi))
    ct, st, cp, sp_ = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    zero = np.zeros_like(ct * cp)
    u = unit_vectors(theta, phi)
    u_t = np.stack(np.broadcast_arrays(-st * cp, -st * sp_, ct), -1)
    u_p = np.stack(np.broadcast_arrays(-ct * sp_, ct * cp, zero), -1)
    u_tp = np.stack(np.broadcast_arrays(st * sp_, -st * cp, zero), -1)
    u_pp = np.stack(np.broadcast_arrays(-ct * cp, -ct * sp_, zero), -1)
    e = lambda a: a[..., None]  # noqa: E731
    Xt = e(r_t) * u + e(r) * u_t
    Xp = e(r_p) * u + e(r) * u_p
    Xtt = e(r_tt) * u + 2 * e(r_t) * u_t - e(r) * u
    Xtp = e(r_tp) * u + e(r_t) * u_p + e(r_p) * u_t + e(r) * u_tp
    Xpp = e(r_pp) * u + 2 * e(r_p) * u_p + e(r) * u_pp
    return _curvature_from_derivatives(Xt, Xp, Xtt, Xtp, Xpp)


def _curvature_fd(body: RadialBody, u: np.ndarray, h: float = CURV_STEP) -> np.ndarray:
    """Curvature of the chart surface in the tangent chart around direction ``u``."""
    e1, e2 = tangent_frame(u)
    X = lambda s, t: body.boundary_dir(_chart(u, e1, e2, s, t))  # noqa: E731
    x0 = X(0, 0)
    xp0, xm0, x0p, x0m = X(h, 0), X(-h, 0), X(0, h), X(0, -h)
    xpp, xpm, xmp, xmm = X(h, h), X(h, -h), X(-h, h), X(-h, -h)
    Xs = (xp0 - xm0) / (2 * h)
    Xt = (x0p - x0m) / (2 * h)
    Xss = (xp0 - 2 * x0 + xm0) / h**2
    Xtt = (x0p - 2 * x0 + x0m) / h**2
    Xst = (xpp - xpm - xmp + xmm) / (4 * h * h)
    return _curvature_from_derivatives(Xs, Xt, Xss, Xst, Xtt)


def gaussian_curvature(body: RadialBody, theta, phi, method: str = "auto") -> np.ndarray:
    """Euclidean Gaussian curvature of the chart boundary surface at (theta, phi).

    ``method="auto"`` uses the analytic radial partials when the body has
    them, except within a cap of the poles where the latitude/longitude
    parametrisation degenerates; there, and with ``method="fd"``, second
    differences in a tangent chart are used.
    """
    if body.dim != 3:
        raise DomainError("gaussian_curvature needs a 3D body")
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    out = np.empty(theta.shape)
    use_analytic = (
        method != "fd" and body.partials is not None and body.chart_map is None
    )
    cap = np.abs(theta) > np.pi / 2 - POLE_CAP
    mask = ~cap if use_analytic else np.zeros(theta.shape, dtype=bool)
    if method == "analytic" and not use_analytic:
        raise DomainError("analytic curvature needs radial partials of an unmoved body")
    if np.any(mask):
        out[mask] = _curvature_analytic(body, theta[mask], phi[mask])
    if np.any(~mask):
        out[~mask] = _curvature_fd(body, unit_vectors(theta[~mask], phi[~mask]))
    if not np.all(np.isfinite(out)):
        raise DomainError("non-finite curvature: radial function or partials not finite")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CurvatureMin:
    value: float
    theta: float
    phi: float


def min_curvature(body: RadialBody, grid: tuple[int, int] = (129, 256), polish: bool = True) -> CurvatureMin:
    """Minimum Gaussian curvature over a latitude/longitude grid (poles included)."""
    nt, npf = grid
    th = np.linspace(-np.pi / 2, np.pi / 2, nt)
    ph = 2 * np.pi * np.arange(npf) / npf
    T, P = np.meshgrid(th[1:-1], ph, indexing="ij")
    K = gaussian_curvature(body, T, P)
    poles = gaussian_curvature(body, np.array([-np.pi / 2, np.pi / 2]), np.zeros(2))
    i = np.unravel_index(np.argmin(K), K.shape)
    best = CurvatureMin(float(K[i]), float(T[i]), float(P[i]))
    for val, t in zip(poles, (-np.pi / 2, np.pi / 2)):
        if val < best.value:
            best = CurvatureMin(float(val), t, 0.0)
    if polish:
        fun = lambda x: float(gaussian_curvature(body, np.clip(x[0], -np.pi / 2, np.pi / 2), x[1]))  # noqa: E731
        res = minimize(fun, [best.theta, best.phi], method="Nelder-Mead",
                       options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 400})
        if res.fun < best.value:
            best = CurvatureMin(float(res.fun), float(np.clip(res.x[0], -np.pi / 2, np.pi / 2)), float(res.x[1] % (2 * np.pi)))
    return best


def _hyperbolic_cap(R: float) -> float:
    return float(np.nextafter(1.0 / R - 1.0, 0.0))


def find_dstar(c_range, R: float, space: SpaceKind, grid: int = 5,
               curvature_grid: tuple[int, int] = (65, 128), tol: float = 1e-4) -> float:
    """Largest d in [0, 0.5] (to ``tol``) with curvature > margin for every c on the grid.

    Bisection assumes the unsafe set in d is an up-set; the returned value is
    always one at which the check passed (or 0).
    """
    cs = np.linspace(c_range[0], c_range[1], grid)

    def safe(d: float) -> bool:
        for c in cs:
            body = build_body(GombocParams(float(c), d, R, space))
            if min_curvature(body, curvature_grid).value <= CURVATURE_MARGIN:
                return False
        return True

    hi = 0.5
    if space.geometry is Geometry.HYPERBOLIC:
        hi = min(hi, _hyperbolic_cap(R))
    if safe(hi):
        return hi
    lo = 0.0
    while hi - lo > tol * max(lo, 1e-3):
        mid = 0.5 * (lo + hi)
        if safe(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Hausdorff distance to a ball
# ---------------------------------------------------------------------------

def ball_geodesic_radius(space: SpaceKind, R: float) -> float:
    if space.geometry is Geometry.SPHERICAL:
        return float(np.arctan(R))
    if space.geometry is Geometry.HYPERBOLIC:
        return float(np.arctanh(R))
    return float(R)


def hausdorff_to_ball(body: RadialBody, R: float, grid: tuple[int, int] = (181, 360)) -> float:
    """Upper bound on the Hausdorff distance between ``body`` and the ball of chart radius ``R``.

    Both sets are taken around the chart origin; the returned value is the
    maximal radial gap (in the geometry's distance) over a grid, plus a
    Lipschitz margin covering the gaps between grid nodes. In a normed
    space the ball is the norm ball of radius ``R``.
    """
    space = body.space
    target = ball_geodesic_radius(space, R)
    profile = distance_profile(body)
    if body.dim == 3:
        nt, npf = grid
        th = np.linspace(-np.pi / 2, np.pi / 2, nt)
        ph = 2 * np.pi * np.arange(npf + 1) / npf
        T, P = np.meshgrid(th, ph, indexing="ij")
        gap = np.abs(profile(unit_vectors(T, P)) - target)
        dt, dp = th[1] - th[0], ph[1] - ph[0]
        slope_t = np.max(np.abs(np.diff(gap, axis=0))) / dt
        slope_p = np.max(np.abs(np.diff(gap, axis=1))) / dp  # arc length <= dp
        lip = 1.5 * max(slope_t, slope_p)
        margin = lip * 0.5 * np.hypot(dt, dp)
    else:
        n = grid[1]
        ph = 2 * np.pi * np.arange(n + 1) / n
        gap = np.abs(profile(ph) - target)
        dp = ph[1] - ph[0]
        margin = 1.5 * np.max(np.abs(np.diff(gap))) / dp * 0.5 * dp
    return float(np.max(gap) + margin)


# ---------------------------------------------------------------------------
# Certificate
# ---------------------------------------------------------------------------

@dataclass
class Certificate:
    params: dict
    c_star: float | None = None
    centroid_residual: float | None = None
    census: dict | None = None
    min_curvature: float | None = None
    min_curvature_at: list | None = None
    hausdorff: float | None = None
    M3: float | None = None
    passed: dict = field(default_factory=lambda: dict.fromkeys("ABCDE", False))
    errors: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "c_star": self.c_star,
            "centroid_residual": self.centroid_residual,
            "census": self.census,
            "min_curvature": self.min_curvature,
            "min_curvature_at": self.min_curvature_at,
            "hausdorff": self.hausdorff,
            "M3": self.M3,
            "pass": dict(self.passed),
            "errors": dict(self.errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _smoothness_check(body: RadialBody, n: int = 200, seed: int = 0) -> bool:
    """Finite C^2 data, analytic second partials matching finite differences."""
    rng = np.random.default_rng(seed)
    th = rng.uniform(-np.pi / 2 + POLE_CAP, np.pi / 2 - POLE_CAP, n)
    ph = rng.uniform(0, 2 * np.pi, n)
    parts = [np.asarray(p) for p in body.partials(th, ph)]
    if not all(np.all(np.isfinite(p)) for p in parts):
        return False
    h = 1e-4
    r = body.radial
    fd_tt = (r(th + h, ph) - 2 * r(th, ph) + r(th - h, ph)) / h**2
    fd_pp = (r(th, ph + h) - 2 * r(th, ph) + r(th, ph - h)) / h**2
    fd_tp = (r(th + h, ph + h) - r(th + h, ph - h) - r(th - h, ph + h) + r(th - h, ph - h)) / (4 * h * h)
    scale = 1.0 + np.max(np.abs(np.concatenate(parts[3:])))
    err = max(np.max(np.abs(fd_tt - parts[3])), np.max(np.abs(fd_tp - parts[4])), np.max(np.abs(fd_pp - parts[5])))
    return bool(err <= 1e-3 * scale)


def _auto_d(R: float, space: SpaceKind, spec: QuadratureSpec) -> float:
    c0 = find_centering_c(1e-3, R, space, spec=spec)
    return 0.5 * find_dstar((0.95 * c0, min(1.0, 1.05 * c0)), R, space)


def certify_mono_monostatic(
    params: GombocParams | dict,
    eps: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    moment_tol: float = 1e-10,
    centroid_tol: float = 1e-6,
    equilibria_grid: int = 40000,
    curvature_grid: tuple[int, int] = (129, 256),
) -> Certificate:
    """Run the construction for K(c, d) and check conditions (A)-(E).

    ``params`` may be a dict with ``d="auto"``, in which case half of the
    certified convexity threshold d* is used. ``params.c`` only seeds the
    record; the body is rebuilt at the centering root c*.

    (A) C^2 boundary data, (B) exactly one stable point (south pole) and one
    unstable point (north pole), (C) Gaussian curvature > 1e-6,
    (D) centroid at the origin, (E) Hausdorff distance to the ball <= eps.
    Failures of any stage are recorded, never raised.
    """
    if isinstance(params, dict):
        p = dict(params)
        space = p["space"]
        if p.get("d") == "auto":
            p["d"] = _auto_d(p["R"], space, spec)
        params = GombocParams(p.get("c", 1.0), float(p["d"]), float(p["R"]), space)
    cert = Certificate(params={"c": params.c, "d": params.d, "R": params.R, "space": params.space.describe(), "eps": eps})
    space, d, R = params.space, params.d, params.R

    try:
        c_star = find_centering_c(d, R, space, tol=min(moment_tol, 1e-12), spec=spec)
        cert.c_star = c_star
        body = build_body(GombocParams(c_star, d, R, space))
    except Exception as exc:  # noqa: BLE001
        cert.errors["centering"] = f"{type(exc).__name__}: {exc}"
        return cert

    try:
        cert.passed["A"] = _smoothness_check(body)
    except Exception as exc:  # noqa: BLE001
        cert.errors["A"] = f"{type(exc).__name__}: {exc}"

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", EquilibriumWarning)
            census = find_equilibria(body, np.zeros(3), grid=equilibria_grid)
        for w in caught:
            log.warning("%s", w.message)
        cert.census = census.summary()
        at_poles = all(
            abs(abs(p.location[0]) - np.pi / 2) < 1e-6
            and (p.kind is EquilibriumKind.STABLE) == (p.location[0] < 0)
            for p in census.points
        )
        cert.passed["B"] = (census.S, census.H, census.U, census.degenerate_count) == (1, 0, 1, 0) and at_poles
    except Exception as exc:  # noqa: BLE001
        cert.errors["B"] = f"{type(exc).__name__}: {exc}"

    try:
        cm = min_curvature(body, curvature_grid)
        cert.min_curvature = cm.value
        cert.min_curvature_at = [cm.theta, cm.phi]
        cert.passed["C"] = cm.value > CURVATURE_MARGIN
    except Exception as exc:  # noqa: BLE001
        cert.errors["C"] = f"{type(exc).__name__}: {exc}"

    try:
        cen = centroid(body, spec)
        cert.centroid_residual = float(spaces.distance(space, cen, np.zeros(3)))
        cert.M3 = first_moment_M3(body, spec).value
        cert.passed["D"] = cert.centroid_residual < centroid_tol and abs(cert.M3) < moment_tol
    except Exception as exc:  # noqa: BLE001
        cert.errors["D"] = f"{type(exc).__name__}: {exc}"

    try:
        cert.hausdorff = hausdorff_to_ball(body, R)
        cert.passed["E"] = cert.hausdorff <= eps
    except Exception as exc:  # noqa: BLE001
        cert.errors["E"] = f"{type(exc).__name__}: {exc}"
    return cert
