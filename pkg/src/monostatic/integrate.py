"""Quadrature over radial bodies: first moments, centroids and centering.

Bodies are integrated in chart polar coordinates around the chart origin:
Gauss-Legendre in latitude and radius, the periodic trapezoid rule in
longitude. Error estimates come from doubling every node count.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import roots_legendre

from . import spaces
from .gomboc import build_body_unchecked, rho0
from .radial import RadialBody, unit_vectors
from .spaces import DomainError, Geometry, OrientedGeodesicHyperplane, SpaceKind

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps
SWEEP_HEADER = ["c", "d", "R", "space", "M3", "err", "n_theta", "n_phi", "n_r"]


class NoSignChange(RuntimeError):
    """No bracket for the centering root was found."""


@dataclass(frozen=True)
class QuadratureSpec:
    n_theta: int = 64
    n_phi: int = 128
    n_r: int = 32
    richardson: bool = True

    def __post_init__(self):
        if self.n_theta < 16 or self.n_phi < 32 or self.n_r < 16:
            raise ValueError(
                f"quadrature too coarse: need n_theta>=16, n_phi>=32, n_r>=16, got {self}"
            )

    def doubled(self) -> QuadratureSpec:
        return replace(self, n_theta=2 * self.n_theta, n_phi=2 * self.n_phi, n_r=2 * self.n_r)


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class MomentReport:
    value: float
    error_estimate: float
    spec: QuadratureSpec


def _gauss(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _chunks(n: int, jobs: int) -> list[slice]:
    jobs = max(1, min(int(jobs), n))
    edges = np.linspace(0, n, jobs + 1).astype(int)
    return [slice(edges[i], edges[i + 1]) for i in range(jobs)]


def _run_chunks(fn: Callable[[slice], tuple], n: int, jobs: int):
    """Evaluate ``fn`` on row blocks and add the partial sums in block order."""
    blocks = _chunks(n, jobs)
    if len(blocks) == 1:
        parts = [fn(blocks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(fn, blocks))
    total = parts[0]
    for part in parts[1:]:
        total = tuple(t + p for t, p in zip(total, part))
    return total


def _with_error(coarse: np.ndarray, fine: np.ndarray, abs_fine: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Richardson-style error |I(n) - I(2n)|, floored at the summation roundoff."""
    return fine, np.maximum(np.abs(fine - coarse), 64 * EPS * abs_fine)


# ---------------------------------------------------------------------------
# Generic body integrals
# ---------------------------------------------------------------------------

def _body_integral_3d(body: RadialBody, spec: QuadratureSpec, func, jobs: int = 1):
    """Integrate ``func(x)`` (values of shape (..., m)) over a 3D body, chart Lebesgue measure."""
    t, wt = _gauss(spec.n_theta, -np.pi / 2, np.pi / 2)
    phi = 2 * np.pi * np.arange(spec.n_phi) / spec.n_phi
    wp = 2 * np.pi / spec.n_phi
    s, ws = _gauss(spec.n_r, 0.0, 1.0)

    def block(sl: slice):
        T, P = np.meshgrid(t[sl], phi, indexing="ij")
        r = np.asarray(body.radial(T, P), dtype=float)
        if np.any(r <= 0):
            raise DomainError("radial function must be positive")
        u = unit_vectors(T, P)
        x = r[..., None, None] * s[:, None] * u[..., None, :]  # (nt, np, nr, 3)
        vals = func(x)
        jac = (wt[sl, None, None] * wp * np.cos(T)[..., None] * ws * s**2 * r[..., None] ** 3)
        terms = vals * jac[..., None]
        return terms.sum(axis=(0, 1, 2)), np.abs(terms).sum(axis=(0, 1, 2))

    return _run_chunks(block, spec.n_theta, jobs)


def _body_integral_2d(body: RadialBody, spec: QuadratureSpec, func, jobs: int = 1):
    phi = 2 * np.pi * np.arange(spec.n_phi) / spec.n_phi
    wp = 2 * np.pi / spec.n_phi
    s, ws = _gauss(spec.n_r, 0.0, 1.0)

    def block(sl: slice):
        P = phi[sl]
        r = np.asarray(body.radial(P), dtype=float)
        if np.any(r <= 0):
            raise DomainError("radial function must be positive")
        u = np.stack([np.cos(P), np.sin(P)], axis=-1)
        x = r[:, None, None] * s[:, None] * u[:, None, :]
        vals = func(x)
        jac = wp * ws * s * r[:, None] ** 2
        terms = vals * jac[..., None]
        return terms.sum(axis=(0, 1)), np.abs(terms).sum(axis=(0, 1))

    return _run_chunks(block, spec.n_phi, jobs)


def _body_integral(body, spec, func, jobs=1):
    if body.dim == 3:
        return _body_integral_3d(body, spec, func, jobs)
    return _body_integral_2d(body, spec, func, jobs)


# ---------------------------------------------------------------------------
# First moment M3
# ---------------------------------------------------------------------------

def radial_moment_kernel(space: SpaceKind, r) -> np.ndarray:
    """Closed form of ``int_0^r s^3 w(s) ds`` for the x3-moment densities.

    w = (1+s^2)^(-5/2) (spherical), (1-s^2)^(-5/2) (hyperbolic), 1 (flat).
    """
    r = np.asarray(r, dtype=float)
    g = space.geometry
    if g is Geometry.SPHERICAL:
        r2 = r * r
        return 2.0 / 3.0 - (3.0 * r2 + 2.0) / (3.0 * (r2 + 1.0) ** 1.5)
    if g is Geometry.HYPERBOLIC:
        r2 = r * r
        if np.any(r2 >= 1.0):
            raise DomainError("hyperbolic body reaches the boundary of the ball model")
        return 2.0 / 3.0 - (2.0 - 3.0 * r2) / (3.0 * (1.0 - r2) ** 1.5)
    return r**4 / 4.0


def _m3_closed(body: RadialBody, spec: QuadratureSpec, jobs: int):
    t, wt = _gauss(spec.n_theta, -np.pi / 2, np.pi / 2)
    phi = 2 * np.pi * np.arange(spec.n_phi) / spec.n_phi
    wp = 2 * np.pi / spec.n_phi

    def block(sl: slice):
        T, P = np.meshgrid(t[sl], phi, indexing="ij")
        r = np.asarray(body.radial(T, P), dtype=float)
        terms = radial_moment_kernel(body.space, r) * (wt[sl, None] * wp * np.sin(T) * np.cos(T))
        return np.array([terms.sum()]), np.array([np.abs(terms).sum()])

    return _run_chunks(block, spec.n_theta, jobs)


def _m3_numeric(body: RadialBody, spec: QuadratureSpec, jobs: int):
    space = body.space
    return _body_integral_3d(body, spec, lambda x: spaces.moment_weight_x3(space, x)[..., None], jobs)


def first_moment_M3(
    body: RadialBody,
    spec: QuadratureSpec = DEFAULT_SPEC,
    method: str = "closed",
    jobs: int = 1,
) -> MomentReport:
    """First moment of a 3D radial body w.r.t. the chart plane x3 = 0.

    ``method="closed"`` integrates the radial direction analytically
    (:func:`radial_moment_kernel`), ``"numeric"`` uses full triple quadrature.
    """
    if body.dim != 3:
        raise DomainError("first_moment_M3 needs a 3D body")
    if body.chart_map is not None:
        raise DomainError("first_moment_M3 expects a body described around the chart origin")
    if body.space.geometry is Geometry.HYPERBOLIC:
        probe_t, probe_p = np.meshgrid(np.linspace(-np.pi / 2, np.pi / 2, 33), np.linspace(0, 2 * np.pi, 64))
        if np.max(body.radial(probe_t, probe_p)) >= 1.0:
            raise DomainError("hyperbolic body touches the boundary of the ball model")
    impl = {"closed": _m3_closed, "numeric": _m3_numeric}[method]
    coarse, coarse_abs = impl(body, spec, jobs)
    if not spec.richardson:
        return MomentReport(float(coarse[0]), float(64 * EPS * coarse_abs[0]), spec)
    fine, fine_abs = impl(body, spec.doubled(), jobs)
    val, err = _with_error(coarse, fine, fine_abs)
    return MomentReport(float(val[0]), float(err[0]), spec)


def M3(c: float, d: float, R: float, space: SpaceKind, spec: QuadratureSpec = DEFAULT_SPEC, jobs: int = 1) -> MomentReport:
    """First moment of K(c, d) (``d`` may be slightly negative for differencing)."""
    return first_moment_M3(build_body_unchecked(c, d, R, space), spec, jobs=jobs)


def dM3_dd_at0(
    c: float,
    R: float,
    space: SpaceKind,
    spec: QuadratureSpec = DEFAULT_SPEC,
    steps: tuple[float, float] = (1e-3, 5e-4),
    jobs: int = 1,
) -> float:
    """dM3/dd at d = 0 by central differences, Richardson extrapolated in the step."""
    h1, h2 = steps

    def central(h):
        return (M3(c, h, R, space, spec, jobs).value - M3(c, -h, R, space, spec, jobs).value) / (2 * h)

    d1, d2 = central(h1), central(h2)
    ratio2 = (h1 / h2) ** 2
    return float((ratio2 * d2 - d1) / (ratio2 - 1.0))


def dM3_dd_at0_closed_form(R: float) -> float:
    """Leibniz-rule value for c = 1 in the gnomonic chart: (4 pi / 3) R^4 / (R^2 + 1)^(5/2)."""
    return 4.0 * np.pi / 3.0 * R**4 / (R * R + 1.0) ** 2.5


@dataclass(frozen=True)
class LimitConstant:
    """``int int rho0 sin(t) cos(t) dt dphi`` under the two normalisations."""

    total: float
    per_2pi: float
    error_estimate: float


def rho0_phi_integral(theta) -> np.ndarray:
    """``int_0^{2 pi} rho0(theta, phi) dphi`` in closed form.

    With a = (pi/2 - theta)^2 and b = (pi/2 + theta)^2 the integrand is
    (a^2 sin^2 - b^2 cos^2) / (a^2 sin^2 + b^2 cos^2), whose period integral
    is 2 pi (a - b) / (a + b).
    """
    theta = np.asarray(theta, dtype=float)
    a_ = (np.pi / 2 - theta) ** 2
    b_ = (np.pi / 2 + theta) ** 2
    return 2 * np.pi * (a_ - b_) / (a_ + b_)


def rho0_moment_constant(
    spec: QuadratureSpec = QuadratureSpec(n_theta=64, n_phi=32, n_r=16), method: str = "analytic_phi"
) -> LimitConstant:
    """The c -> 0+ limit of the angular integral of rho_c sin(t) cos(t).

    ``method="analytic_phi"`` integrates out the longitude exactly
    (:func:`rho0_phi_integral`) and uses Gauss-Legendre in latitude;
    ``"numeric"`` applies the trapezoid rule in longitude as well, which
    converges slowly because rho0 has thin transition layers near the poles.
    ``total`` is the raw double integral, ``per_2pi`` the same divided by 2 pi.
    """

    def evaluate(sp: QuadratureSpec) -> tuple[float, float]:
        t, wt = _gauss(sp.n_theta, -np.pi / 2, np.pi / 2)
        if method == "analytic_phi":
            inner = rho0_phi_integral(t)
        elif method == "numeric":
            phi = 2 * np.pi * np.arange(sp.n_phi) / sp.n_phi
            inner = rho0(t[:, None], phi[None, :]).sum(axis=1) * (2 * np.pi / sp.n_phi)
        else:
            raise ValueError(f"unknown method {method!r}")
        terms = wt * inner * np.sin(t) * np.cos(t)
        return float(terms.sum()), float(np.abs(terms).sum())

    coarse, coarse_abs = evaluate(spec)
    if spec.richardson:
        fine, fine_abs = evaluate(spec.doubled())
        err = max(abs(fine - coarse), 64 * EPS * fine_abs)
    else:
        fine, err = coarse, 64 * EPS * coarse_abs
    return LimitConstant(total=fine, per_2pi=fine / (2 * np.pi), error_estimate=err)


# ---------------------------------------------------------------------------
# Centroids
# ---------------------------------------------------------------------------

def _centroid_sums_3d(body: RadialBody, spec: QuadratureSpec, jobs: int) -> tuple[np.ndarray, np.ndarray]:
    space = body.space

    def func(x):
        w = spaces.volume_weight(space, x)[..., None]
        if space.curved:
            return spaces.embed(space, x) * w
        return np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)

    return _body_integral_3d(body, spec, func, jobs)


def _centroid_sums_2d(body: RadialBody, spec: QuadratureSpec, jobs: int) -> tuple[np.ndarray, np.ndarray]:
    """Geodesic polar coordinates around the chart origin.

    Area elements: sin s ds dpsi (spherical), sinh s ds dpsi (hyperbolic),
    s ds dpsi (flat). The last component of the returned vector is the
    weight to normalise with (flat case) or the embedded x3 coordinate.
    """
    space = body.space
    psi = 2 * np.pi * np.arange(spec.n_phi) / spec.n_phi
    wp = 2 * np.pi / spec.n_phi
    s_nodes, ws = _gauss(spec.n_r, 0.0, 1.0)

    def block(sl: slice):
        P = psi[sl]
        r = np.asarray(body.radial(P), dtype=float)
        pts = np.stack([r * np.cos(P), r * np.sin(P)], axis=-1)
        if space.curved:
            smax = spaces.dist_from_origin(space, pts)
        else:
            smax = r
        s = smax[:, None] * s_nodes
        w = ws * smax[:, None] * wp
        cp, sp_ = np.cos(P)[:, None], np.sin(P)[:, None]
        if space.geometry is Geometry.SPHERICAL:
            rad, height, jac = np.sin(s), np.cos(s), np.sin(s)
        elif space.geometry is Geometry.HYPERBOLIC:
            rad, height, jac = np.sinh(s), np.cosh(s), np.sinh(s)
        else:
            rad, height, jac = s, np.ones_like(s), s
        vec = np.stack([rad * cp, rad * sp_, height], axis=-1)
        terms = vec * (w * jac)[..., None]
        return terms.sum(axis=(0, 1)), np.abs(terms).sum(axis=(0, 1))

    return _run_chunks(block, spec.n_phi, jobs)


def _centroid_from_sums(space: SpaceKind, v: np.ndarray) -> np.ndarray:
    if space.curved:
        if v[-1] <= 0:
            raise DomainError("embedded centroid vector points out of the chart")
        return v[:-1] / v[-1]
    if v[-1] <= 0:
        raise DomainError("degenerate body: zero volume")
    return v[:-1] / v[-1]


def centroid(body: RadialBody, spec: QuadratureSpec = DEFAULT_SPEC, jobs: int = 1) -> np.ndarray:
    """Centroid of the body in chart coordinates.

    Curved spaces: the volume-weighted mean of the embedded points, pushed
    back to the chart (central projection, so the normalisation of the
    mean vector does not matter). Flat and normed spaces: the Lebesgue
    centroid.
    """
    sums = _centroid_sums_3d if body.dim == 3 else _centroid_sums_2d
    plain = replace(body, chart_map=None)
    v, _ = sums(plain, spec.doubled() if spec.richardson else spec, jobs)
    if body.space.curved and np.linalg.norm(v) == 0:
        raise DomainError("degenerate body: zero volume")
    c = _centroid_from_sums(body.space, v)
    if body.chart_map is not None:
        c = body.chart_map(c)
    return c


def centroid_error(body: RadialBody, spec: QuadratureSpec = DEFAULT_SPEC, jobs: int = 1) -> float:
    """Chart distance between centroids computed at ``spec`` and ``spec.doubled()``."""
    a_ = centroid(replace(body), replace(spec, richardson=False), jobs)
    b_ = centroid(replace(body), replace(spec.doubled(), richardson=False), jobs)
    return float(np.linalg.norm(a_ - b_))


# ---------------------------------------------------------------------------
# Moment condition
# ---------------------------------------------------------------------------

def _random_normals(dim: int, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def moment_condition_check(
    body: RadialBody,
    c,
    n_dirs: int = 16,
    spec: QuadratureSpec = DEFAULT_SPEC,
    seed: int = 0,
    jobs: int = 1,
) -> MomentReport:
    """Largest first moment over ``n_dirs`` random geodesic hyperplanes through ``c``.

    The moment density is sin/sinh/plain signed distance times the chart
    volume weight; the body is moved so that ``c`` becomes the chart origin.
    ``value`` is max |M_H| and ``error_estimate`` the largest quadrature
    error among the hyperplanes.
    """
    space = body.space
    iso = spaces.center_isometry(space, c)
    normals = _random_normals(space.dim, n_dirs, seed)
    planes = [OrientedGeodesicHyperplane(n) for n in normals]
    chart_map = body.chart_map

    def func(x):
        y = chart_map(x) if chart_map is not None else x
        y = iso(y)
        w = spaces.volume_weight(space, x)
        return np.stack([spaces.sin_signed_distance(space, h, y) * w for h in planes], axis=-1)

    plain = replace(body, chart_map=None)
    coarse, _ = _body_integral(plain, spec, func, jobs)
    if spec.richardson:
        fine, fine_abs = _body_integral(plain, spec.doubled(), func, jobs)
        val, err = _with_error(coarse, fine, fine_abs)
    else:
        val, err = coarse, np.zeros_like(coarse)
    return MomentReport(float(np.max(np.abs(val))), float(np.max(err)), spec)


# ---------------------------------------------------------------------------
# Centering root-finder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootResult:
    root: float
    value: float
    bracket: tuple[float, float]
    iterations: int


def bracketed_root(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float | None = None,
    f_hi: float | None = None,
    ftol: float = 0.0,
    xtol: float = 1e-15,
    maxiter: int = 200,
) -> RootResult:
    """Bisection with secant steps; the sign-change bracket is always kept.

    A secant step is taken only if it falls strictly inside the bracket;
    when two consecutive steps fail to halve the bracket, a bisection
    step is forced.
    """
    f_lo = func(lo) if f_lo is None else f_lo
    f_hi = func(hi) if f_hi is None else f_hi
    if f_lo == 0.0:
        return RootResult(lo, 0.0, (lo, hi), 0)
    if f_hi == 0.0:
        return RootResult(hi, 0.0, (lo, hi), 0)
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}")

    best_x, best_f = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    width_ref = hi - lo
    slow = 0
    for it in range(1, maxiter + 1):
        x = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        margin = 1e-3 * (hi - lo)
        if slow >= 2 or not (lo + margin < x < hi - margin):
            x = 0.5 * (lo + hi)
            slow = 0
        fx = func(x)
        if abs(fx) < abs(best_f):
            best_x, best_f = x, fx
        if abs(fx) <= ftol or fx == 0.0:
            return RootResult(x, fx, (lo, hi), it)
        if np.sign(fx) == np.sign(f_lo):
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        width = hi - lo
        slow = slow + 1 if width > 0.5 * width_ref else 0
        if slow == 0:
            width_ref = width
        if width <= xtol * max(1.0, abs(x)):
            break
    return RootResult(best_x, best_f, (lo, hi), it)


def scan_bracket(
    func: Callable[[float], float], lo: float = 0.01, hi: float = 1.0, n: int = 32
) -> tuple[float, float, float, float]:
    """First sign change of ``func`` on an ``n``-point grid over [lo, hi]."""
    grid = np.linspace(lo, hi, n)
    vals = [func(float(x)) for x in grid]
    for i in range(n - 1):
        if vals[i] == 0.0:
            return float(grid[i]), float(grid[i]), 0.0, 0.0
        if np.sign(vals[i]) != np.sign(vals[i + 1]):
            return float(grid[i]), float(grid[i + 1]), vals[i], vals[i + 1]
    raise NoSignChange(
        f"M3(c) keeps one sign for c in [{lo}, {hi}] ({n} samples); d is probably too large"
    )


def find_centering_c(
    d: float,
    R: float,
    space: SpaceKind,
    bracket: Sequence[float] | None = None,
    tol: float = 1e-12,
    spec: QuadratureSpec = DEFAULT_SPEC,
    jobs: int = 1,
) -> float:
    """The c* with |M3(K(c*, d))| <= tol, so that K(c*, d) is centred at the origin."""

    def m3(c: float) -> float:
        return M3(c, d, R, space, spec, jobs).value

    if bracket is None:
        lo, hi, f_lo, f_hi = scan_bracket(m3)
        if lo == hi:
            return lo
    else:
        lo, hi = map(float, bracket)
        f_lo, f_hi = m3(lo), m3(hi)
    res = bracketed_root(m3, lo, hi, f_lo, f_hi, ftol=tol)
    if abs(res.value) > tol:
        log.warning("centering stopped at |M3| = %.3g > tol = %.3g", abs(res.value), tol)
    log.debug("c* = %.15g after %d iterations (M3 = %.3g)", res.root, res.iterations, res.value)
    return res.root


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------

def _sweep_point(args) -> dict:
    c, d, R, space, spec = args
    rep = M3(c, d, R, space, spec)
    return {
        "c": c,
        "d": d,
        "R": R,
        "space": space.geometry.value,
        "M3": rep.value,
        "err": rep.error_estimate,
        "n_theta": spec.n_theta,
        "n_phi": spec.n_phi,
        "n_r": spec.n_r,
    }


def sweep_M3(
    c_values: Iterable[float],
    d_values: Iterable[float],
    R: float,
    space: SpaceKind,
    spec: QuadratureSpec = DEFAULT_SPEC,
    jobs: int = 1,
) -> list[dict]:
    work = [(float(c), float(d), R, space, spec) for d in d_values for c in c_values]
    if jobs <= 1:
        return [_sweep_point(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_point, work))


def write_sweep_csv(rows: Iterable[dict], target) -> None:
    """Write sweep rows to a path or an open text stream."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            write_sweep_csv(rows, fh)
        return
    writer = csv.DictWriter(target, fieldnames=SWEEP_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
