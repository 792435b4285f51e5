"""The two-parameter family K(c, d) of mono-monostatic bodies.

Building blocks (all vectorised over the angle arguments)::

    F(c, x)      = (c x^2 + (1-c)(1-x)^2 cx/(c+x)) / (c x + (1-c)(1-x)^2)
    f(c, t)      = pi F(c, t/pi + 1/2) - pi/2,       g(c, t) = -f(c, -t)
    a(c, t, p)   = cos^2 p cos^2 f / (cos^2 p cos^2 f + sin^2 p cos^2 g)
    rho(c, t, p) = a sin f + (1 - a) sin g
    radial       = R (1 + d rho)            (constant curvature)
                 = R rho_M(t) (1 + d rho)   (rotationally symmetric normed)

``t`` is the latitude in [-pi/2, pi/2] and ``p`` the longitude.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radial import RadialBody
from .spaces import DomainError, Geometry, SpaceKind

HALF_PI = np.pi / 2
_POLE_TOL = 1e-12


def _check_c(c: float) -> None:
    if not 0.0 < c <= 1.0:
        raise DomainError(f"c must lie in (0, 1], got {c}")


def _check_x(x: np.ndarray) -> np.ndarray:
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise DomainError("F is defined on [0, 1] only")
    return np.clip(x, 0.0, 1.0)


def F_derivatives(c: float, x):
    """``(F, F', F'')`` of F(c, .) at ``x``.

    The numerator carries an explicit factor of x, which is divided out
    before the quotient so that the c = 1 case (where both numerator and
    denominator vanish at x = 0) needs no limit.
    """
    _check_c(c)
    x = _check_x(np.asarray(x, dtype=float))
    if c == 1.0:
        return x.copy(), np.ones_like(x), np.zeros_like(x)
    k = 1.0 - c
    s, s1, s2 = (1 - x) ** 2, -2 * (1 - x), 2.0
    q = c / (c + x)
    q1 = -c / (c + x) ** 2
    q2 = 2 * c / (c + x) ** 3
    # F = x P / D with P = c x + k s q, D = c x + k s
    P = c * x + k * s * q
    P1 = c + k * (s1 * q + s * q1)
    P2 = k * (s2 * q + 2 * s1 * q1 + s * q2)
    D = c * x + k * s
    D1 = c + k * s1
    D2 = k * s2
    N, N1, N2 = x * P, P + x * P1, 2 * P1 + x * P2
    val = N / D
    d1 = (N1 - val * D1) / D
    d2 = (N2 - 2 * d1 * D1 - val * D2) / D
    return val, d1, d2


def F(c: float, x):
    return F_derivatives(c, x)[0]


def f_derivatives(c: float, theta):
    theta = np.asarray(theta, dtype=float)
    v, d1, d2 = F_derivatives(c, theta / np.pi + 0.5)
    return np.pi * v - HALF_PI, d1, d2 / np.pi


def f(c: float, theta):
    return f_derivatives(c, theta)[0]


def g_derivatives(c: float, theta):
    v, d1, d2 = f_derivatives(c, -np.asarray(theta, dtype=float))
    return -v, d1, -d2


def g(c: float, theta):
    return g_derivatives(c, theta)[0]


def _at_pole(theta: np.ndarray) -> np.ndarray:
    return np.abs(theta) >= HALF_PI - _POLE_TOL


def a(c: float, theta, phi):
    """Mixing weight; at the poles (0/0) the symmetric value 1/2 is used."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    A = np.cos(phi) ** 2 * np.cos(f(c, theta)) ** 2
    B = np.sin(phi) ** 2 * np.cos(g(c, theta)) ** 2
    pole = _at_pole(theta)
    S = np.where(pole, 1.0, A + B)
    return np.where(pole, 0.5, A / S)


def rho(c: float, theta, phi):
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    w = a(c, theta, phi)
    return w * np.sin(f(c, theta)) + (1 - w) * np.sin(g(c, theta))


def rho_derivatives(c: float, theta, phi):
    """``(rho, rho_t, rho_p, rho_tt, rho_tp, rho_pp)`` by the chain rule.

    Partials are not meaningful at the poles themselves, where the
    latitude/longitude parametrisation is singular; there only the value
    is reliable.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    fv, f1, f2 = f_derivatives(c, theta)
    gv, g1, g2 = g_derivatives(c, theta)
    cp2, sp2, s2p, c2p = np.cos(phi) ** 2, np.sin(phi) ** 2, np.sin(2 * phi), np.cos(2 * phi)
    cf2, cg2 = np.cos(fv) ** 2, np.cos(gv) ** 2
    s2f, s2g = np.sin(2 * fv), np.sin(2 * gv)

    A = cp2 * cf2
    A_t = -cp2 * s2f * f1
    A_p = -s2p * cf2
    A_tt = -cp2 * (2 * np.cos(2 * fv) * f1**2 + s2f * f2)
    A_tp = s2p * s2f * f1
    A_pp = -2 * c2p * cf2
    B = sp2 * cg2
    B_t = -sp2 * s2g * g1
    B_p = s2p * cg2
    B_tt = -sp2 * (2 * np.cos(2 * gv) * g1**2 + s2g * g2)
    B_tp = -s2p * s2g * g1
    B_pp = 2 * c2p * cg2

    pole = _at_pole(theta)
    S = np.where(pole, 1.0, A + B)
    S_t, S_p = A_t + B_t, A_p + B_p
    S_tt, S_tp, S_pp = A_tt + B_tt, A_tp + B_tp, A_pp + B_pp
    w = np.where(pole, 0.5, A / S)
    w_t = (A_t - w * S_t) / S
    w_p = (A_p - w * S_p) / S
    w_tt = (A_tt - 2 * w_t * S_t - w * S_tt) / S
    w_tp = (A_tp - w_t * S_p - w_p * S_t - w * S_tp) / S
    w_pp = (A_pp - 2 * w_p * S_p - w * S_pp) / S

    sf, sg = np.sin(fv), np.sin(gv)
    sf1, sg1 = np.cos(fv) * f1, np.cos(gv) * g1
    sf2 = -sf * f1**2 + np.cos(fv) * f2
    sg2 = -sg * g1**2 + np.cos(gv) * g2
    delta, delta1, delta2 = sf - sg, sf1 - sg1, sf2 - sg2

    r = w * delta + sg
    r_t = w_t * delta + w * delta1 + sg1
    r_p = w_p * delta
    r_tt = w_tt * delta + 2 * w_t * delta1 + w * delta2 + sg2
    r_tp = w_tp * delta + w_p * delta1
    r_pp = w_pp * delta
    return r, r_t, r_p, r_tt, r_tp, r_pp


def rho0(theta, phi):
    """Pointwise limit of rho(c, theta, phi) as c -> 0+ (open latitude range)."""
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    lo = (HALF_PI - theta) ** 4 * np.sin(phi) ** 2
    hi = (HALF_PI + theta) ** 4 * np.cos(phi) ** 2
    return (lo - hi) / (hi + lo)


@dataclass(frozen=True)
class GombocParams:
    c: float
    d: float
    R: float
    space: SpaceKind

    def __post_init__(self):
        _check_c(self.c)
        if not 0.0 <= self.d < 1.0:
            raise DomainError(f"d must lie in [0, 1), got {self.d}")
        if self.R <= 0:
            raise DomainError(f"R must be positive, got {self.R}")
        if self.space.dim != 3:
            raise DomainError("the K(c, d) family lives in dimension 3")
        if self.space.geometry is Geometry.HYPERBOLIC and self.R * (1 + self.d) >= 1.0:
            raise DomainError("hyperbolic body must stay inside the unit ball: need R(1+d) < 1")


def _profile_terms(space: SpaceKind, theta):
    prof = space.normed_profile
    if prof is None:
        one = np.ones_like(np.asarray(theta, dtype=float))
        return one, 0.0 * one, 0.0 * one
    return prof.derivatives(theta)


def _radial(c: float, d: float, R: float, space: SpaceKind, theta, phi):
    m = _profile_terms(space, theta)[0]
    return R * m * (1.0 + d * rho(c, theta, phi))


def radial_R(params: GombocParams, theta, phi):
    return _radial(params.c, params.d, params.R, params.space, theta, phi)


def _radial_partials(c: float, d: float, R: float, space: SpaceKind, theta, phi):
    r, r_t, r_p, r_tt, r_tp, r_pp = rho_derivatives(c, theta, phi)
    m, m1, m2 = _profile_terms(space, np.broadcast_to(theta, r.shape))
    e = 1.0 + d * r
    return (
        R * m * e,
        R * (m1 * e + m * d * r_t),
        R * m * d * r_p,
        R * (m2 * e + 2 * m1 * d * r_t + m * d * r_tt),
        R * (m1 * d * r_p + m * d * r_tp),
        R * m * d * r_pp,
    )


def build_body(params: GombocParams) -> RadialBody:
    c, d, R, space = params.c, params.d, params.R, params.space
    return RadialBody(
        space=space,
        radial=lambda theta, phi: _radial(c, d, R, space, theta, phi),
        partials=lambda theta, phi: _radial_partials(c, d, R, space, theta, phi),
        label=f"K(c={c:.12g}, d={d:.12g}, R={R:.12g}, {space.describe()})",
    )


def build_body_unchecked(c: float, d: float, R: float, space: SpaceKind) -> RadialBody:
    """Like :func:`build_body` but also accepts small negative ``d``.

    Used for central differences in ``d`` around zero.
    """
    _check_c(c)
    if abs(d) >= 1.0:
        raise DomainError(f"|d| must be < 1, got {d}")
    return RadialBody(
        space=space,
        radial=lambda theta, phi: _radial(c, d, R, space, theta, phi),
        partials=lambda theta, phi: _radial_partials(c, d, R, space, theta, phi),
        label=f"K(c={c:.12g}, d={d:.12g}, R={R:.12g}, {space.describe()})",
    )
