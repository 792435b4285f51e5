import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monostatic import bodies, integrate
from monostatic.gomboc import GombocParams, build_body
from monostatic.integrate import (
    M3,
    NoSignChange,
    QuadratureSpec,
    bracketed_root,
    centroid,
    find_centering_c,
    first_moment_M3,
    moment_condition_check,
)
from monostatic.spaces import DomainError, SpaceKind, SuperellipsoidProfile

SPH, HYP, EUC = SpaceKind.spherical(), SpaceKind.hyperbolic(), SpaceKind.euclidean()
NORM = SpaceKind.normed(SuperellipsoidProfile())
GEOMETRIES = [(SPH, 1.0), (HYP, 0.5), (EUC, 1.0), (NORM, 1.0)]
COARSE = QuadratureSpec(32, 64, 16)

C_STAR_SPH_005 = 0.05563879795707229
C_STAR_SPH_002 = 0.055632172865677176


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(n_theta=8)
    assert QuadratureSpec().doubled() == QuadratureSpec(128, 256, 64)


# -- first moments -------------------------------------------------------------

@pytest.mark.parametrize("space, R", GEOMETRIES)
def test_moment_vanishes_at_d_zero(space, R):
    for c in np.linspace(0.05, 1.0, 10):
        rep = M3(float(c), 0.0, R, space)
        assert abs(rep.value) <= rep.error_estimate
        assert rep.error_estimate < 1e-10


def test_kernel_examples():
    r = np.array([0.3, 0.6])
    np.testing.assert_allclose(integrate.radial_moment_kernel(EUC, r), r**4 / 4)
    # closed kernels are the antiderivatives of r^3 / (1 +- r^2)^(5/2)
    h = 1e-6
    for space, sgn in ((SPH, 1.0), (HYP, -1.0)):
        k = integrate.radial_moment_kernel
        fd = (k(space, r + h) - k(space, r - h)) / (2 * h)
        np.testing.assert_allclose(fd, r**3 / (1 + sgn * r**2) ** 2.5, rtol=1e-8)
        assert k(space, np.array([0.0]))[0] == pytest.approx(0.0, abs=1e-16)


@pytest.mark.parametrize("space, R", [(SPH, 1.0), (HYP, 0.5), (NORM, 1.0)])
@pytest.mark.parametrize("d", [0.01, 0.05, 0.1])
def test_sign_at_c_one_is_positive(space, R, d):
    assert M3(1.0, d, R, space).value > 0


@pytest.mark.parametrize("c", [0.01, 0.02])
@pytest.mark.parametrize("d", [0.01, 0.05, 0.1])
def test_sign_at_small_c_is_negative(c, d):
    assert M3(c, d, 1.0, SPH).value < 0


def test_closed_and_numeric_paths_agree():
    body = build_body(GombocParams(1.0, 0.05, 1.0, SPH))
    closed = first_moment_M3(body, method="closed")
    numeric = first_moment_M3(body, method="numeric")
    assert closed.value > 0
    assert closed.value == pytest.approx(numeric.value, abs=1e-9)


@pytest.mark.parametrize("space, R", GEOMETRIES)
@pytest.mark.parametrize("c, d", [(0.05, 0.05), (0.3, 0.02), (1.0, 0.1)])
def test_quadrature_convergence(space, R, c, d):
    rep = M3(c, d, R, space)
    finer = M3(c, d, R, space, QuadratureSpec().doubled())
    assert abs(finer.value - rep.value) <= max(rep.error_estimate, 1e-15)


def test_hyperbolic_body_touching_boundary_is_rejected():
    body = bodies.ball(HYP, 0.5)
    fat = body.__class__(HYP, lambda t, p: np.ones(np.broadcast(t, p).shape))
    with pytest.raises(DomainError):
        first_moment_M3(fat)
    with pytest.raises(DomainError):
        first_moment_M3(bodies.ball(SpaceKind.spherical(2), 0.5))


# -- d-derivative and limit constant --------------------------------------------

def test_derivative_closed_form_value():
    assert integrate.dM3_dd_at0_closed_form(1.0) == pytest.approx(0.7404804896930609, rel=1e-14)


def test_derivative_matches_closed_form():
    num = integrate.dM3_dd_at0(1.0, 1.0, SPH)
    assert num == pytest.approx(integrate.dM3_dd_at0_closed_form(1.0), rel=1e-6)
    assert integrate.dM3_dd_at0(0.01, 1.0, SPH) < 0


def test_euclidean_derivative_scales_as_R_to_the_fourth():
    Rs = np.array([0.5, 1.0, 2.0])
    vals = np.array([integrate.dM3_dd_at0(1.0, float(R), EUC) for R in Rs])
    assert np.all(vals > 0)
    slope = np.polyfit(np.log(Rs), np.log(vals), 1)[0]
    assert slope == pytest.approx(4.0, abs=1e-6)
    # flat limit of the Leibniz closed form: (4 pi / 3) R^4
    assert vals[1] == pytest.approx(4 * np.pi / 3, rel=1e-6)


def test_rho0_phi_integral_matches_quadrature():
    from scipy.integrate import quad

    from monostatic.gomboc import rho0

    for t in (-1.2, -0.3, 0.0, 0.7, 1.4):
        ref, _ = quad(lambda p: float(rho0(t, p)), 0, 2 * np.pi, limit=400, epsabs=1e-13)
        assert integrate.rho0_phi_integral(t) == pytest.approx(ref, abs=1e-10)


def test_rho0_constant():
    lc = integrate.rho0_moment_constant()
    assert lc.total == pytest.approx(-4.633588740647022, abs=1e-11)
    assert lc.total < 0 and lc.per_2pi < 0
    assert lc.error_estimate < 1e-10
    numeric = integrate.rho0_moment_constant(QuadratureSpec(64, 2048, 16), method="numeric")
    assert abs(numeric.total - lc.total) <= numeric.error_estimate


# -- centroids -----------------------------------------------------------------

@pytest.mark.parametrize(
    "space, R",
    GEOMETRIES + [(SpaceKind.spherical(2), 0.8), (SpaceKind.hyperbolic(2), 0.6), (SpaceKind.euclidean(2), 1.0)],
)
def test_centered_ball_has_origin_centroid(space, R):
    np.testing.assert_allclose(centroid(bodies.ball(space, R), COARSE), 0.0, atol=1e-13)


@pytest.mark.parametrize("space, R", [(SPH, 1.0), (HYP, 0.5), (NORM, 1.0)])
def test_family_centroid_is_on_the_axis(space, R):
    cen = centroid(build_body(GombocParams(0.2, 0.1, R, space)))
    assert abs(cen[0]) < 1e-10 and abs(cen[1]) < 1e-10
    assert abs(cen[2]) > 1e-4


def test_moved_ball_centroid_follows_the_isometry():
    iso = integrate.spaces.center_isometry(HYP, [0.2, -0.1, 0.15])
    body = bodies.ball(HYP, 0.4).moved(iso)
    expected = iso(np.zeros(3))
    np.testing.assert_allclose(centroid(body, COARSE), expected, atol=1e-12)


def _green_centroid(sh: bodies.SupportHarmonics2D, n: int = 4096) -> np.ndarray:
    # boundary x(phi) = h n + h' t, dx/dphi = (h + h'') t; trapezoid is spectral here
    phi = 2 * np.pi * np.arange(n) / n
    h, h1, h2 = sh.evaluate(phi)
    x = sh.boundary(phi)
    dx = (h + h2)[:, None] * np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
    w = 2 * np.pi / n
    area = 0.5 * np.sum(x[:, 0] * dx[:, 1] - x[:, 1] * dx[:, 0]) * w
    mx = 0.5 * np.sum(x[:, 0] ** 2 * dx[:, 1]) * w
    my = -0.5 * np.sum(x[:, 1] ** 2 * dx[:, 0]) * w
    return np.array([mx, my]) / area


def test_triangle_like_body_centroid_matches_green_oracle():
    sh = bodies.SupportHarmonics2D(1.0, [0.04, 0.06], [0.02, 0.03])
    assert sh.is_convex()
    body = bodies.body_from_harmonics(SpaceKind.euclidean(2), sh)
    oracle = _green_centroid(sh)
    assert np.linalg.norm(oracle) > 1e-3
    np.testing.assert_allclose(centroid(body, QuadratureSpec(64, 256, 32)), oracle, atol=1e-9)
    # coarse Monte-Carlo cross-check of the oracle itself
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, (1_000_000, 2))
    inside = np.hypot(pts[:, 0], pts[:, 1]) <= sh.radial(np.arctan2(pts[:, 1], pts[:, 0]))
    np.testing.assert_allclose(pts[inside].mean(axis=0), oracle, atol=3e-3)


@pytest.mark.parametrize("space", [SpaceKind.spherical(2), SpaceKind.hyperbolic(2)])
def test_centroid_of_curved_2d_ball_off_center(space):
    target = np.array([0.3, -0.2])
    # center_isometry(-p) undoes center_isometry(p): same plane, opposite angle
    back = integrate.spaces.center_isometry(space, -target)
    np.testing.assert_allclose(back(np.zeros(2)), target, atol=1e-15)
    body = bodies.ball(space, 0.4).moved(back)
    np.testing.assert_allclose(centroid(body, COARSE), target, atol=1e-12)


# -- moment condition ------------------------------------------------------------

def test_moment_check_for_centered_ball_is_zero():
    rep = moment_condition_check(bodies.ball(SPH, 1.0), np.zeros(3), n_dirs=4, spec=COARSE)
    assert rep.value <= max(10 * rep.error_estimate, 1e-13)


@pytest.mark.parametrize("space", [SPH, HYP, EUC])
def test_moment_check_at_centroid_and_off_it(space):
    body = bodies.ellipsoid_3d(0.6, 0.5, 0.4, space)
    body = build_body(GombocParams(0.3, 0.1, 0.5, space)) if space is SPH else body
    cen = centroid(body, COARSE)
    at = moment_condition_check(body, cen, n_dirs=6, spec=COARSE)
    assert at.value < max(10 * at.error_estimate, 1e-12)
    off = moment_condition_check(body, cen + np.array([0.05, 0.0, 0.0]), n_dirs=6, spec=COARSE)
    assert off.value > 1e3 * max(10 * at.error_estimate, 1e-12)


def test_moment_check_in_the_plane():
    body = bodies.random_convex_2d(SpaceKind.hyperbolic(2), seed=4, scale=0.4)
    cen = centroid(body)
    rep = moment_condition_check(body, cen, n_dirs=8)
    assert rep.value < max(10 * rep.error_estimate, 1e-12)


# -- root finding and centering ----------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0.5, 5.0))
def test_bracketed_root_finds_cubic_root(shift, scale):
    res = bracketed_root(lambda x: scale * (x - shift) ** 3 + (x - shift), -1.0, 1.0, xtol=1e-15)
    assert res.root == pytest.approx(shift, abs=1e-12)
    lo, hi = res.bracket
    assert lo <= res.root <= hi or abs(res.value) == 0.0


def test_bracketed_root_rejects_missing_sign_change():
    with pytest.raises(NoSignChange):
        bracketed_root(lambda x: x * x + 1, -1.0, 1.0)


def test_scan_without_sign_change_raises():
    with pytest.raises(NoSignChange):
        integrate.scan_bracket(lambda c: 1.0 + c)


def test_centering_endpoints():
    assert M3(1.0, 0.05, 1.0, SPH).value > 0
    assert M3(0.02, 0.05, 1.0, SPH).value < 0


def test_centering_regression_value():
    c = find_centering_c(0.05, 1.0, SPH)
    assert c == pytest.approx(C_STAR_SPH_005, abs=1e-9)
    assert abs(M3(c, 0.05, 1.0, SPH).value) < 1e-10
    cen = centroid(build_body(GombocParams(c, 0.05, 1.0, SPH)))
    assert np.linalg.norm(cen) < 1e-6


def test_centering_with_explicit_bracket_matches_scan():
    c = find_centering_c(0.02, 1.0, SPH, bracket=(0.04, 0.08))
    assert c == pytest.approx(C_STAR_SPH_002, abs=1e-9)


def test_centering_is_stable_under_tighter_tolerance():
    tol = 1e-12
    a_ = find_centering_c(0.05, 1.0, SPH, tol=tol)
    b_ = find_centering_c(0.05, 1.0, SPH, tol=tol / 10)
    assert abs(a_ - b_) < 10 * tol


def test_centering_normed():
    c = find_centering_c(0.05, 1.0, NORM)
    assert 0 < c < 1
    assert abs(M3(c, 0.05, 1.0, NORM).value) < 1e-10
    assert M3(1.0, 0.05, 1.0, NORM).value > 0


def test_centering_fails_cleanly_without_bracket():
    with pytest.raises(NoSignChange):
        integrate.scan_bracket(lambda c: M3(c, 0.05, 1.0, EUC).value + 1.0)


# -- parallelism and sweeps ----------------------------------------------------------

def test_jobs_give_reproducible_results():
    body = build_body(GombocParams(0.2, 0.05, 1.0, SPH))
    a2 = first_moment_M3(body, jobs=2)
    b2 = first_moment_M3(body, jobs=2)
    assert a2.value == b2.value and a2.error_estimate == b2.error_estimate
    a1 = first_moment_M3(body, jobs=1)
    assert a1.value == pytest.approx(a2.value, abs=1e-15)
    c3 = centroid(body, jobs=3)
    np.testing.assert_array_equal(c3, centroid(body, jobs=3))


def test_sweep_csv_header_and_rows(tmp_path):
    rows = integrate.sweep_M3([0.1, 1.0], [0.0, 0.05], 1.0, SPH, COARSE)
    buf = io.StringIO()
    integrate.write_sweep_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "c,d,R,space,M3,err,n_theta,n_phi,n_r"
    parsed = list(csv.DictReader(io.StringIO(buf.getvalue())))
    assert len(parsed) == 4
    assert parsed[0]["space"] == "spherical"
    assert float(parsed[-1]["M3"]) > 0
    path = tmp_path / "sweep.csv"
    integrate.write_sweep_csv(rows, path)
    assert path.read_text() == buf.getvalue()


def test_parallel_sweep_matches_serial():
    serial = integrate.sweep_M3([0.1, 0.5], [0.02], 1.0, SPH, COARSE, jobs=1)
    parallel = integrate.sweep_M3([0.1, 0.5], [0.02], 1.0, SPH, COARSE, jobs=2)
    assert serial == parallel
