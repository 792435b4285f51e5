import json
import warnings

import numpy as np
import pytest

from monostatic import bodies, spaces
from monostatic.equilibria import (
    Certificate,
    EquilibriumCensus,
    EquilibriumKind,
    EquilibriumPoint,
    EquilibriumWarning,
    HemisphereError,
    PoincareHopfInconclusive,
    ball_geodesic_radius,
    chart_radial_profile,
    classify,
    count_equilibria_2d,
    distance_profile,
    find_dstar,
    find_equilibria,
    gaussian_curvature,
    hausdorff_to_ball,
    min_curvature,
    poincare_hopf_check,
    tangent_frame,
)
from monostatic.gomboc import GombocParams, build_body
from monostatic.integrate import centroid
from monostatic.radial import direction_angles, unit_vectors
from monostatic.spaces import DomainError, SpaceKind

SPH, HYP, EUC = SpaceKind.spherical(), SpaceKind.hyperbolic(), SpaceKind.euclidean()
NORM = bodies.normed_space_3d()
PLANES = [SpaceKind.spherical(2), SpaceKind.hyperbolic(2), SpaceKind.euclidean(2), bodies.normed_plane()]
HALF_PI = np.pi / 2


def _census(S, H, U, deg=0):
    return EquilibriumCensus(S, H, U, deg, [])


def _kinds_at(census):
    return sorted((p.kind.value, tuple(np.round(np.atleast_1d(p.location), 3))) for p in census.points)


# -- classification and Poincare-Hopf -------------------------------------------

def test_classify():
    assert classify([1.0, 2.0]) is EquilibriumKind.STABLE
    assert classify([-1.0, -2.0]) is EquilibriumKind.UNSTABLE
    assert classify([-1.0, 2.0]) is EquilibriumKind.SADDLE
    assert classify([1.0, 1e-10]) is EquilibriumKind.DEGENERATE
    assert classify([0.0]) is EquilibriumKind.DEGENERATE
    assert classify([1.0, 0.01], floor=0.1) is EquilibriumKind.DEGENERATE
    assert classify([-3.0]) is EquilibriumKind.UNSTABLE


def test_census_counts_points():
    pts = [
        EquilibriumPoint((0.0, 0.0), 1.0, EquilibriumKind.STABLE, (1.0, 1.0)),
        EquilibriumPoint((1.0, 0.0), 1.0, EquilibriumKind.DEGENERATE, (0.0, 1.0)),
    ]
    c = EquilibriumCensus.from_points(pts)
    assert (c.S, c.H, c.U, c.degenerate_count, c.total) == (1, 0, 0, 1, 2)
    assert c.summary() == {"S": 1, "H": 0, "U": 0, "degenerate": 1}


def test_poincare_hopf_examples():
    assert poincare_hopf_check(_census(1, 0, 1), 3)
    assert poincare_hopf_check(_census(2, 2, 2), 3)
    assert not poincare_hopf_check(_census(2, 0, 1), 2)
    assert poincare_hopf_check(_census(3, 0, 3), 2)
    with pytest.raises(PoincareHopfInconclusive):
        poincare_hopf_check(_census(1, 0, 1, deg=1), 3)
    with pytest.raises(ValueError):
        poincare_hopf_check(_census(1, 0, 1), 4)


# -- distance profiles ------------------------------------------------------------

def test_ball_profile_is_constant():
    u = unit_vectors(*np.meshgrid(np.linspace(-1.5, 1.5, 7), np.linspace(0, 6, 7)))
    np.testing.assert_allclose(distance_profile(bodies.ball(SPH, 0.8))(u), np.arctan(0.8), atol=1e-15)
    np.testing.assert_allclose(distance_profile(bodies.ball(HYP, 0.4))(u), np.arctanh(0.4), atol=1e-15)


@pytest.mark.parametrize("space, R, fn", [(SPH, 1.0, np.arctan), (HYP, 0.5, np.arctanh)])
def test_family_profile_composes_radial(space, R, fn):
    from monostatic.gomboc import rho

    body = build_body(GombocParams(0.2, 0.1, R, space))
    rng = np.random.default_rng(0)
    u = rng.normal(size=(200, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    t, p = direction_angles(u)
    np.testing.assert_allclose(distance_profile(body)(u), fn(R * (1 + 0.1 * rho(0.2, t, p))), atol=1e-14)


def test_reference_outside_body_is_rejected():
    with pytest.raises(DomainError):
        distance_profile(bodies.ball(SPH, 0.5), [0.6, 0.0, 0.0])
    with pytest.raises(DomainError):
        distance_profile(bodies.ellipse_2d(1.0, 0.5), [0.0, 0.7])


# -- 3D equilibria ------------------------------------------------------------------

@pytest.mark.parametrize("space, R", [(SPH, 1.0), (HYP, 0.5), (NORM, 1.0)])
@pytest.mark.parametrize("c, d", [(0.1, 0.05), (0.5, 0.3), (0.9, 0.6)])
def test_family_has_exactly_two_equilibria_at_the_poles(space, R, c, d):
    if space is HYP and R * (1 + d) >= 1:
        pytest.skip("outside the ball model")
    census = find_equilibria(build_body(GombocParams(c, d, R, space)), np.zeros(3), grid=10000)
    assert (census.S, census.H, census.U, census.degenerate_count) == (1, 0, 1, 0)
    for p in census.points:
        assert abs(abs(p.location[0]) - HALF_PI) < 1e-6
        assert (p.kind is EquilibriumKind.STABLE) == (p.location[0] < 0)


def test_ellipsoid_census_and_locations():
    a, b, c = 1.0, 0.8, 0.6
    census = find_equilibria(bodies.ellipsoid_3d(a, b, c), grid=10000)
    assert census.summary() == {"S": 2, "H": 2, "U": 2, "degenerate": 0}
    axis = {EquilibriumKind.STABLE: 2, EquilibriumKind.SADDLE: 1, EquilibriumKind.UNSTABLE: 0}
    for p in census.points:
        u = unit_vectors(*p.location)
        k = int(np.argmax(np.abs(u)))
        assert k == axis[p.kind]
        assert abs(abs(u[k]) - 1.0) < 1e-9
        assert p.distance_value == pytest.approx((a, b, c)[k], abs=1e-12)
    assert poincare_hopf_check(census, 3)


def test_ellipsoid_has_no_other_critical_points_dense_scan():
    # tangential gradient of the radial function on 10^6 random directions
    A = np.diag([1.0, 1 / 0.8**2, 1 / 0.6**2])
    u = np.random.default_rng(1).normal(size=(1_000_000, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    Au = u @ A
    q = np.sum(u * Au, axis=1)
    grad = -(Au - q[:, None] * u) * q[:, None] ** -1.5
    gnorm = np.linalg.norm(grad, axis=1)
    near = gnorm < 1e-2
    dist_to_axis = np.arccos(np.clip(np.max(np.abs(u[near]), axis=1), -1, 1))
    assert near.any()
    assert np.all(dist_to_axis < 0.05)


def test_ball_floods_to_degenerate_census():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EquilibriumWarning)
        census = find_equilibria(bodies.ball(SPH, 1.0), grid=4000)
    assert census.degenerate_count > 0
    assert census.S == census.H == census.U == 0
    assert any(issubclass(w.category, EquilibriumWarning) for w in caught)
    with pytest.raises(PoincareHopfInconclusive):
        poincare_hopf_check(census, 3)


@pytest.mark.parametrize("seed", range(3))
def test_profile_and_chart_radial_have_the_same_critical_points_3d(seed):
    body = bodies.perturbed_ellipsoid_3d((0.5, 0.4, 0.3), seed=seed, amplitude=0.01, space=SPH)
    a = find_equilibria(body, grid=10000)
    b = find_equilibria(body, grid=10000, profile=chart_radial_profile(body))
    assert a.summary() == b.summary()
    assert _kinds_at(a) == _kinds_at(b)


def test_isometry_invariance_3d():
    body = bodies.ellipsoid_3d(0.5, 0.4, 0.3, HYP)
    iso = spaces.center_isometry(HYP, [0.2, -0.15, 0.1])
    moved = body.moved(iso)
    census = find_equilibria(moved, iso(np.zeros(3)), grid=10000)
    assert census.summary() == find_equilibria(body, grid=10000).summary()
    expected = [np.arctanh(x) for x in (0.3, 0.3, 0.4, 0.4, 0.5, 0.5)]
    np.testing.assert_allclose(sorted(p.distance_value for p in census.points), expected, atol=1e-9)


@pytest.mark.parametrize("seed", range(3))
def test_classification_matches_eight_neighbourhood(seed):
    body = bodies.perturbed_ellipsoid_3d((2.0, 1.5, 1.0), seed=seed, amplitude=0.04)
    D = distance_profile(body)
    census = find_equilibria(body, grid=10000)
    step = 1e-3
    for p in census.points:
        u = unit_vectors(*p.location)
        e1, e2 = tangent_frame(u)
        offs = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
        nb = np.array([u + step * (i * e1 + j * e2) for i, j in offs])
        nb /= np.linalg.norm(nb, axis=1, keepdims=True)
        centre, ring = float(D(u)), D(nb)
        if p.kind is EquilibriumKind.STABLE:
            assert np.all(ring > centre)
        elif p.kind is EquilibriumKind.UNSTABLE:
            assert np.all(ring < centre)
        else:
            assert np.any(ring > centre) and np.any(ring < centre)


def test_family_gradient_bounded_away_from_zero_outside_pole_caps():
    c, d = 0.055632172865677176, 0.02
    body = build_body(GombocParams(c, d, 1.0, SPH))
    th = np.linspace(-HALF_PI + 0.05, HALF_PI - 0.05, 512)
    ph = 2 * np.pi * np.arange(1024) / 1024
    T, P = np.meshgrid(th, ph, indexing="ij")
    _, rt, rp, *_ = body.partials(T, P)
    # surface gradient of arctan(radial) divided by the deviation scale R d
    r = body.radial(T, P)
    grad = np.sqrt(rt**2 + (rp / np.cos(T)) ** 2) / (1 + r * r) / d
    assert grad.min() > 5e-3


# -- 2D equilibria ---------------------------------------------------------------------

def test_ellipse_census():
    census = count_equilibria_2d(bodies.ellipse_2d(1.0, 0.6))
    assert census.summary() == {"S": 2, "H": 0, "U": 2, "degenerate": 0}
    for p in census.points:
        phi = float(p.location) % np.pi
        target = HALF_PI if p.kind is EquilibriumKind.STABLE else 0.0
        assert min(abs(phi - target), np.pi - abs(phi - target)) < 1e-8


def test_circle_is_degenerate():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EquilibriumWarning)
        census = count_equilibria_2d(bodies.ball(SpaceKind.euclidean(2), 1.0))
    assert census.degenerate_count > 0


@pytest.mark.parametrize("space", PLANES, ids=lambda s: s.describe())
def test_random_bodies_obey_poincare_hopf(space):
    scale = 0.4 if space.curved else 0.5
    for seed in range(10):
        census = count_equilibria_2d(bodies.random_convex_2d(space, seed, scale=scale))
        assert census.degenerate_count == 0
        assert census.S >= 2 and census.U >= 2
        assert poincare_hopf_check(census, 2)


# in a normed plane the gauge of the direction varies with the angle, so the
# Euclidean chart radius is not a monotone transform of the distance there
@pytest.mark.parametrize("space", PLANES[:3], ids=lambda s: s.describe())
def test_profile_and_chart_radial_agree_on_20_random_bodies(space):
    scale = 0.4 if space.curved else 0.5
    for seed in range(20):
        body = bodies.random_convex_2d(space, seed, scale=scale)
        a = find_equilibria(body, grid=2048)
        b = find_equilibria(body, grid=2048, profile=chart_radial_profile(body))
        assert _kinds_at(a) == _kinds_at(b)


@pytest.mark.parametrize("space", PLANES[:3], ids=lambda s: s.describe())
def test_isometry_invariance_2d(space):
    body = bodies.random_convex_2d(space, 7, scale=0.35)
    iso = spaces.center_isometry(space, [0.15, -0.1])
    a = count_equilibria_2d(body)
    b = count_equilibria_2d(body.moved(iso))
    assert a.summary() == b.summary()
    np.testing.assert_allclose(
        sorted(p.distance_value for p in a.points), sorted(p.distance_value for p in b.points), atol=1e-9
    )


def test_hemisphere_violation_is_reported():
    body = bodies.ball(SpaceKind.spherical(2), 6.0)
    with pytest.raises(HemisphereError):
        count_equilibria_2d(body)


def test_count_2d_rejects_3d_body():
    with pytest.raises(DomainError):
        count_equilibria_2d(bodies.ball(SPH, 1.0))


# -- curvature --------------------------------------------------------------------------

@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_ball_curvature(R):
    T, P = np.meshgrid(np.linspace(-HALF_PI, HALF_PI, 9), np.linspace(0, 6, 9))
    np.testing.assert_allclose(gaussian_curvature(bodies.ball(SPH, R), T, P), 1 / R**2, rtol=1e-6)
    assert min_curvature(bodies.ball(SPH, R), (17, 32)).value == pytest.approx(1 / R**2, rel=1e-6)


@pytest.mark.parametrize("axes", [(1.0, 1.0, 0.5), (1.0, 0.8, 0.6)])
def test_ellipsoid_curvature_at_axis_points(axes):
    body = bodies.ellipsoid_3d(*axes)
    pts = [(HALF_PI, 0.0), (-HALF_PI, 0.0), (0.0, 0.0), (0.0, np.pi), (0.0, HALF_PI), (0.0, 3 * HALF_PI)]
    for t, p in pts:
        x = unit_vectors(t, p) * body.radial(t, p)
        exact = bodies.ellipsoid_curvature(*axes, x)
        assert gaussian_curvature(body, t, p) == pytest.approx(exact, rel=1e-5)
    # (0, 0, 0.5) pole of the oblate spheroid: K = c^2 / a^4 = 0.25
    if axes == (1.0, 1.0, 0.5):
        assert gaussian_curvature(body, HALF_PI, 0.0) == pytest.approx(0.25, rel=1e-6)


def test_analytic_and_fd_curvature_agree():
    body = build_body(GombocParams(0.2, 0.05, 1.0, SPH))
    rng = np.random.default_rng(3)
    t, p = rng.uniform(-1.4, 1.4, 50), rng.uniform(0, 2 * np.pi, 50)
    np.testing.assert_allclose(
        gaussian_curvature(body, t, p, method="analytic"), gaussian_curvature(body, t, p, method="fd"), rtol=1e-4, atol=1e-5
    )


def test_analytic_curvature_needs_partials():
    with pytest.raises(DomainError):
        gaussian_curvature(bodies.ellipsoid_3d(1, 0.8, 0.6), 0.1, 0.2, method="analytic")


@pytest.mark.parametrize("space, R", [(SPH, 1.0), (HYP, 0.5), (NORM, 1.0)])
def test_family_is_convex_for_small_d(space, R):
    assert min_curvature(build_body(GombocParams(0.0556, 0.001, R, space)), (65, 128)).value > 0


def test_family_at_d_zero_is_the_ball():
    assert min_curvature(build_body(GombocParams(0.3, 0.0, 1.3, SPH)), (33, 64)).value == pytest.approx(1 / 1.3**2, rel=1e-6)


# -- d* --------------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def dstar_spherical():
    return find_dstar((0.05, 0.06), 1.0, SPH)


def test_dstar_is_safe_with_margin(dstar_spherical):
    d = dstar_spherical
    assert d > 0
    for c in np.linspace(0.05, 0.06, 5):
        assert min_curvature(build_body(GombocParams(float(c), d / 2, 1.0, SPH)), (65, 128)).value > 1e-6
        assert min_curvature(build_body(GombocParams(float(c), d, 1.0, SPH)), (65, 128)).value > 1e-6


def test_dstar_regression(dstar_spherical):
    assert dstar_spherical == pytest.approx(0.002169489860534668, rel=1e-3)


def test_dstar_example_bound(dstar_spherical):
    # stated example: d* >= 0.01 for the spherical family with R = 1
    assert dstar_spherical >= 0.01


# -- Hausdorff ----------------------------------------------------------------------------------

@pytest.mark.parametrize("space, R", [(SPH, 1.0), (HYP, 0.5), (EUC, 2.0), (NORM, 1.0)])
def test_hausdorff_of_ball_is_zero(space, R):
    ball = build_body(GombocParams(0.5, 0.0, R, space))
    assert hausdorff_to_ball(ball, R) == pytest.approx(0.0, abs=1e-14)


def test_ball_geodesic_radius():
    assert ball_geodesic_radius(SPH, 1.0) == pytest.approx(np.pi / 4)
    assert ball_geodesic_radius(HYP, 0.5) == pytest.approx(0.5493061443340549)
    assert ball_geodesic_radius(EUC, 2.0) == 2.0


@pytest.mark.parametrize("d", [0.02, 0.05])
def test_hausdorff_two_sided_bound(d):
    body = build_body(GombocParams(0.1, d, 1.0, SPH))
    lower = np.arctan(1.0) - np.arctan(1.0 - d)  # attained at the south pole
    value = hausdorff_to_ball(body, 1.0)
    # the grid value carries a Lipschitz margin for the gaps between nodes
    assert lower - 1e-15 <= value <= lower * 1.1


def test_hausdorff_stated_one_sided_bound():
    d = 0.02
    body = build_body(GombocParams(0.1, d, 1.0, SPH))
    assert hausdorff_to_ball(body, 1.0) <= np.arctan(1.0 + d) - np.arctan(1.0)


def test_hausdorff_scales_with_d():
    h1 = hausdorff_to_ball(build_body(GombocParams(0.1, 0.04, 1.0, SPH)), 1.0)
    h2 = hausdorff_to_ball(build_body(GombocParams(0.1, 0.02, 1.0, SPH)), 1.0)
    assert h1 / h2 == pytest.approx(2.0, rel=0.02)


# -- certificate ---------------------------------------------------------------------------------

def test_certificate_records_failures_without_raising(monkeypatch):
    from monostatic import equilibria
    from monostatic.integrate import NoSignChange

    def no_root(*args, **kwargs):
        raise NoSignChange("forced")

    monkeypatch.setattr(equilibria, "find_centering_c", no_root)
    cert = equilibria.certify_mono_monostatic(GombocParams(0.5, 0.02, 1.0, SPH), eps=0.05)
    assert not cert.ok
    assert cert.errors["centering"] == "NoSignChange: forced"
    doc = json.loads(cert.to_json())
    assert set(doc["pass"]) == set("ABCDE")
    assert {"params", "c_star", "centroid_residual", "census", "min_curvature", "hausdorff"} <= set(doc)


def test_certificate_reports_failed_conditions():
    from monostatic.equilibria import certify_mono_monostatic

    # a large deformation is centred but no longer convex
    cert = certify_mono_monostatic(GombocParams(0.5, 0.9, 1.0, EUC), eps=0.05)
    assert cert.passed["B"] and cert.passed["D"]
    assert not cert.passed["C"] and not cert.passed["E"]
    assert cert.min_curvature < 0


def test_certificate_json_shape():
    cert = Certificate(params={"c": 1.0}, census={"S": 1, "H": 0, "U": 1, "degenerate": 0})
    doc = cert.to_dict()
    assert doc["census"] == {"S": 1, "H": 0, "U": 1, "degenerate": 0}
    assert doc["pass"] == dict.fromkeys("ABCDE", False)


def test_centroid_reference_for_moved_body():
    body = bodies.ellipsoid_3d(0.5, 0.4, 0.3, SPH).moved(spaces.center_isometry(SPH, [0.1, 0.2, 0.0]))
    cen = centroid(body)
    census = find_equilibria(body, cen, grid=10000)
    assert census.summary() == {"S": 2, "H": 2, "U": 2, "degenerate": 0}
