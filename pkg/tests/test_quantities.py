import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from warpflow import quantities as qty
from warpflow.errors import MeanConvexityError, RangeError
from warpflow.flow import cfl_dt, speed, step
from warpflow.geometry import GraphSurface, curvature_field
from warpflow.grid import Grid, sphere_area
from warpflow.initdata import offcenter_sphere, perturbed_slice, slice
from warpflow.warp import make_model

S1, C1 = math.sinh(1.0), math.cosh(1.0)
FOUR_PI = 4 * math.pi


@pytest.fixture(scope="module")
def hyp():
    return make_model("Hyperbolic", 2)


@pytest.fixture(scope="module")
def hyp_profile(hyp):
    return qty.build_slice_profile(hyp)


@pytest.fixture(scope="module")
def ads():
    return make_model("AdSSchwarzschild", 2, 1.0)


# --- functionals on slices (closed forms) -------------------------------------


def test_hyperbolic_slice_functionals(hyp):
    surf = slice(hyp, Grid(1024, 2), 1.0)
    assert qty.area(surf) == pytest.approx(FOUR_PI * S1**2, rel=1e-3)
    assert qty.area(surf) == pytest.approx(17.3554, rel=1e-4)
    assert qty.weighted_volume(surf) == pytest.approx(FOUR_PI * S1**3 / 3, rel=1e-3)
    assert qty.weighted_volume(surf) == pytest.approx(6.79869, rel=1e-4)
    assert qty.mean_weighted(surf) == pytest.approx(2 * FOUR_PI * C1**2 * S1, rel=1e-3)
    assert qty.mean_weighted(surf) == pytest.approx(70.328, rel=1e-4)
    assert qty.curvature_volume(surf) == pytest.approx(4 * FOUR_PI * S1**3 / 3, rel=1e-3)
    assert qty.curvature_volume(surf) == pytest.approx(27.1948, rel=1e-4)
    assert qty.weighted_area(surf) == pytest.approx(FOUR_PI * C1 * S1**2, rel=1e-3)


def test_slice_area_any_model():
    for kind, m, s in [("SphericalCap", 0, 0.6), ("Euclidean", 0, 2.0), ("AdSSchwarzschild", 1.0, 1.2)]:
        model = make_model(kind, 3, m)
        surf = slice(model, Grid(512, 3), s)
        lam = model.eval(np.array([s]))[0][0]
        assert qty.area(surf) == pytest.approx(sphere_area(3) * lam**3, rel=1e-10)


def test_euclidean_curvature_volume_zero():
    surf = perturbed_slice(make_model("Euclidean", 2), Grid(128, 2), 2.0, 0.2, 3)
    assert qty.curvature_volume(surf) == 0.0


def test_weighted_volume_near_inner_end_and_monotone(hyp):
    grid = Grid(64, 2)
    assert qty.weighted_volume(slice(hyp, grid, 1e-9)) < 1e-20
    base = perturbed_slice(hyp, grid, 1.0, 0.1, 2)
    bigger = GraphSurface(base.r + 0.01 * (1 + np.cos(grid.theta) ** 2), hyp, grid)
    assert qty.weighted_volume(bigger) > qty.weighted_volume(base)


# --- functionals on non-slices against independent quadrature ------------------


def _analytic_graph(model, s, A, mode):
    r = lambda t: s + A * math.cos(mode * t)
    dr = lambda t: -mode * A * math.sin(mode * t)
    lam = lambda x: float(model.eval(np.array([x]))[0][0])
    dlam = lambda x: float(model.eval(np.array([x]))[1][0])
    return r, dr, lam, dlam


@pytest.mark.parametrize("kind", ["Hyperbolic", "SphericalCap", "AdSSchwarzschild"])
def test_area_and_weighted_volume_against_quadrature(kind):
    model = make_model(kind, 2, 1.0 if kind == "AdSSchwarzschild" else 0.0)
    s, A, mode = (0.7, 0.05, 2) if kind == "SphericalCap" else (1.0, 0.1, 2)
    r, dr, lam, dlam = _analytic_graph(model, s, A, mode)
    two_pi = 2 * math.pi
    area_ref = two_pi * quad(
        lambda t: math.sqrt(1 + (dr(t) / lam(r(t))) ** 2) * lam(r(t)) ** 2 * math.sin(t),
        0, math.pi, epsabs=1e-12, limit=200)[0]
    wvol_ref = two_pi * dblquad(
        lambda x, t: dlam(x) * lam(x) ** 2 * math.sin(t),
        0, math.pi, lambda t: model.a, r, epsabs=1e-11, epsrel=1e-11)[0]
    errs = []
    for N in (256, 512):
        surf = perturbed_slice(model, Grid(N, 2), s, A, mode)
        errs.append((abs(qty.area(surf) - area_ref), abs(qty.weighted_volume(surf) - wvol_ref)))
    assert errs[-1][0] <= 1e-4 * area_ref
    assert errs[-1][1] <= 1e-4 * wvol_ref
    assert errs[0][0] / errs[1][0] > 3.0  # second order


def test_mean_weighted_against_quadrature(hyp):
    # curvatures from exact derivatives of r(t) = 1 + 0.1 cos 2t
    s, A = 1.0, 0.1
    r = lambda t: s + A * math.cos(2 * t)
    dr = lambda t: -2 * A * math.sin(2 * t)
    ddr = lambda t: -4 * A * math.cos(2 * t)

    def integrand(t):
        x = r(t)
        lam, dl = math.sinh(x), math.cosh(x)
        p1 = dr(t) / lam
        p2 = ddr(t) / lam - dl * dr(t) ** 2 / lam**2
        v = math.sqrt(1 + p1 * p1)
        k1 = (dl - p2 / v**2) / (lam * v)
        k2 = (dl - p1 * math.cos(t) / math.sin(t)) / (lam * v)
        return (k1 + k2) * dl * v * lam**2 * 2 * math.pi * math.sin(t)

    ref = quad(integrand, 0, math.pi, epsabs=1e-12, limit=200)[0]
    surf = perturbed_slice(hyp, Grid(1024, 2), s, A, 2)
    assert qty.mean_weighted(surf) == pytest.approx(ref, rel=1e-4)


# --- identities ----------------------------------------------------------------


@pytest.mark.parametrize("kind,s", [("Hyperbolic", 1.0), ("SphericalCap", 0.8), ("AdSSchwarzschild", 1.0)])
def test_identities_vanish_on_slices(kind, s):
    model = make_model(kind, 2, 1.0 if kind == "AdSSchwarzschild" else 0.0)
    surf = slice(model, Grid(128, 2), s)
    assert abs(qty.minkowski_residual(surf)) <= 1e-12 * qty.area(surf)
    assert abs(qty.sigma2_identity_residual(surf)) <= 1e-12 * qty.area(surf)
    assert abs(qty.heintze_karcher_deficit(surf)) <= 1e-12 * qty.area(surf)


def _ladder(fn, model, s, A, mode, n=2):
    return [fn(perturbed_slice(model, Grid(N, n), s, A, mode)) for N in (256, 512, 1024)]


@pytest.mark.parametrize("kind,m,s,A,mode", [
    ("Hyperbolic", 0.0, 1.0, 0.1, 2),
    ("AdSSchwarzschild", 1.0, 1.0, 0.1, 2),
    ("Euclidean", 0.0, 2.0, 0.3, 3),
])
def test_identity_residuals_converge(kind, m, s, A, mode):
    model = make_model(kind, 2, m)
    area = qty.area(perturbed_slice(model, Grid(1024, 2), s, A, mode))
    for fn in (qty.minkowski_residual, qty.sigma2_identity_residual):
        res = _ladder(fn, model, s, A, mode)
        assert abs(res[-1]) <= 1e-3 * area
        assert abs(res[0]) > abs(res[1]) > abs(res[2])
        assert math.log2(abs(res[0] / res[1])) >= 1.8
        assert math.log2(abs(res[1] / res[2])) >= 1.8


def test_sigma2_radial_coefficient_vanishes_for_space_forms():
    for kind in ("Hyperbolic", "SphericalCap", "Euclidean"):
        model = make_model(kind, 2)
        surf = perturbed_slice(model, Grid(64, 2), 0.7, 0.05, 2)
        c = qty._ricci_radial_coefficient(curvature_field(surf))
        assert np.max(np.abs(c)) < 1e-12


def test_minkowski2_gap_nonnegative_in_ads(ads):
    # radial coefficient m (n+1) / (2 lambda^(n+1)) > 0 makes the inequality strict
    surf = perturbed_slice(ads, Grid(512, 2), 1.0, 0.1, 2)
    gap = qty.minkowski2_gap(surf)
    assert gap > 10 * qty.default_slack(surf, gap)
    cf = curvature_field(surf)
    c = qty._ricci_radial_coefficient(cf)
    assert np.allclose(c, 1.0 * 3 / (2 * cf.lam**3), rtol=1e-8)


def test_heintze_karcher_deficit(hyp):
    surf = perturbed_slice(hyp, Grid(512, 2), 1.0, 0.1, 2)
    assert qty.heintze_karcher_deficit(surf) > 0
    wavy = GraphSurface(2 + 0.3 * np.cos(8 * Grid(256, 2).theta), make_model("Euclidean", 2), Grid(256, 2))
    with pytest.raises(MeanConvexityError):
        qty.heintze_karcher_deficit(wavy)


def test_area_bound_on_random_perturbed_slices(hyp):
    rng = np.random.default_rng(7)
    grid = Grid(256, 2)
    checked = 0
    while checked < 20:
        s = rng.uniform(0.5, 2.0)
        A = rng.uniform(0.0, 0.1 * s)
        surf = perturbed_slice(hyp, grid, s, A, int(rng.integers(1, 5)))
        cf = curvature_field(surf)
        if np.any(cf.H <= 0):
            continue
        bound = sphere_area(2) * math.sinh(surf.r.max()) ** 2
        assert qty.area(surf, cf) <= bound * (1 + 10 * grid.dtheta**2)
        checked += 1


# --- slice profile ------------------------------------------------------------


def test_profile_round_trip(hyp_profile):
    worst = 0.0
    for s, A, W, Q in zip(hyp_profile.s, hyp_profile.A, hyp_profile.W, hyp_profile.Q):
        worst = max(worst, abs(Q - hyp_profile.xi1(A)), abs(Q - hyp_profile.xi0(W)))
    assert worst <= 1e-8
    # between ladder points too
    for s in (0.37, 1.0, 2.345):
        A, W, Q = qty.slice_values(hyp_profile.model, s)
        assert hyp_profile.xi1(A) == pytest.approx(Q, abs=1e-9)
        assert hyp_profile.xi0(W) == pytest.approx(Q, abs=1e-9)


def test_profile_xi0_hand_value(hyp_profile):
    W1 = FOUR_PI * S1**3 / 3
    Q1 = 2 * FOUR_PI * C1**2 * S1 - 4 * FOUR_PI * S1**3 / 3
    assert Q1 == pytest.approx(43.1334, abs=1e-3)
    assert qty.xi0(hyp_profile, W1) == pytest.approx(Q1, rel=1e-12)


def test_profile_monotone_and_range(hyp_profile):
    assert hyp_profile.q_monotone
    xi = [hyp_profile.xi1(A) for A in hyp_profile.A[::20]]
    assert np.all(np.diff(xi) > 0)
    with pytest.raises(RangeError):
        hyp_profile.xi1(hyp_profile.A[-1] * 1.01)
    with pytest.raises(RangeError):
        hyp_profile.xi0(-1.0)


def test_profile_for_ads_and_sphere(ads):
    prof = qty.build_slice_profile(ads, np.linspace(0.01, 3.0, 200))
    assert prof.q_monotone
    cap = qty.build_slice_profile(make_model("SphericalCap", 2))
    # Q = 2|S^2| (cos^2 s sin s + sin^3 s / 3) - Q need not be monotone on the sphere
    s = 0.4
    A, W, Q = qty.slice_values(cap.model, s)
    assert cap.xi1(A) == pytest.approx(Q, abs=1e-10)


# --- inequality audit -----------------------------------------------------------


def _by_name(records):
    return {r.name: r for r in records}


def test_equality_case_hyperbolic_slice(hyp, hyp_profile):
    surf = slice(hyp, Grid(1024, 2), 1.0)
    rep = _by_name(qty.inequality_report(surf, hyp_profile))
    target = 8 * math.pi * S1
    r3 = rep["hyperbolic-weighted-isoperimetric"]
    assert abs(r3.gap) / r3.rhs <= 1e-3
    assert r3.lhs == pytest.approx(target, rel=1e-3)
    assert r3.rhs == pytest.approx(target, rel=1e-3)
    r4 = rep["horo-convex-minkowski"]
    assert r4.applicable and abs(r4.gap) / r4.rhs <= 1e-3
    for rec in rep.values():
        assert rec.holds


@pytest.mark.parametrize("maker", [
    lambda m, g: offcenter_sphere(m, g, 1.0, 0.3),
    lambda m, g: perturbed_slice(m, g, 1.0, 0.1, 2),
])
def test_strict_cases(hyp, hyp_profile, maker):
    surf = maker(hyp, Grid(1024, 2))
    rep = _by_name(qty.inequality_report(surf, hyp_profile))
    for name in ("xi1-area", "xi0-weighted-volume", "hyperbolic-weighted-isoperimetric",
                 "horo-convex-minkowski"):
        assert rep[name].applicable
        assert rep[name].gap > 10 * rep[name].slack
    assert rep["BHW-2"].info_only


def test_report_applicability_flags(hyp_profile):
    eu = make_model("Euclidean", 2)
    surf = perturbed_slice(eu, Grid(256, 2), 1.0, 0.05, 2)
    rep = _by_name(qty.inequality_report(surf, qty.build_slice_profile(eu)))
    assert not rep["xi1-area"].applicable
    assert "hyperbolic-weighted-isoperimetric" not in rep
    ads = make_model("AdSSchwarzschild", 2, 1.0)
    surf = perturbed_slice(ads, Grid(256, 2), 1.0, 0.05, 2)
    rep = _by_name(qty.inequality_report(surf, qty.build_slice_profile(ads, np.linspace(0.01, 3, 300))))
    assert rep["xi1-area"].applicable and rep["xi1-area"].holds
    assert rep["BHW-1"].info_only


def test_report_requires_mean_convexity(hyp_profile):
    eu = make_model("Euclidean", 2)
    grid = Grid(256, 2)
    wavy = GraphSurface(2 + 0.3 * np.cos(8 * grid.theta), eu, grid)
    with pytest.raises(MeanConvexityError):
        qty.inequality_report(wavy, qty.build_slice_profile(eu))


def test_not_horoconvex_marks_inapplicable(hyp_profile, hyp):
    # large slice perturbation: minimum curvature dips below 1
    surf = perturbed_slice(hyp, Grid(512, 2), 2.0, 0.3, 4)
    cf = curvature_field(surf)
    assert cf.kappa_min < 1 and np.all(cf.H > 0)
    rep = _by_name(qty.inequality_report(surf, hyp_profile, cf))
    assert not rep["horo-convex-minkowski"].applicable
    assert "not horo-convex" in rep["horo-convex-minkowski"].hypothesis_notes


# --- variational formulas ----------------------------------------------------------


def test_first_variation_formulas(hyp):
    """Centred time differences of W, |M| and int H lambda' match the variation integrals."""
    grid = Grid(256, 2)
    surf = perturbed_slice(hyp, grid, 1.0, 0.1, 2)
    dt = 0.25 * cfl_dt(surf, 1, 0.5)
    fwd = step(surf, 1, dt)
    bwd = step(surf, 1, -dt)
    cf = curvature_field(surf)
    f = speed(surf, 1)
    dmu = cf.v * cf.lam**2
    dW = (qty.weighted_volume(fwd) - qty.weighted_volume(bwd)) / (2 * dt)
    dA = (qty.area(fwd) - qty.area(bwd)) / (2 * dt)
    dHL = (qty.mean_weighted(fwd) - qty.mean_weighted(bwd)) / (2 * dt)
    eW = grid.integrate(cf.dlam * f * dmu)
    eA = grid.integrate(cf.H * f * dmu)
    # <grad lambda', nu> = lambda'' <d_r, nu> = (lambda'' / lambda) u
    eHL = grid.integrate((2 * cf.sigma2 * cf.dlam + 2 * cf.H * cf.d2lam / cf.lam * cf.u) * f * dmu)
    scale = grid.integrate(np.abs(f) * dmu)
    assert dW == pytest.approx(eW, abs=5e-3 * scale)
    assert dA == pytest.approx(eA, abs=5e-3 * scale * 3)
    assert dHL == pytest.approx(eHL, abs=5e-2 * scale * 3)
    assert dW > 0 and dA > 0 and dHL - 2 * 2 * eW < 0
