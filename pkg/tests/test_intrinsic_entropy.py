import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from intrinsic_lab import intrinsic_entropy as ie
from intrinsic_lab import logconcave as lc
from intrinsic_lab import superconv as sc

thetas = st.floats(min_value=0.0, max_value=1.0)
nus = st.floats(min_value=0.05, max_value=20.0)
As = st.floats(min_value=0.1, max_value=10.0)


def H_direct(t):
    return -sum(p * math.log(p) for p in (t, 1 - t) if p > 0)


# --- closed forms ----------------------------------------------------------

def test_binary_entropy_examples():
    assert ie.binary_entropy(0.5) == pytest.approx(math.log(2), abs=1e-15)
    assert ie.binary_entropy(0.0) == 0.0 and ie.binary_entropy(1.0) == 0.0
    assert ie.binary_entropy(0.25) == pytest.approx(0.562335144618, abs=1e-12)
    with pytest.raises(ValueError):
        ie.binary_entropy(1.2)


@given(thetas)
def test_binary_entropy_matches_direct_sum(t):
    assert ie.binary_entropy(t) == pytest.approx(H_direct(t), abs=1e-14)
    assert ie.binary_entropy(t) == pytest.approx(ie.binary_entropy(1 - t), abs=1e-14)


def test_gaussian_h_theta_examples():
    c = math.log(2 * math.pi * math.e)
    assert ie.gaussian_h_theta(1.0, 1.0) == pytest.approx(0.5 * c, abs=1e-15)
    assert ie.gaussian_h_theta(1.0, 0.0) == 0.0
    want = math.log(2) + 0.25 * c + 0.25 * math.log(0.5)
    assert ie.gaussian_h_theta(1.0, 0.5) == pytest.approx(want, abs=1e-14)


@given(nus, thetas)
def test_gaussian_h_theta_formula(nu, t):
    tail = 0.5 * (1 - t) * math.log(1 - t) if t < 1 else 0.0
    want = H_direct(t) + 0.5 * t * math.log(2 * math.pi * math.e * nu) + tail
    assert ie.gaussian_h_theta(nu, t) == pytest.approx(want, abs=1e-12)


def test_uniform_h_theta_examples():
    assert ie.uniform_h_theta(3.0, 1.0) == pytest.approx(math.log(3.0))
    assert ie.uniform_h_theta(3.0, 0.0) == 0.0
    assert ie.uniform_h_theta(1.0, 0.5) == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        ie.uniform_h_theta(0.0, 0.5)


@given(As, st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_closed_forms_are_concave(A, a, b, lam):
    x = lam * a + (1 - lam) * b
    for f in (lambda t: ie.uniform_h_theta(A, t), lambda t: ie.gaussian_h_theta(A, t)):
        assert f(x) >= lam * f(a) + (1 - lam) * f(b) - 1e-12


def test_closed_form_curve_endpoints():
    c = ie.closed_form_curve(lc.gaussian(2.0), np.linspace(0, 1, 11))
    rep = ie.endpoint_checks(c)
    assert rep.passed and rep.dominance_margin >= 0
    with pytest.raises(ValueError):
        ie.closed_form_h_theta(lc.laplace(1.0), 0.5)


# --- the numeric pipeline --------------------------------------------------

@pytest.fixture(scope="module")
def gaussian_curve():
    return ie.estimate_curve(lc.gaussian(1.0), np.linspace(0, 1, 21), n_max=400)


def test_gaussian_pipeline_matches_closed_form(gaussian_curve):
    c = gaussian_curve
    truth = ie.gaussian_h_theta(1.0, c.theta)
    inner = (c.theta >= 0.1 - 1e-12) & (c.theta <= 0.9 + 1e-12)
    assert np.max(np.abs(c.values[inner] - truth[inner])) <= 0.02
    assert np.all(c.lo <= truth + 1e-12) and np.all(truth <= c.hi + 1e-12)
    assert c.converged and c.mode == "pipeline"


def test_gaussian_pipeline_midpoint(gaussian_curve):
    k = int(np.argmin(np.abs(gaussian_curve.theta - 0.5)))
    assert gaussian_curve.values[k] == pytest.approx(ie.gaussian_h_theta(1.0, 0.5), abs=0.02)


def test_per_eps_curves_monotone_and_bounded(gaussian_curve):
    d = lc.gaussian(1.0)
    c = gaussian_curve
    eps = sorted(c.per_eps, reverse=True)
    for big, small in zip(eps, eps[1:]):
        assert np.all(c.per_eps[small] <= c.per_eps[big] + 1e-9)
    for e in eps:
        v = c.per_eps[e]
        assert np.all(v >= c.theta * (d.entropy - e) - 1e-9)
        upper = ie.binary_entropy(c.theta) + d.entropy + e - (1 - c.theta) * d.eta
        assert np.all(v <= upper + 1e-9)
    assert c.endpoints["monotone_in_eps"]


def test_gaussian_curve_concave_and_endpoints(gaussian_curve):
    assert ie.curve_second_differences(gaussian_curve) <= 1e-6
    rep = ie.endpoint_checks(gaussian_curve, lc.gaussian(1.0))
    assert rep.passed
    lo, hi = rep.h1_bracket
    assert lo <= 0.5 * math.log(2 * math.pi * math.e) <= hi


def test_interpolant_matches_grid_points():
    fam = ie.typical_family(lc.gaussian(1.0), 0.1, 10)
    lv = fam[10].logv
    got = ie.interpolant(lv, np.array([0.0, 0.3, 0.35, 1.0]))
    np.testing.assert_allclose(got, [lv[0] / 10, lv[3] / 10, (lv[3] + lv[4]) / 20, lv[10] / 10])


def test_uniform_pipeline_exact():
    grid = np.linspace(0, 1, 41)
    for A in (0.5, 2.0):
        c = ie.estimate_curve(lc.uniform(A), grid, n_max=200)
        np.testing.assert_allclose(c.values, ie.uniform_h_theta(A, grid), atol=1e-8)
        # eps-independent typical sets: every ladder rung gives the same curve
        for v in c.per_eps.values():
            np.testing.assert_allclose(v, ie.uniform_h_theta(A, grid), atol=1e-8)
    rep = ie.endpoint_checks(ie.estimate_curve(lc.uniform(1.0), grid, n_max=100))
    assert rep.passed
    assert rep.h0_bracket[0] <= 0.0 <= rep.h0_bracket[1]


def test_ladder_validation():
    with pytest.raises(ValueError):
        ie.estimate_curve(lc.gaussian(1.0), [0.5], eps_ladder=(0.1, 0.0))
    with pytest.raises(ValueError):
        ie.estimate_curve(lc.gaussian(1.0), [1.5])


def test_laplace_band():
    d = lc.laplace(1.0)
    grid = np.linspace(0, 1, 11)
    c = ie.estimate_curve(d, grid, eps_ladder=(0.1, 0.05), n_max=2, samples=50_000)
    assert c.mode == "band" and np.all(np.isnan(c.values))
    assert np.all(c.lo <= c.hi + 1e-12)
    np.testing.assert_allclose(c.lo, grid * d.entropy)
    A = (d.entropy + 0.05 - math.log(2)) / 0.5
    assert np.all(c.hi <= ie.crosspolytope_upper(A, grid) + 1e-12)
    assert {p["n"] for p in c.fit_points} == {1, 2}
    assert ie.endpoint_checks(c, d).passed
    doc = json.loads(c.to_json())
    assert doc["h"][0] is None and doc["mode"] == "band"


def test_crosspolytope_upper_dominates_crosspolytope_family():
    # finite-n conjugate curve of the crosspolytope family sits below the limit bound
    grid = np.linspace(0, 1, 21)
    fam = sc.crosspolytope_family(1.0, 30)
    curve = -sc.rate_curve(fam, grid, "gn_star").values
    assert np.all(curve <= ie.crosspolytope_upper(1.0, grid) + 1e-12)
    assert ie.crosspolytope_upper(1.0, 0.0) == 0.0


def test_curve_exports():
    c = ie.estimate_curve(lc.uniform(2.0), [0.0, 0.5, 1.0], n_max=50)
    lines = c.to_csv().splitlines()
    assert lines[0] == "theta,h,lo,hi" and len(lines) == 4
    doc = json.loads(c.to_json())
    assert doc["eps_ladder"] == list(ie.DEFAULT_LADDER) and doc["n_max"] == 50


# --- diagnostics -----------------------------------------------------------

def test_concavity_diagnostics_examples():
    assert ie.concavity_diagnostics(ie.typical_family(lc.gaussian(1.0), 0.05, 400)).passed
    rep = ie.concavity_diagnostics(sc.cube_family(2.0, 100))
    assert rep.passed and rep.worst_af_margin > 0
    rep = ie.concavity_diagnostics(sc.crosspolytope_family(1.0, 40), tol=1e-7)
    assert rep.passed


def test_concavity_diagnostics_flags_failure():
    from intrinsic_lab.convex_bodies import IntrinsicVolumeSequence
    bad = sc.SuperConvFamily((IntrinsicVolumeSequence.from_values([1, 1]),
                              IntrinsicVolumeSequence.from_values([1, 1, 10])))
    rep = ie.concavity_diagnostics(bad)
    assert not rep.passed and rep.failing == (2,)


def test_epi_examples():
    g = lc.gaussian(1.0)
    rep = ie.epi_conjecture_check(g, g, [0.5, 1.0])
    assert rep.label == "conjecture evidence"
    assert abs(rep.relative_gap[-1]) <= 1e-12
    assert rep.signs.shape == (2,)
    with pytest.raises(ie.UnsupportedPairError):
        ie.epi_conjecture_check(lc.uniform(1.0), lc.uniform(1.0), [0.5])


@given(nus, nus, st.floats(0.05, 1.0))
def test_epi_gaussian_gap_against_direct_evaluation(nx, ny, t):
    rep = ie.epi_conjecture_check(lc.gaussian(nx), lc.gaussian(ny), [t])
    f = lambda nu: math.exp(2 * ie.gaussian_h_theta(nu, t) / t)
    direct = (f(nx) + f(ny)) / f(nx + ny) - 1
    assert rep.relative_gap[0] == pytest.approx(direct, abs=1e-9)
