import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from intrinsic_lab import superconv as sc
from intrinsic_lab.convex_bodies import IntrinsicVolumeSequence, cube_intrinsic_volumes

thetas = st.floats(min_value=0.01, max_value=0.99)
ts = st.floats(min_value=-8.0, max_value=8.0)
As = st.floats(min_value=0.2, max_value=5.0)


def H(th):
    return special.entr(th) + special.entr(1 - th)


def seq(values):
    return IntrinsicVolumeSequence.from_values(values)


# --- convolution and super-convolutivity ----------------------------------

def test_convolve_examples():
    np.testing.assert_allclose(sc.convolve(seq([1, 2]), seq([1, 2])).values, [1, 4, 4],
                               rtol=1e-14)
    b = seq([1, 3, 0.5])
    np.testing.assert_allclose(sc.convolve(seq([1]), b).logv, b.logv)


@given(st.integers(1, 20), st.integers(1, 20), As)
def test_cubes_convolve_to_cubes(m, n, A):
    got = sc.convolve(cube_intrinsic_volumes(m, A), cube_intrinsic_volumes(n, A))
    np.testing.assert_allclose(got.logv, cube_intrinsic_volumes(m + n, A).logv, atol=1e-11)


def test_check_superconvolutive_examples():
    rep = sc.check_superconvolutive(sc.cube_family(1.7, 30), 30)
    assert rep.passed and abs(rep.worst_margin) <= 1e-11
    bad = sc.SuperConvFamily((seq([1, 1]), seq([1, 0.5, 0.1])))
    rep = sc.check_superconvolutive(bad, 2)
    assert not rep.passed
    # (mu1*mu1) = [1, 2, 1] against [1, 0.5, 0.1]: entry 2 is worst
    assert rep.worst_margin == pytest.approx(math.log(0.1), abs=1e-12)
    assert sc.check_superconvolutive(sc.ball_family(lambda n: math.sqrt(n), 30), 30).passed


def test_family_validation_and_jsonl_round_trip():
    with pytest.raises(ValueError):
        sc.SuperConvFamily((seq([1, 1, 1]),))
    fam = sc.cube_family(2.0, 5)
    back = sc.SuperConvFamily.from_jsonl(fam.to_jsonl())
    assert back.max_n == 5
    for n in range(1, 6):
        np.testing.assert_array_equal(back[n].logv, fam[n].logv)
    with pytest.raises(IndexError):
        fam[6]


# --- generating functions and Lambda --------------------------------------

@given(st.integers(1, 60), ts, As)
def test_cube_generating_function(n, t, A):
    fam = sc.cube_family(A, 60)
    assert float(sc.normalized_generating_function(fam, n, t)) == pytest.approx(
        math.log1p(A * math.exp(t)), rel=1e-12, abs=1e-12)


def test_generating_function_trivial_examples():
    fam = sc.cube_family(1.0, 4)
    assert float(sc.log_generating_function(fam, 4, 0.0)) == pytest.approx(4 * math.log(2))
    point = sc.SuperConvFamily.from_function(
        lambda n: IntrinsicVolumeSequence(n, np.r_[0.0, np.full(n, -np.inf)]), 5)
    assert float(sc.log_generating_function(point, 5, 3.0)) == 0.0


@given(ts, As)
def test_estimate_lambda_cube_exact(t, A):
    est = sc.estimate_lambda(sc.cube_family(A, 40), t)
    truth = math.log1p(A * math.exp(t))
    assert float(est.value[0]) == pytest.approx(truth, rel=1e-11, abs=1e-11)
    assert float(est.lower[0]) <= truth + 1e-11
    assert float(est.upper[0]) >= truth - 1e-11


def test_estimate_lambda_appendix_family_against_brute_force():
    alpha, delta, n = 2.0, 0.25, 400
    fam = sc.appendix_example_family(alpha, delta, n)
    for t in (-1.0, 0.0, 1.0):
        # brute-force large-n value of (1/n) log[(1 + a e^t)^(n-1) + d e^(nt)]
        brute = np.logaddexp((n - 1) * math.log1p(alpha * math.exp(t)),
                             math.log(delta) + n * t) / n
        est = float(sc.estimate_lambda(fam, t).value[0])
        assert abs(est - math.log1p(alpha * math.exp(t))) <= 1e-3
        assert abs(brute - math.log1p(alpha * math.exp(t))) <= 5e-3


def test_lambda_tends_to_beta_as_t_decreases():
    fam = sc.appendix_example_family(2.0, 0.25, 100)
    assert float(sc.estimate_lambda(fam, -40.0).value[0]) == pytest.approx(0.0, abs=1e-12)


def test_appendix_family_examples_and_validation():
    fam = sc.appendix_example_family(2.0, 0.25, 3)
    np.testing.assert_allclose(fam[3].values, [1, 4, 4, 0.25], rtol=1e-13)
    assert all(fam[n].logv[0] == 0.0 for n in range(1, 4))
    for a, d in ((1.0, 0.25), (2.0, 0.5), (2.0, 0.0)):
        with pytest.raises(ValueError):
            sc.appendix_example_family(a, d, 3)
    assert sc.check_superconvolutive(sc.appendix_example_family(2.0, 0.25, 40), 40).passed


@pytest.mark.parametrize("builder", [
    lambda: sc.cube_family(1.3, 60),
    lambda: sc.ball_family(lambda n: math.sqrt(n), 60),
    lambda: sc.crosspolytope_family(1.0, 30),
    lambda: sc.appendix_example_family(2.0, 0.25, 60),
])
def test_lambda_bounds_and_superadditivity(builder):
    fam = builder()
    grid = np.linspace(-5, 5, 21)
    assert sc.check_lambda_bounds(fam, grid).passed
    assert sc.check_gn_superadditivity(fam, grid).passed


def test_properness():
    rep = sc.properness(sc.appendix_example_family(2.0, 0.25, 100))
    assert rep.proper and rep.gamma_status == "finite"
    assert rep.beta == 0.0
    assert rep.alpha == pytest.approx(math.log(0.25) / 100)
    assert rep.gamma == pytest.approx(math.log(3.0), abs=1e-3)
    assert rep.gamma_lower <= math.log(3.0) + 1e-12
    hole = sc.SuperConvFamily((seq([1, 1]), seq([1, 2, 0])))
    assert not sc.properness(hole).proper


# --- conjugates ------------------------------------------------------------

@given(thetas, As)
def test_conjugate_of_cube_generating_function(th, A):
    f = lambda t: np.log1p(A * np.exp(t))
    val = sc.legendre_conjugate(f, th)
    assert -val == pytest.approx(H(th) + th * math.log(A), abs=1e-9)


def test_conjugate_trivial_examples():
    assert sc.legendre_conjugate(np.abs, 0.5) == pytest.approx(0.0, abs=1e-9)
    beta = -0.7
    f = lambda t: np.logaddexp(beta, t)  # nondecreasing, tends to beta at -inf
    assert sc.legendre_conjugate(f, 0.0) == pytest.approx(-beta, abs=1e-9)
    with pytest.raises(ValueError):
        sc.legendre_conjugate(f, 1.5)


def test_conjugate_escaping_maximizer_raises():
    # theta t - f is unbounded above: the value keeps growing with the bracket
    with pytest.raises(sc.ConjugateBracketError):
        sc.legendre_conjugate(lambda t: np.zeros_like(t), 0.5)


def test_maximizer_bracket_contains_stationary_point():
    A = 2.0
    th = np.linspace(0.05, 0.95, 19)
    fam = sc.cube_family(A, 2)
    gamma = math.log1p(A)
    lo, hi = sc.maximizer_bracket(th, gamma, fam[1].logv[0], fam[1].logv[1])
    t_star = np.log(th / (A * (1 - th)))
    assert np.all(lo <= t_star) and np.all(t_star <= hi)


# --- rate curves -----------------------------------------------------------

@pytest.mark.parametrize("mode", ["gn_star", "lambda_star"])
@pytest.mark.parametrize("A", [0.5, 1.0, 3.0])
def test_rate_curve_cube(mode, A):
    grid = np.linspace(0, 1, 41)
    curve = sc.rate_curve(sc.cube_family(A, 100), grid, mode)
    np.testing.assert_allclose(-curve.values, H(grid) + grid * math.log(A), atol=1e-8)
    assert np.all(curve.bracket_lo <= curve.values + 1e-8)
    assert np.all(curve.values <= curve.bracket_hi + 1e-8)
    assert curve.to_csv().startswith("theta,value,bracket_lo,bracket_hi\n")


def test_rate_curve_appendix_strict_gap():
    alpha, delta, n = 2.0, 0.25, 400
    fam = sc.appendix_example_family(alpha, delta, n)
    lam = sc.rate_curve(fam, [0.0, 0.5, 1.0], "lambda_star")
    assert lam.values[-1] == pytest.approx(-math.log(alpha), abs=1e-3)
    assert lam.endpoints["strict_gap_at_1"]
    gn = sc.rate_curve(fam, [0.0, 0.5, 1.0], "gn_star")
    assert gn.values[-1] == pytest.approx(-math.log(delta) / n, abs=1e-12)


def test_rate_curve_rejects_grid_outside_unit_interval():
    with pytest.raises(ValueError):
        sc.rate_curve(sc.cube_family(1.0, 4), [-0.1, 0.5])


@pytest.mark.parametrize("fam", [
    sc.cube_family(1.5, 80),
    sc.ball_family(lambda n: math.sqrt(n), 80),
    sc.appendix_example_family(2.0, 0.25, 80),
])
def test_gn_star_bounded_below_by_minus_gamma(fam):
    grid = np.linspace(0, 1, 51)
    gamma = sc.properness(fam).gamma
    for n in (10, 40, 80):
        curve = sc.rate_curve(fam.truncated(n), grid, "gn_star")
        assert np.all(curve.values >= -gamma - 1e-9)


def test_gn_star_converges_pointwise():
    grid = np.linspace(0.05, 0.95, 19)
    for fam in (sc.cube_family(1.5, 320), sc.ball_family(lambda n: math.sqrt(n), 320)):
        curves = {n: sc.rate_curve(fam.truncated(n), grid, "gn_star").values
                  for n in (20, 40, 80, 160, 320)}
        gaps = [np.max(np.abs(curves[2 * n] - curves[n])) for n in (20, 40, 80, 160)]
        assert all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:])), gaps


def test_curve_concavity_of_ball_family():
    grid = np.linspace(0, 1, 51)
    curve = sc.rate_curve(sc.ball_family(lambda n: math.sqrt(n), 200), grid, "gn_star")
    assert sc.curve_concavity(-curve.values) <= 1e-6


# --- interval masses -------------------------------------------------------

def test_interval_mass_examples():
    fam = sc.cube_family(1.0, 200)
    assert sc.interval_mass_bounds(fam, (0, 1), 200) == pytest.approx(math.log(2), abs=1e-12)
    assert abs(sc.interval_mass_bounds(fam, (0.4, 0.6), 200) - math.log(2)) <= 0.02
    assert sc.interval_mass_bounds(fam, (0.3333, 0.3333), 200) == -np.inf
    with pytest.raises(ValueError):
        sc.interval_mass_bounds(fam, (0.6, 0.4), 200)


def test_interval_mass_sandwich_cube():
    fam = sc.cube_family(1.0, 400)
    a, b = 0.2, 0.35
    grid = np.unique(np.r_[np.linspace(0, 1, 101), np.linspace(a, b, 151)])
    curve = sc.rate_curve(fam, grid, "lambda_star")
    mass = sc.interval_mass_bounds(fam, (a, b), 400)
    assert mass <= -sc.rate_infimum(curve, (a, b)) + 0.05
    assert mass >= -sc.rate_infimum(curve, (a, b), open_=True) - 0.05
    # binomial tail oracle: the mass concentrates at the endpoint nearest 1/2
    assert mass == pytest.approx(H(b), abs=0.02)
