import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rslab.grid import GridError, TimeGrid
from rslab.relaxation import (ConvergenceError, FracParams, branch_cut_samples, check_bounds_corrected,
                              check_bounds_prop21, check_complete_monotonicity, check_mu_monotonicity,
                              conv_weights, convolve, g_beta, omega_branch_cut, omega_branch_cut_many,
                              omega_volterra, product_integral, relaxation_samples, scalar_inhomogeneous)

P = FracParams(0.5, 1.0)
# omega(1; alpha=.5, gamma=1, mu=1): branch-cut quadrature at atol 1e-12 and
# the extrapolated Volterra march at h=1e-4 agree to 4e-9; frozen here.
OMEGA_1 = 0.2162429044011517

alphas = st.sampled_from([0.25, 0.5, 0.75])
gammas = st.sampled_from([0.0, 0.5, 1.0, 2.0])
mus = st.floats(0.1, 30.0)


def test_params_validation():
    with pytest.raises(ValueError):
        FracParams(1.0, 1.0)
    with pytest.raises(ValueError):
        FracParams(0.5, -0.1)
    assert FracParams(0.3, 0.0).oracle
    assert P.beta == 0.5


def test_g_beta():
    assert g_beta(0.5, 0.0) == 0.0
    assert g_beta(0.5, 1.0) == pytest.approx(1 / math.sqrt(math.pi))


def test_mu_zero_is_constant_one():
    s = omega_volterra(P, 0.0, TimeGrid.uniform(1.0, 0.01))
    np.testing.assert_array_equal(s.values, 1.0)


@pytest.mark.parametrize("method", ["volterra", "branch_cut"])
def test_starts_at_one(method):
    s = relaxation_samples(P, 7.0, TimeGrid.uniform(1.0, 0.05), method=method)
    assert s.values[0] == 1.0


def test_reference_value_both_routes():
    assert omega_branch_cut(P, 1.0, 1.0) == pytest.approx(OMEGA_1, rel=1e-9)
    g = TimeGrid.graded(1.0, 400, 3.0)
    vol = omega_volterra(P, 1.0, g, extrapolate=True)
    assert vol.values[-1] == pytest.approx(OMEGA_1, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_branch_cut_small_time_limit(alpha):
    # 1 - omega ~ gamma mu t^(1-alpha) / Gamma(2-alpha): within 1e-3 of 1 at
    # t = 1e-6 only for alpha <= 1/2 - log(1.13)/log(1e6); alpha = .5 misses by 1.3e-4
    p = FracParams(alpha, 1.0)
    t = 1e-6
    w = omega_branch_cut(p, 1.0, t)
    lead = t ** (1 - alpha) / math.gamma(2 - alpha)
    assert 1.0 - w == pytest.approx(lead, rel=0.05)
    if alpha < 0.5:
        assert abs(w - 1.0) < 1e-3
    assert omega_branch_cut(p, 1.0, 1e-16) == pytest.approx(1.0, abs=1e-3)


def test_branch_cut_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        omega_branch_cut(P, 1.0, 0.0)


def test_branch_cut_mu_order():
    assert omega_branch_cut(P, 10.0, 1.0) <= omega_branch_cut(P, 1.0, 1.0)


def test_branch_cut_many_matches_single():
    ts = [0.01, 0.5, 3.0]
    vals, err = omega_branch_cut_many(P, 2.0, ts)
    for t, v in zip(ts, vals):
        assert v == pytest.approx(omega_branch_cut(P, 2.0, t), abs=1e-9)


def test_gamma_zero_is_exponential():
    g = TimeGrid.uniform(2.0, 0.01)
    s = relaxation_samples(FracParams(0.5, 0.0), 3.0, g)
    np.testing.assert_allclose(s.values, np.exp(-3.0 * g.nodes), rtol=0, atol=1e-14)


def test_volterra_gamma_zero_first_order():
    errs = []
    for n in (64, 128, 256):
        g = TimeGrid.uniform(1.0, n=n)
        s = omega_volterra(FracParams(0.5, 0.0), 4.0, g)
        errs.append(np.max(np.abs(s.values - np.exp(-4.0 * g.nodes))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0)


def test_product_integral_exact_for_linear():
    # I^beta of t is t^(1+beta) / Gamma(2+beta)
    g = TimeGrid.graded(2.0, 50, 2.0)
    out = product_integral(g, g.nodes.copy(), 0.4)
    np.testing.assert_allclose(out, g.nodes ** 1.4 / math.gamma(2.4), atol=1e-13)


def test_csv_dump(tmp_path):
    s = branch_cut_samples(P, 1.0, TimeGrid.uniform(1.0, 0.25))
    path = tmp_path / "omega.csv"
    s.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,omega,err"
    assert len(rows) == 6


# ------------------------------------------------------------ scalar problem

def test_scalar_homogeneous():
    g = TimeGrid.uniform(2.0, 0.02)
    s = relaxation_samples(P, 3.0, g)
    v = scalar_inhomogeneous(P, 3.0, 2.5, np.zeros(g.size), g, samples=s)
    np.testing.assert_array_equal(v, 2.5 * s.values)


def test_scalar_constant_forcing_identity():
    # integrating the equation: mu int omega = 1 - omega - gamma mu (g_{1-alpha} * omega),
    # so v -> 1 only like t^(-alpha); check the identity under refinement instead
    mu = 2.0
    gaps = []
    for h in (0.02, 0.01, 0.005):
        g = TimeGrid.uniform(20.0, h)
        s = relaxation_samples(P, mu, g)
        v = scalar_inhomogeneous(P, mu, 0.0, np.full(g.size, mu), g, samples=s)
        ident = 1.0 - s.values - mu * P.gamma * product_integral(g, s.values, P.beta)
        gaps.append(abs(v[-1] - ident[-1]))
    assert gaps[2] < gaps[1] < gaps[0]
    assert np.log2(gaps[1] / gaps[2]) >= 1.0


def test_scalar_constant_forcing_slow_approach():
    mu = 2.0
    g = TimeGrid.uniform(1e3 / mu, 0.05)
    v = scalar_inhomogeneous(P, mu, 0.0, np.full(g.size, mu), g)
    assert 0.98 < v[-1] < 1.0
    assert np.all(np.diff(v) >= -1e-12)


def test_scalar_mu_zero_constant():
    g = TimeGrid.uniform(1.0, 0.1)
    np.testing.assert_array_equal(scalar_inhomogeneous(P, 0.0, 1.0, np.zeros(g.size), g), 1.0)


def test_scalar_grid_mismatch():
    with pytest.raises(GridError):
        scalar_inhomogeneous(P, 1.0, 0.0, np.zeros(5), TimeGrid.uniform(1.0, 0.1))


def test_conv_weights_integrate_constants():
    # with omega = 1 the rule reproduces int_0^t g exactly for linear g
    h = 0.1
    W, E = conv_weights(np.ones((1, 11)), h)
    g = 1.0 + 2.0 * h * np.arange(11)
    s = relaxation_samples(P, 0.0, TimeGrid.uniform(1.0, h))
    t = s.t
    np.testing.assert_allclose(convolve(s, g), t + t ** 2, atol=1e-14)


# ------------------------------------------------------------ property checks

def test_bounds_pass_reference_case():
    g = TimeGrid.graded(10.0, 800, 3.0, include=[0.01, 0.1, 1.0])
    s = omega_volterra(P, 1.0, g, extrapolate=True)
    reps = check_bounds_prop21(s, P)
    assert len(reps) == 3
    assert all(r.passed for r in reps), [r.line() for r in reps]
    at1 = g.index_of(1.0) - 1  # reports skip t = 0
    claimed = np.asarray(reps[1].claimed)
    assert claimed[at1] == pytest.approx(1.0)


def test_bounds_skipped_for_mu_zero():
    s = omega_volterra(P, 0.0, TimeGrid.uniform(1.0, 0.1))
    reps = check_bounds_prop21(s, P)
    assert all(r.skipped and r.passed for r in reps)


def test_bound_margins_converge_under_refinement():
    margins, errs = [], []
    for n in (400, 800):
        g = TimeGrid.graded(10.0, n, 3.0)
        s = omega_volterra(P, 1.0, g, extrapolate=True)
        margins.append(np.array([r.margin for r in check_bounds_prop21(s, P)]))
        errs.append(s.est_error)
    assert np.all(np.abs(margins[0] - margins[1]) <= 5 * errs[0] + 1e-12)


def test_corrected_bound_covers_large_gamma_effect():
    p = FracParams(0.75, 0.5)
    g = TimeGrid.graded(10.0, 800, 3.0)
    s = omega_volterra(p, 25.0, g, extrapolate=True)
    assert all(r.passed for r in check_bounds_corrected(s, p))


def test_complete_monotonicity_reference():
    s = branch_cut_samples(P, 1.0, TimeGrid.uniform(5.0, 0.01))
    assert check_complete_monotonicity(s, 3).passed


def test_complete_monotonicity_exponential_order4():
    s = branch_cut_samples(FracParams(0.5, 0.0), 2.0, TimeGrid.uniform(5.0, 0.01))
    r = check_complete_monotonicity(s, 4)
    assert r.passed
    assert r.margin >= -1e-15


def test_complete_monotonicity_order1_is_invariant():
    s = branch_cut_samples(P, 5.0, TimeGrid.uniform(5.0, 0.01))
    assert check_complete_monotonicity(s, 1).passed == s.invariant_report().passed


def test_complete_monotonicity_needs_uniform_grid():
    s = omega_volterra(P, 1.0, TimeGrid.graded(5.0, 50, 3.0))
    with pytest.raises(GridError):
        check_complete_monotonicity(s, 3)


def test_mu_monotonicity_report():
    g = TimeGrid.uniform(5.0, 0.05)
    r = check_mu_monotonicity([branch_cut_samples(P, m, g) for m in (1.0, 5.0, 25.0)])
    assert r.passed


@given(alphas, gammas, mus)
def test_invariants_hold(alpha, gamma, mu):
    s = branch_cut_samples(FracParams(alpha, gamma), mu, TimeGrid.uniform(4.0, 0.05))
    r = s.invariant_report()
    assert r.passed, r.line()
    assert np.all(s.values > 0)


@given(alphas, gammas, mus, st.floats(1.0, 10.0))
def test_mu_monotone_property(alpha, gamma, mu, k):
    p = FracParams(alpha, gamma)
    g = TimeGrid.uniform(3.0, 0.05)
    lo, hi = branch_cut_samples(p, mu, g), branch_cut_samples(p, mu * k, g)
    assert np.all(lo.values >= hi.values - 10 * max(lo.est_error, hi.est_error))


@given(alphas, gammas, mus)
def test_convolution_bound_property(alpha, gamma, mu):
    p = FracParams(alpha, gamma)
    g = TimeGrid.graded(5.0, 400, 3.0)
    s = omega_volterra(p, mu, g, extrapolate=True)
    r = [x for x in check_bounds_prop21(s, p) if x.name == "int_omega_le_one_minus_omega"][0]
    assert r.passed, r.line()


@given(alphas, st.floats(0.1, 5.0), st.floats(0.1, 3.0))
def test_two_routes_agree(alpha, gamma, t):
    p = FracParams(alpha, gamma)
    g = TimeGrid.graded(t, 300, 3.0)
    vol = omega_volterra(p, 3.0, g, extrapolate=True)
    ref = omega_branch_cut(p, 3.0, t)
    assert abs(vol.values[-1] - ref) <= 1e-5 * ref + 10 * vol.est_error
