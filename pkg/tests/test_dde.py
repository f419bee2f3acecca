import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rslab import dde
from rslab.dde import DelaySpec, History, ProblemSpec, integrate
from rslab.grid import GridError, TimeGrid
from rslab.relaxation import ConvergenceError, FracParams, relaxation_samples, scalar_inhomogeneous
from rslab.spectral import BasisMismatch, Domain, build_basis

P = FracParams(0.5, 1.0)
BASIS = build_basis(Domain.interval(), 4)


def problem(nonlin, T=4.0, h=0.05, delay=None, xi=None, basis=BASIS, **kw):
    delay = delay or DelaySpec.constant(1.0)
    xi = np.array([0.3, -0.2, 0.1, 0.05])[:basis.N] if xi is None else np.asarray(xi, float)
    return ProblemSpec(P, basis, delay, History.constant(xi, delay.tau), nonlin,
                       TimeGrid.uniform(T, h), **kw)


# ------------------------------------------------------------ delays and history

def test_delay_args():
    assert DelaySpec.constant(1.0).arg(3.0) == 2.0
    assert DelaySpec.proportional(0.5, 1.0).arg(4.0) == 1.0
    d = DelaySpec.custom([0.5, 0.5], 1.0, times=[0.0, 10.0])
    assert d.arg(2.0) == 1.5


def test_delay_validation():
    with pytest.raises(ValueError):
        DelaySpec.proportional(1.5)
    with pytest.raises(ValueError):
        DelaySpec.constant(-1.0)


def test_delay_out_of_range_rejected():
    bad = DelaySpec.custom(lambda t: -0.1 * np.ones_like(t), 1.0)
    with pytest.raises(ValueError, match="outside"):
        integrate(problem(dde.zero(), delay=bad))


def test_custom_delay_trend_reported():
    d = DelaySpec.custom(lambda t: 1.0 + 0.5 * np.sin(t), 1.5)
    info = d.trend_report(50.0)
    assert info["growing"]


def test_history_interpolation():
    h = History(np.array([-1.0, 0.0]), np.array([[0.0, 2.0], [1.0, 0.0]]))
    np.testing.assert_allclose(h.value(-0.5), [0.5, 1.0])
    assert h.tau == 1.0
    with pytest.raises(ValueError):
        h.value(-2.0)
    with pytest.raises(GridError):
        History(np.array([-1.0, 0.5]), np.zeros((2, 2)))


def test_problem_rejects_basis_mismatch():
    with pytest.raises(BasisMismatch):
        problem(dde.zero(), xi=[1.0, 2.0])


def test_history_must_cover_delay():
    with pytest.raises(GridError):
        ProblemSpec(P, BASIS, DelaySpec.constant(2.0), History.constant(np.zeros(4), 1.0), dde.zero(),
                    TimeGrid.uniform(1.0, 0.1))


# ------------------------------------------------------------ integrator

def test_zero_forcing_is_resolvent_exactly():
    prob = problem(dde.zero())
    traj = integrate(prob)
    np.testing.assert_array_equal(traj.coeffs, prob.resolvent().table.T * prob.history.at_zero)


def test_history_splice_is_bitwise():
    xi_t = np.array([-1.0, -0.5, 0.0])
    xi_c = np.array([[0.1, 0.0, 0.0, 0.2], [0.3, 0.1, 0.0, 0.0], [0.2, 0.2, 0.1, 0.0]])
    prob = ProblemSpec(P, BASIS, DelaySpec.constant(1.0), History(xi_t, xi_c), dde.sine(0.3),
                       TimeGrid.uniform(2.0, 0.1))
    traj = integrate(prob)
    np.testing.assert_array_equal(traj.full_coeffs[:2], xi_c[:2])
    np.testing.assert_array_equal(traj.coeffs[0], xi_c[-1])
    np.testing.assert_array_equal(traj.full_times[:3], [-1.0, -0.5, 0.0])


def test_state_free_single_mode_matches_scalar():
    grid = TimeGrid.uniform(3.0, 0.05)
    g = np.cos(2 * grid.nodes)
    n = 3

    def F(t):
        e = np.zeros(4)
        e[n - 1] = np.interp(t, grid.nodes, g)
        return e

    xi = np.zeros(4)
    xi[n - 1] = 0.4
    traj = integrate(problem(dde.manufactured(F), T=3.0, xi=xi))
    ref = scalar_inhomogeneous(P, 9.0, 0.4, g, grid)
    np.testing.assert_allclose(traj.coeffs[:, n - 1], ref, rtol=0, atol=1e-10)
    assert np.all(traj.coeffs[:, [0, 1, 3]] == 0)


def _manufactured_run(h, T=2.0):
    a = P.alpha
    lam = 1.0

    def F(t):
        val = 2 * t + lam * t ** 2 + lam * P.gamma * math.gamma(3) / math.gamma(3 - a) * t ** (2 - a)
        return np.array([val, 0.0])

    basis = build_basis(Domain.interval(), 2)
    prob = ProblemSpec(P, basis, DelaySpec.constant(0.5), History.constant(np.zeros(2), 0.5),
                       dde.manufactured(F), TimeGrid.uniform(T, h))
    traj = integrate(prob)
    err = np.max(np.abs(traj.coeffs[:, 0] - prob.grid.nodes ** 2))
    return err, dde.residual_check(traj, prob).info["max"]


def test_manufactured_solution_converges():
    runs = [_manufactured_run(h) for h in (0.1, 0.05, 0.025)]
    errs = np.array([r[0] for r in runs])
    res = np.array([r[1] for r in runs])
    assert np.all(np.log2(errs[:-1] / errs[1:]) >= 1.0)
    assert np.all(res[:-1] / res[1:] >= 1.8)


def test_residual_zero_forcing_small():
    prob = problem(dde.zero())
    traj = integrate(prob)
    r = dde.residual_check(traj, prob)
    assert r.passed
    assert r.info["max"] < 10 * float(prob.resolvent().est_error.max()) + 1e-12


def test_residual_detects_corruption():
    prob = problem(dde.sine(0.4))
    traj = integrate(prob)
    traj.coeffs[30, 1] += 1e-2
    assert dde.residual_check(traj, prob).info["max"] >= 1e-3


def test_march_and_global_agree_with_short_delay():
    prob = problem(dde.sine(0.5), delay=DelaySpec.proportional(0.5, 0.0), T=3.0)
    a = integrate(prob)
    b = integrate(prob, mode="global")
    np.testing.assert_allclose(a.coeffs, b.coeffs, atol=1e-9)
    assert np.any(a.iterations > 0)


def test_picard_divergence_reported():
    prob = problem(dde.linear(1e3), delay=DelaySpec.proportional(1.0, 0.0), T=1.0, h=0.1)
    with pytest.raises(ConvergenceError, match="node 1"):
        integrate(prob)


def test_uniqueness_probe_linear():
    r = dde.uniqueness_probe(problem(dde.linear(0.5)))
    assert r.passed


def test_uniqueness_probe_zero_forcing_exact():
    r = dde.uniqueness_probe(problem(dde.zero()))
    assert r.measured == 0.0


def test_uniqueness_zero_data_stays_zero():
    prob = problem(dde.sine(0.5), xi=np.zeros(4))
    traj = integrate(prob)
    assert np.all(traj.coeffs == 0)
    assert dde.uniqueness_probe(prob, seed=3).passed


def test_uniqueness_needs_lipschitz_metadata():
    with pytest.raises(ValueError, match="F3"):
        dde.uniqueness_probe(problem(dde.quadratic()))


def test_reports_on_forced_run():
    w = np.zeros(4)
    w[0] = 1.0
    prob = problem(dde.forcing(0.5, w), T=10.0, h=0.05)
    traj = integrate(prob)
    for r in (dde.norm_chain_report(traj, prob), dde.apriori_report(traj, prob), dde.delay_report(traj)):
        assert r.passed, r.line()
    assert dde.apriori_report(integrate(problem(dde.zero())), problem(dde.zero())).skipped


@given(st.floats(0.05, 0.9), st.sampled_from(["constant", "proportional"]))
def test_norm_chain_property(c, kind):
    delay = DelaySpec.constant(1.0) if kind == "constant" else DelaySpec.proportional(0.5, 1.0)
    prob = problem(dde.sine(c), delay=delay, T=3.0, h=0.1)
    traj = integrate(prob)
    assert dde.norm_chain_report(traj, prob).passed
    assert dde.delay_report(traj).passed


def test_refinement_order_lipschitz():
    sols = []
    for h in (0.1, 0.05, 0.025, 0.0125):
        traj = integrate(problem(dde.sine(0.5), T=2.0, h=h))
        sols.append(traj.coeffs[:: int(round(0.1 / h))])
    diffs = [np.max(np.abs(sols[k] - sols[k + 1])) for k in range(3)]
    orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
    assert np.all(orders >= 1.0)


def test_envelopes(rng):
    w = np.zeros(4)
    w[2] = 1.0
    for f in (dde.forcing(0.5, w), dde.affine(0.3, w), dde.linear(0.5), dde.sine(-0.7),
              dde.quadratic(1.0, 1.0), dde.zero()):
        assert f.check_envelope(BASIS, rng).passed, f.name


def test_forcing_needs_unit_direction():
    with pytest.raises(ValueError):
        dde.forcing(0.5, np.ones(4))


def test_trajectory_csv(tmp_path):
    traj = integrate(problem(dde.zero(), T=1.0, h=0.25))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "t,norm,c_1,c_2,c_3,c_4"
    assert len(rows) == 1 + 1 + 5  # history point at -tau plus grid


# ------------------------------------------------------------ smallness radius

def test_smallness_zero_p():
    sr = dde.smallness_radius(dde.quadratic(0.0), BASIS, P, 10.0)
    assert sr.M == 0.0
    assert sr.delta0 == pytest.approx(sr.eta)


def test_smallness_quadratic_constant_p():
    sr = dde.smallness_radius(dde.quadratic(0.5), BASIS, P, 20.0)
    assert sr.ell == 0.0
    assert sr.M <= 0.5 / BASIS.lambda1 + 1e-9
    assert sr.delta0 > 0
    assert sr.delta0 >= sr.lower_bound * (1 - 1e-12)


def test_smallness_hypothesis_failure():
    with pytest.raises(ValueError, match="hypothesis"):
        dde.smallness_radius(dde.linear(2.0), BASIS, P, 20.0)


def test_invariance_run_stays_in_ball(rng):
    nl = dde.quadratic(1.0, 1.0)
    sr = dde.smallness_radius(nl, BASIS, P, 20.0)
    xi = rng.standard_normal(4)
    xi *= 0.5 * sr.delta / np.linalg.norm(xi)
    traj = integrate(problem(nl, T=20.0, h=0.05, xi=xi))
    assert traj.norms.max() <= sr.eta


# ------------------------------------------------------------ absorbing radius

def test_affine_forcing_exceeds_absorbing_radius():
    # f = p0 (w + v) satisfies ||f|| <= p0 (1 + ||v||) with p0 < lambda_1, yet the
    # steady state p0 / (lambda_1 - p0) = 9 lies far outside p0 / lambda_1 + 1 = 1.9
    basis = build_basis(Domain.interval(), 2)
    w = np.array([1.0, 0.0])
    p0 = 0.9
    prob = ProblemSpec(P, basis, DelaySpec.constant(1.0), History.constant(np.zeros(2), 1.0),
                       dde.affine(p0, w), TimeGrid.uniform(200.0, 0.1))
    norms = integrate(prob).norms
    R = p0 / basis.lambda1 + 1.0
    steady = p0 / (basis.lambda1 - p0)
    assert norms[-1] > 2 * R
    assert norms.max() <= steady
