"""Config-driven stability experiments and their run records."""
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import dde, halanay
from .config import ExperimentConfig, as_list
from .grid import TimeGrid
from .relaxation import (FracParams, branch_cut_samples, check_bounds_corrected, check_bounds_prop21,
                         check_complete_monotonicity, check_mu_monotonicity,
                         omega_branch_cut_many, omega_volterra)
from .reports import BoundReport, summary, write_csv
from .spectral import Domain, build_basis, build_resolvent


class HypothesisError(ValueError):
    """A theorem's hypothesis fails for the configured problem; the run is refused."""


@dataclass
class RunRecord:
    config: dict
    reports: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    trajectories: dict = field(default_factory=dict)
    instances: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return all(r.passed for r in self.reports)

    def add(self, *reports):
        self.reports.extend(reports)

    def add_series(self, label, t, norms, max_points=1000):
        stride = max(1, (len(t) - 1) // max_points)
        self.series[label] = {"t": [float(x) for x in t[::stride]],
                              "norm": [float(x) for x in norms[::stride]],
                              "stride": stride}

    def to_dict(self):
        return {"config": self.config, "verdict": self.verdict,
                "reports": [summary(r) for r in self.reports],
                "series": self.series, "info": _plain(self.info)}

    def write(self, out_dir, csv_stride=1):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "runrecord.json"), "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        write_csv(self.reports, os.path.join(out_dir, "reports.csv"))
        for label, traj in sorted(self.trajectories.items()):
            path = os.path.join(out_dir, f"traj_{label}.csv")
            if csv_stride > 1:
                _strided(traj, csv_stride).to_csv(path)
            else:
                traj.to_csv(path)
        for label, inst in sorted(self.instances.items()):
            inst.to_csv(os.path.join(out_dir, f"halanay_{label}.csv"))
        return out_dir

    def lines(self):
        return [r.line() for r in self.reports]


def _strided(traj, k):
    grid = TimeGrid(traj.grid.nodes[::k], "graded", 1.0)
    return dde.MildTrajectory(grid, traj.history, traj.coeffs[::k], traj.forcing[::k],
                              traj.args[::k], traj.residuals[::k], traj.iterations[::k], traj.mode)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


# ---------------------------------------------------------------- builders

def params_of(cfg):
    return FracParams(float(cfg.get("model", "alpha", 0.5)), float(cfg.get("model", "gamma", 1.0)))


def basis_of(cfg):
    kind = cfg.get("domain", "kind", "interval")
    N = int(cfg.get("domain", "N", 64))
    if kind == "interval":
        dom = Domain.interval(cfg.get("domain", "L", math.pi))
    else:
        dom = Domain.rectangle(cfg.get("domain", "L", math.pi), cfg.get("domain", "Ly", math.pi))
    return build_basis(dom, N)


def grid_of(cfg):
    return TimeGrid.uniform(float(cfg.get("grid", "T")), float(cfg.get("grid", "h")))


def delay_of(cfg, q=None):
    kind = cfg.get("delay", "kind", "constant")
    tau = float(cfg.get("delay", "tau", 0.0))
    if q is not None or kind == "proportional":
        return dde.DelaySpec.proportional(float(q if q is not None else cfg.get("delay", "q", 1.0)), tau)
    if kind == "constant":
        return dde.DelaySpec.constant(tau)
    raise ValueError(f"delay kind {kind!r} cannot be set from a config file")


def nonlin_of(cfg, basis):
    sec = cfg.section("nonlin")
    kind = sec.get("kind", "zero")
    if kind == "zero":
        return dde.zero()
    if kind in ("forcing", "affine"):
        w = np.zeros(basis.N)
        w[int(sec.get("mode", 1)) - 1] = 1.0
        return (dde.forcing if kind == "forcing" else dde.affine)(float(sec["p0"]), w)
    if kind == "linear":
        return dde.linear(float(sec["c"]))
    if kind == "sine":
        return dde.sine(float(sec["c"]))
    if kind == "quadratic":
        return dde.quadratic(float(sec.get("p0", 1.0)), float(sec.get("rate", 0.0)))
    raise ValueError(f"unknown nonlinearity {kind!r}")


def random_xi(basis, rng, target):
    """Coefficients ``U(-1, 1) / n**2`` scaled to norm ``target``."""
    n = np.arange(1, basis.N + 1)
    c = rng.uniform(-1.0, 1.0, basis.N) / n ** 2
    nrm = np.linalg.norm(c)
    return c * (target / nrm) if nrm > 0 else c


def _history(cfg, coeffs):
    return dde.History.constant(coeffs, float(cfg.get("delay", "tau", 0.0)))


def _tail_mask(grid, frac):
    return grid.nodes >= frac * grid.T


def _norm_instance(traj, lam1, a, b, delay, params):
    """Halanay instance fed with the measured norm series."""
    hist = traj.history
    psi = np.sqrt(np.einsum("kn,kn->k", hist.coeffs, hist.coeffs))
    v = traj.norms.copy()
    v[0] = psi[-1]
    return halanay.HalanayInstance(lam1, a, traj.grid, hist.times, psi, b, v, delay, params)


# ---------------------------------------------------------------- experiments

def run_dissipativity(cfg):
    """Absorbing ball of radius ``||p||/lambda1 + 1`` from widely spread initial data."""
    params, basis, grid = params_of(cfg), basis_of(cfg), grid_of(cfg)
    f = nonlin_of(cfg, basis)
    if f.envelope != "F2":
        raise HypothesisError("dissipativity needs F2 metadata")
    delay = delay_of(cfg)
    lam1 = basis.lambda1
    psup = f.p_sup(grid.nodes)
    rec = RunRecord(cfg.echo())
    hyp = BoundReport("hypothesis_p_lt_lambda1", lam1, psup)
    if not psup < lam1:
        raise HypothesisError(f"||p||_oo = {psup} >= lambda1 = {lam1}; no absorbing-set certificate")
    rec.add(hyp)
    R = psup / lam1 + 1.0
    slack = float(cfg.get("halanay", "slack", 0.05))
    frac = float(cfg.get("halanay", "tail_fraction", 0.9))
    rng = np.random.default_rng(cfg.seed)
    table = build_resolvent(params, basis, grid)
    tail = _tail_mask(grid, frac)
    entries = {}
    agree = []
    for scale in as_list(cfg.get("sweep", "scales", [0.1, 1, 10, 100])):
        label = f"scale_{scale:g}"
        xi = random_xi(basis, rng, scale * R)
        prob = dde.ProblemSpec(params, basis, delay, _history(cfg, xi), f, grid, table=table)
        traj = dde.integrate(prob)
        norms = traj.norms
        outside = np.flatnonzero(norms > R)
        entry = 0.0 if outside.size == 0 else (
            float(grid.nodes[outside[-1] + 1]) if outside[-1] < grid.size - 1 else None)
        entries[label] = entry
        direct = []
        if scale <= 100:
            r = BoundReport(f"absorbed_{label}", R, norms[tail], info={"entry_time": entry, "R": R})
            direct.append(r)
        direct.append(BoundReport(f"tail_{label}", psup / lam1 + slack, float(norms[tail].max()),
                                  info={"claimed_limsup": psup / lam1, "slack": slack}))
        extra = [dde.norm_chain_report(traj, prob), dde.apriori_report(traj, prob)]
        for r in extra:
            r.name = f"{r.name}_{label}"
        rec.add(*direct, *extra)
        # Halanay route: ||f|| <= p (1 + ||u_rho||) gives a = b = ||p||
        inst = _norm_instance(traj, lam1, psup, psup, delay, params)
        prem = halanay.verify_premise(inst)
        route = [prem]
        if prem.passed:
            route.append(halanay.bound_limsup(inst, frac * grid.T, slack=slack, premise=prem))
        for r in route:
            r.name = f"{r.name}_{label}"
        rec.add(*route)
        agree.append(all(r.passed for r in direct) == all(r.passed for r in route))
        rec.trajectories[label] = traj
        rec.add_series(label, grid.nodes, norms)
    rec.add(BoundReport("cross_route_agree", 0.0, 0.0 if all(agree) else 1.0))
    rec.info.update({"R": R, "p_sup": psup, "lambda1": lam1, "entry_times": entries,
                     "corrected_limsup": lam1 / (lam1 - psup) * psup / lam1})
    return rec


def uniform_bound_constant(lam1, psup, ell, theta=None):
    if theta is None:
        theta = 0.05 * (lam1 - ell * psup) / psup if psup > 0 else 0.05
    return lam1 / (lam1 - psup * (ell + theta)) + 1.0, theta


def run_asymptotic_stability(cfg):
    """Uniform bound and tail decay for a Lipschitz nonlinearity, swept over proportional delays."""
    params, basis, grid = params_of(cfg), basis_of(cfg), grid_of(cfg)
    f = nonlin_of(cfg, basis)
    if f.envelope not in ("F3", "F4"):
        raise HypothesisError("asymptotic stability needs Lipschitz (F4) metadata")
    lam1 = basis.lambda1
    psup = f.p_sup(grid.nodes)
    ell = f.ell
    rec = RunRecord(cfg.echo())
    if not psup * ell < lam1:
        raise HypothesisError(f"||p|| ell = {psup * ell} >= lambda1 = {lam1}")
    rec.add(BoundReport("hypothesis_p_ell_lt_lambda1", lam1, psup * ell))
    C, theta = uniform_bound_constant(lam1, psup, ell)
    sr = dde.smallness_radius(f, basis, params, grid.T, h=grid.h,
                              r_max=float(cfg.get("sweep", "r_max", 1.0)))
    scale = float(as_list(cfg.get("sweep", "scales", [0.1]))[0])
    if scale > sr.delta:
        raise HypothesisError(f"||xi|| = {scale} exceeds delta = {sr.delta}")
    decay_tol = float(cfg.get("halanay", "decay_tol", 1e-3))
    rng = np.random.default_rng(cfg.seed)
    xi = random_xi(basis, rng, scale)
    table = build_resolvent(params, basis, grid)
    for q in as_list(cfg.get("sweep", "q", [1.0])):
        label = f"q_{q:g}"
        delay = delay_of(cfg, q)
        prob = dde.ProblemSpec(params, basis, delay, _history(cfg, xi), f, grid, table=table)
        traj = dde.integrate(prob)
        norms = traj.norms
        xs = prob.history.sup_norm()
        ub = BoundReport(f"uniform_bound_{label}", C * xs, norms, tolerance=1e-12,
                         info={"C": C, "theta": theta})
        dec = BoundReport(f"tail_decay_{label}", decay_tol * xs, float(norms[-1]),
                          info={"ratio": float(norms[-1]) / xs, "T": grid.T})
        inst = _norm_instance(traj, lam1, psup * ell, 0.0, delay, params)
        prem = halanay.verify_premise(inst)
        route = [prem] + ([halanay.bound_global(inst, prem)] if prem.passed else [])
        for r in route:
            r.name = f"{r.name}_{label}"
        chain = dde.norm_chain_report(traj, prob)
        chain.name = f"{chain.name}_{label}"
        rec.add(ub, dec, *route, chain)
        rec.trajectories[label] = traj
        rec.add_series(label, grid.nodes, norms)
    rec.info.update({"C": C, "theta": theta, "smallness": sr.to_dict(), "xi_norm": scale})
    return rec


def tail_condition(params, lam1, p, grid):
    """``int_0^{t/2} omega(t - s, lambda1) p(s) ds`` at the even nodes (trapezoid)."""
    om = branch_cut_samples(params, lam1, grid).values
    P = np.asarray(p(grid.nodes), dtype=float) * np.ones(grid.size)
    h = grid.h
    idx = np.arange(0, grid.size, 2)
    out = np.empty(idx.size)
    for k, i in enumerate(idx):
        m = i // 2
        prod = om[i - np.arange(m + 1)] * P[:m + 1]
        out[k] = h * (prod.sum() - 0.5 * (prod[0] + prod[-1])) if m > 0 else 0.0
    return grid.nodes[idx], out


def run_decay_family(cfg):
    """Family of small solutions under a decaying ``p``: invariance, decay and equidecay."""
    params, basis, grid = params_of(cfg), basis_of(cfg), grid_of(cfg)
    f = nonlin_of(cfg, basis)
    if f.envelope not in ("F1", "F5"):
        raise HypothesisError("decay family needs F5 metadata")
    delay = delay_of(cfg)
    lam1 = basis.lambda1
    decay_tol = float(cfg.get("halanay", "decay_tol", 1e-3))
    rec = RunRecord(cfg.echo())
    sr = dde.smallness_radius(f, basis, params, grid.T, h=grid.h,
                              r_max=float(cfg.get("sweep", "r_max", 1.0)))
    rec.add(BoundReport("delta_positive", sr.delta, 0.0), BoundReport("eta_positive", sr.eta, 0.0),
            BoundReport("delta0_lower_bound", sr.delta0, sr.lower_bound, tolerance=1e-12))
    tt, tail = tail_condition(params, lam1, f.p, grid)
    checkpoints = grid.T * np.arange(1, 9) / 8.0
    tail_sup = np.array([tail[tt >= c - 1e-12].max() for c in checkpoints])
    rec.add(BoundReport("tail_condition_monotone", 0.0, np.diff(tail_sup)),
            BoundReport("tail_condition_small", decay_tol, float(tail_sup[-1]),
                        info={"table": tail_sup}))
    rng = np.random.default_rng(cfg.seed)
    n_family = int(cfg.get("sweep", "family", 16))
    target = 0.5 * sr.delta
    table = build_resolvent(params, basis, grid)
    equi = np.zeros(checkpoints.size)
    zero_prob = dde.ProblemSpec(params, basis, delay, _history(cfg, np.zeros(basis.N)), f, grid,
                                table=table)
    z = dde.integrate(zero_prob)
    rec.add(BoundReport("zero_member", 0.0, float(np.abs(z.coeffs).max())))
    for k in range(n_family):
        label = f"member_{k:02d}"
        xi = random_xi(basis, rng, target)
        prob = dde.ProblemSpec(params, basis, delay, _history(cfg, xi), f, grid, table=table)
        traj = dde.integrate(prob)
        norms = traj.norms
        rec.add(BoundReport(f"in_ball_{label}", sr.eta, norms),
                BoundReport(f"decay_{label}", decay_tol * target, float(norms[-1])))
        for j, c in enumerate(checkpoints):
            equi[j] = max(equi[j], norms[grid.nodes >= c - 1e-12].max() / target)
        rec.trajectories[label] = traj
        rec.add_series(label, grid.nodes, norms)
    if n_family:
        rec.add(BoundReport("equidecay_monotone", 0.0, np.diff(equi)),
                BoundReport("equidecay_final", decay_tol, float(equi[-1])))
    rec.info.update({"smallness": sr.to_dict(), "tail_table": {"T": checkpoints, "sup": tail_sup},
                     "equidecay": {"T": checkpoints, "sup_rel": equi}, "xi_norm": target})
    return rec


# ---------------------------------------------------------------- suites

def relaxation_suite(cfg):
    T = float(cfg.get("grid", "T", 10.0))
    h = float(cfg.get("grid", "h", 0.01))
    n_graded = int(cfg.get("grid", "n", 800))
    alphas = as_list(cfg.get("sweep", "alphas", [0.25, 0.5, 0.75]))
    gammas = as_list(cfg.get("sweep", "gammas", [0.5, 1.0, 2.0]))
    mus = as_list(cfg.get("sweep", "mus", [1.0, 5.0, 25.0]))
    checks = [float(t) for t in as_list(cfg.get("sweep", "t_check", [0.01, 0.1, 1.0, 10.0]))]
    ug = TimeGrid.uniform(T, h)
    # Volterra samples on a graded grid carry the bound checks: it resolves
    # the initial layer, which the trapezoid integral in check (iii) needs
    gg = TimeGrid.graded(max([T] + checks), n_graded, 3.0, include=[c for c in checks if c > 0])
    rec = RunRecord(cfg.echo())
    worst = 0.0
    for alpha in alphas:
        for gamma in gammas:
            params = FracParams(float(alpha), float(gamma))
            per_mu = []
            for mu in mus:
                tag = f"a{alpha:g}_g{gamma:g}_m{mu:g}"
                s = branch_cut_samples(params, float(mu), ug)
                vol = omega_volterra(params, float(mu), gg, extrapolate=True)
                per_mu.append(vol)
                reps = [s.invariant_report(), vol.invariant_report(),
                        check_complete_monotonicity(s, 3)] \
                    + check_bounds_prop21(vol, params) + check_bounds_corrected(vol, params)
                if checks:
                    idx = [gg.index_of(t) for t in checks]
                    ref, _ = omega_branch_cut_many(params, float(mu), checks)
                    rel = np.abs(vol.values[idx] - ref) / np.abs(ref)
                    worst = max(worst, float(rel.max()))
                    reps.append(BoundReport("cross_method", 1e-6, rel, info={"t": checks}))
                for r in reps:
                    r.name = f"{r.name}_{tag}"
                rec.add(*reps)
            if len(per_mu) > 1:
                r = check_mu_monotonicity(per_mu)
                r.name = f"{r.name}_a{alpha:g}_g{gamma:g}"
                rec.add(r)
    rec.info["worst_cross_method_rel"] = worst
    return rec


DEFAULT_INSTANCES = [
    # (mu, a, b kind, delay kind, q)
    (2.0, 1.0, "zero", "constant", 1.0),
    (2.0, 1.0, "const", "constant", 1.0),
    (2.0, 1.0, "ramp", "constant", 1.0),
    (1.0, 0.9, "zero", "constant", 1.0),
    (1.0, 0.9, "const", "constant", 1.0),
    (1.0, 0.9, "ramp", "constant", 1.0),
    (5.0, 0.5, "zero", "constant", 1.0),
    (5.0, 0.5, "const", "constant", 1.0),
    (5.0, 0.5, "ramp", "constant", 1.0),
    (2.0, 1.0, "ramp", "proportional", 0.5),
]


def halanay_suite(cfg):
    params = params_of(cfg)
    h = float(cfg.get("grid", "h", 0.05))
    tau = float(cfg.get("delay", "tau", 1.0)) if "delay" in cfg.sections else 1.0
    b0 = float(cfg.get("halanay", "b0", 0.5))
    frac = float(cfg.get("halanay", "tail_fraction", 0.9))
    decay_tol = float(cfg.get("halanay", "decay_tol", 1e-3))
    count = int(cfg.get("sweep", "instances", len(DEFAULT_INSTANCES)))
    horizon = cfg.get("grid", "T")
    rec = RunRecord(cfg.echo())
    for k, (mu, a, bkind, dkind, q) in enumerate(DEFAULT_INSTANCES[:count]):
        T = float(horizon) if horizon is not None else 200.0 / mu
        grid = TimeGrid.uniform(T, h)
        b = {"zero": 0.0, "const": b0, "ramp": halanay.ramp(grid, b0)}[bkind]
        delay = dde.DelaySpec.constant(tau) if dkind == "constant" else dde.DelaySpec.proportional(q, tau)
        inst = halanay.build_extremal(mu, a, b, 1.0, delay, grid, params)
        label = f"{k:02d}_mu{mu:g}_a{a:g}_{bkind}_{dkind}"
        prem = halanay.verify_premise(inst)
        reps = [prem]
        if prem.passed:
            reps += [halanay.bound_global(inst, prem),
                     halanay.bound_limsup(inst, frac * T, decay_tol=decay_tol, premise=prem)]
        reps.append(halanay.contraction_report(inst))
        for r in reps:
            r.name = f"{r.name}_{label}"
        rec.add(*reps)
        rec.instances[label] = inst
        rec.add_series(label, grid.nodes, inst.v)
    return rec


def run_suites(cfg):
    if cfg.kind == "relaxation_suite":
        return relaxation_suite(cfg)
    if cfg.kind == "halanay_suite":
        return halanay_suite(cfg)
    raise ValueError(f"{cfg.kind} is not a suite")


RUNNERS = {
    "dissipativity": run_dissipativity,
    "asymptotic_stability": run_asymptotic_stability,
    "decay_family": run_decay_family,
    "halanay_suite": run_suites,
    "relaxation_suite": run_suites,
}


def run(cfg):
    return RUNNERS[cfg.kind](cfg)


def run_file(path, **overrides):
    cfg = ExperimentConfig.from_file(path).apply_overrides(**overrides)
    return cfg, run(cfg)


def shipped_config(name):
    here = os.path.dirname(__file__)
    path = os.path.join(here, "configs", name if name.endswith(".ini") else name + ".ini")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return path


def shipped_configs():
    d = os.path.join(os.path.dirname(__file__), "configs")
    return sorted(os.path.join(d, n) for n in os.listdir(d) if n.endswith(".ini"))


__all__ = ["RunRecord", "HypothesisError", "run", "run_file", "run_dissipativity",
           "run_asymptotic_stability", "run_decay_family", "run_suites"]
