"""Mild solutions of the delayed problem in coefficient space.

A mild solution satisfies

    u(t) = S(t) xi(0) + int_0^t S(t - s) f(s, u(s - rho(s))) ds,   t in [0, T]
    u(s) = xi(s),                                                s in [-tau, 0]

with ``S`` the resolvent of :mod:`rslab.spectral`.  The integral is
discretized with the same piecewise-linear product rule as
:func:`rslab.spectral.cauchy_convolution`, so with ``f == 0`` the computed
coefficients are exactly the resolvent table times ``xi(0)``.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import GridError, TimeGrid
from .relaxation import ConvergenceError, convolve, relaxation_samples
from .reports import BoundReport
from .spectral import BasisMismatch, build_resolvent, series_norms

_EPS = 1e-12


# ---------------------------------------------------------------- delay

@dataclass(frozen=True, eq=False)
class DelaySpec:
    """Delay map through the delayed read time ``t - rho(t)``.

    ``constant``: ``t - tau``; ``proportional``: ``q t - tau`` with
    ``q in (0, 1]``; ``custom``: ``t - rho(t)`` with ``rho`` sampled at
    ``times`` (linear in between, constant beyond the last sample) or given
    as a callable.
    """

    kind: str
    tau: float = 0.0
    q: float = 1.0
    times: np.ndarray = None
    rho: object = None

    def __post_init__(self):
        if self.kind not in ("constant", "proportional", "custom"):
            raise ValueError(f"unknown delay kind {self.kind!r}")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.kind == "proportional" and not 0.0 < self.q <= 1.0:
            raise ValueError("proportional delay needs q in (0, 1]")
        if self.kind == "custom" and self.rho is None:
            raise ValueError("custom delay needs rho")

    @classmethod
    def constant(cls, tau):
        return cls("constant", float(tau))

    @classmethod
    def proportional(cls, q, tau=0.0):
        return cls("proportional", float(tau), float(q))

    @classmethod
    def custom(cls, rho, tau, times=None):
        if times is not None:
            times = np.asarray(times, dtype=float)
            rho = np.asarray(rho, dtype=float)
            if times.shape != rho.shape:
                raise ValueError("times and rho differ in length")
        return cls("custom", float(tau), 1.0, times, rho)

    def arg(self, t):
        """Delayed read time ``t - rho(t)``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = t - self.tau
        elif self.kind == "proportional":
            out = self.q * t - self.tau
        elif self.times is not None:
            out = t - np.interp(t, self.times, self.rho)
        else:
            out = t - np.asarray(self.rho(t), dtype=float)
        return out if out.ndim else float(out)

    def check(self, t):
        """Raise unless ``-tau <= t - rho(t) <= t`` on the given times."""
        t = np.asarray(t, dtype=float)
        a = np.asarray(self.arg(t))
        bad = np.flatnonzero((a < -self.tau - _EPS) | (a > t + _EPS * np.maximum(1.0, t)))
        if bad.size:
            k = bad[0]
            raise ValueError(f"delayed read time {a.flat[k]!r} at t={t.flat[k]!r} outside [-tau, t]")

    def trend_report(self, T, n=512):
        """Custom delays only need ``t - rho(t) -> oo``; on a horizon we can
        only report whether the read time grows.  Not asserted."""
        t = np.linspace(0.0, T, n)
        a = np.asarray(self.arg(t))
        half = a[n // 2:]
        return {"arg_at_T": float(a[-1]), "min_second_half": float(half.min()),
                "monotone": bool(np.all(np.diff(a) >= -_EPS)),
                "growing": bool(a[-1] > a[n // 2])}

    def to_dict(self):
        d = {"kind": self.kind, "tau": self.tau}
        if self.kind == "proportional":
            d["q"] = self.q
        return d


# ---------------------------------------------------------------- history

@dataclass(eq=False)
class History:
    """Initial datum ``xi`` on ``[-tau, 0]``: coefficients ``(S, N)`` at ``times``."""

    times: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if self.times.ndim != 1 or self.times[-1] != 0.0:
            raise GridError("history times must end at 0")
        if np.any(np.diff(self.times) <= 0):
            raise GridError("history times must be increasing")
        if self.coeffs.shape[0] != self.times.size:
            raise GridError("history coeffs do not match its times")

    @classmethod
    def constant(cls, coeffs, tau=0.0):
        c = np.asarray(coeffs, dtype=float)
        if tau == 0:
            return cls(np.array([0.0]), c[None, :])
        return cls(np.array([-float(tau), 0.0]), np.stack([c, c]))

    @property
    def N(self):
        return self.coeffs.shape[1]

    @property
    def tau(self):
        return -float(self.times[0])

    @property
    def at_zero(self):
        return self.coeffs[-1]

    def sup_norm(self):
        """``||xi||_oo`` over the samples (exact for linear interpolation)."""
        return float(series_norms(self.coeffs).max())

    def value(self, s):
        if s < self.times[0] - _EPS or s > _EPS:
            raise ValueError(f"history read at {s} outside [{self.times[0]}, 0]")
        if self.times.size == 1:
            return self.coeffs[0]
        k = int(np.searchsorted(self.times, s, side="right")) - 1
        k = min(max(k, 0), self.times.size - 2)
        th = (s - self.times[k]) / (self.times[k + 1] - self.times[k])
        th = min(max(th, 0.0), 1.0)
        return (1.0 - th) * self.coeffs[k] + th * self.coeffs[k + 1]


# ---------------------------------------------------------------- nonlinearity

def _const(c):
    return lambda t: np.full(np.shape(t), float(c)) if np.ndim(t) else float(c)


@dataclass(eq=False)
class NonlinearitySpec:
    """``f(t, v)`` on coefficient vectors plus its growth certificate.

    ``envelope`` is one of ``F1`` (``||f|| <= p G(||v||)``), ``F2``
    (``||f|| <= p (1 + ||v||)``), ``F3``/``F4`` (``||f(v1) - f(v2)|| <=
    p kappa(r) ||v1 - v2||`` on the ball of radius ``r``, ``f(t, 0) = 0``)
    or ``F5`` (``F1`` plus a decaying ``p``).  ``G`` is also set for the
    Lipschitz kinds (``G(r) = r kappa(r)``), which is what the smallness
    radius uses; ``ell`` is ``limsup_{r->0} G(r)/r``.
    """

    name: str
    evaluator: object
    envelope: str
    p: object
    G: object = None
    kappa: object = None
    ell: float = 0.0
    state_free: bool = False
    params: dict = field(default_factory=dict)

    def __call__(self, t, v):
        return self.evaluator(t, v)

    def p_sup(self, t):
        return float(np.max(self.p(np.asarray(t, dtype=float))))

    def to_dict(self):
        return {"name": self.name, "envelope": self.envelope, "ell": self.ell,
                "params": dict(self.params)}

    def check_envelope(self, basis, rng, T=1.0, probes=64):
        """Sample the declared inequality on random ``(t, v)`` probes."""
        N = basis.N
        ts = rng.uniform(0.0, T, probes)
        radii = 10.0 ** rng.uniform(-3, 2, probes)
        claimed, measured = [], []
        for t, r in zip(ts, radii):
            v = rng.standard_normal(N)
            v *= r / np.linalg.norm(v)
            pt = float(self.p(t))
            if self.envelope == "F2":
                claimed.append(pt * (1.0 + r))
                measured.append(np.linalg.norm(self(t, v)))
            elif self.envelope in ("F1", "F5"):
                claimed.append(pt * self.G(r))
                measured.append(np.linalg.norm(self(t, v)))
            else:
                w = rng.standard_normal(N)
                w *= r * rng.uniform() / np.linalg.norm(w)
                claimed.append(pt * self.kappa(r) * np.linalg.norm(v - w))
                measured.append(np.linalg.norm(self(t, v) - self(t, w)))
        claimed = np.array(claimed)
        return BoundReport(f"envelope_{self.envelope}_{self.name}", claimed, np.array(measured),
                           tolerance=1e-12 * (1.0 + float(np.max(claimed))))


def zero():
    return NonlinearitySpec("zero", lambda t, v: np.zeros_like(v), "F3", _const(0.0),
                            G=lambda r: 0.0 * r, kappa=lambda r: 0.0, ell=0.0, state_free=True)


def forcing(p0, w):
    """State-independent ``f(t, v) = p0 w`` with ``||w|| = 1``."""
    w = np.asarray(w, dtype=float)
    if not math.isclose(np.linalg.norm(w), 1.0, rel_tol=1e-12):
        raise ValueError("w must have unit norm")
    fw = p0 * w
    return NonlinearitySpec("forcing", lambda t, v: fw.copy(), "F2", _const(p0),
                            state_free=True, params={"p0": p0})


def affine(p0, w):
    """``f(t, v) = p0 (w + v)``; satisfies F2 with ``p = p0``."""
    w = np.asarray(w, dtype=float)
    return NonlinearitySpec("affine", lambda t, v: p0 * (w + v), "F2", _const(p0),
                            params={"p0": p0})


def linear(c):
    """``f(t, v) = c v``: Lipschitz with ``p = c``, ``kappa = 1``."""
    return NonlinearitySpec("linear", lambda t, v: c * v, "F4", _const(abs(c)),
                            G=lambda r: r, kappa=lambda r: 1.0, ell=1.0, params={"c": c})


def sine(c):
    """Coefficient-wise ``c sin(v)``: Lipschitz with ``p = c``, ``kappa = 1``."""
    return NonlinearitySpec("sine", lambda t, v: c * np.sin(v), "F4", _const(abs(c)),
                            G=lambda r: r, kappa=lambda r: 1.0, ell=1.0, params={"c": c})


def quadratic(p0=1.0, rate=0.0):
    """``f(t, v) = p(t) ||v|| v`` with ``p(t) = p0 exp(-rate t)``; ``G(r) = r**2``."""
    def p(t):
        return p0 * np.exp(-rate * np.asarray(t, dtype=float))

    def f(t, v):
        return p(t) * np.linalg.norm(v) * v

    return NonlinearitySpec("quadratic", f, "F5", p, G=lambda r: r * r,
                            kappa=lambda r: 2.0 * r, ell=0.0, params={"p0": p0, "rate": rate})


def manufactured(F):
    """State-free forcing ``f(t, v) = F(t)`` (coefficient vector)."""
    return NonlinearitySpec("manufactured", lambda t, v: np.asarray(F(t), dtype=float), "F2",
                            lambda t: np.linalg.norm(np.atleast_2d(F(t)), axis=-1)
                            if np.ndim(t) else float(np.linalg.norm(F(t))),
                            state_free=True)


# ---------------------------------------------------------------- problem

@dataclass(eq=False)
class ProblemSpec:
    params: object
    basis: object
    delay: DelaySpec
    history: History
    nonlin: NonlinearitySpec
    grid: TimeGrid
    tol: float = 1e-10
    max_picard: int = 50
    table: object = field(default=None, repr=False)

    def __post_init__(self):
        if not self.grid.is_uniform:
            raise GridError("the integrator needs a uniform grid")
        if self.history.N != self.basis.N:
            raise BasisMismatch(f"history has {self.history.N} modes, basis has {self.basis.N}")
        if self.history.times.size > 1 and self.history.tau + _EPS < self.delay.tau:
            raise GridError("history does not cover [-tau, 0]")
        if self.table is not None and not self.table.grid.same_as(self.grid):
            raise GridError("resolvent table lives on another grid")

    @property
    def T(self):
        return self.grid.T

    def resolvent(self):
        if self.table is None:
            self.table = build_resolvent(self.params, self.basis, self.grid)
        return self.table

    def with_grid(self, grid, **kw):
        return ProblemSpec(self.params, self.basis, self.delay, self.history, self.nonlin,
                           grid, kw.get("tol", self.tol), kw.get("max_picard", self.max_picard))

    def with_history(self, history):
        return ProblemSpec(self.params, self.basis, self.delay, history, self.nonlin,
                           self.grid, self.tol, self.max_picard, self.table)


@dataclass(eq=False)
class MildTrajectory:
    """Coefficients ``(K+1, N)`` on the grid plus the history they continue.

    ``residuals`` holds the last Picard change at implicit nodes (0
    elsewhere); ``forcing`` the values ``f(t_i, u(t_i - rho(t_i)))``;
    ``args`` the delayed read times.
    """

    grid: TimeGrid
    history: History
    coeffs: np.ndarray
    forcing: np.ndarray
    args: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray
    mode: str = "march"

    @property
    def norms(self):
        return series_norms(self.coeffs)

    @property
    def full_times(self):
        return np.concatenate([self.history.times[:-1], self.grid.nodes])

    @property
    def full_coeffs(self):
        return np.concatenate([self.history.coeffs[:-1], self.coeffs])

    def to_csv(self, path):
        """``t, ||u||, c_1..c_N`` for every node on ``[-tau, T]``."""
        N = self.coeffs.shape[1]
        C = self.full_coeffs
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "norm"] + [f"c_{n}" for n in range(1, N + 1)])
            for t, nrm, row in zip(self.full_times, series_norms(C), C):
                w.writerow([repr(float(t)), repr(float(nrm))] + [repr(float(x)) for x in row])


def _reader(history, U, h):
    """Linear interpolation on the history then on the computed rows of ``U``."""
    def read(a, known):
        if a <= 0.0:
            return history.value(a)
        x = a / h
        j = int(math.floor(x))
        if j >= known:
            return U[known]
        th = x - j
        if th == 0.0:
            return U[j]
        return (1.0 - th) * U[j] + th * U[j + 1]
    return read


def integrate(problem, mode="march", initial=None, max_sweeps=500):
    """Mild solution on ``problem.grid``.

    ``mode="march"`` walks node by node.  The update at ``t_i`` is explicit
    when the delayed read time is at most ``t_{i-1}``; otherwise (vanishing
    or short delay) the node is found by Picard iteration on the last cell.
    ``mode="global"`` iterates the whole discrete solution operator from
    ``initial`` (default: ``xi(0)`` held constant) and is meant for
    verification.
    """
    table = problem.resolvent()
    if not table.basis.same_as(problem.basis):
        raise BasisMismatch("table and problem use different bases")
    grid = problem.grid
    t = grid.nodes
    h = grid.h
    K = grid.size - 1
    N = problem.basis.N
    args = np.asarray(problem.delay.arg(t), dtype=float)
    problem.delay.check(t)
    if args.min() < problem.history.times[0] - _EPS:
        raise ValueError("delayed read reaches before the history")
    xi0 = problem.history.at_zero
    omega = table.table
    W, E, Wrev = table.weights()
    f = problem.nonlin
    if mode == "global":
        return _integrate_global(problem, table, args, initial, max_sweeps)
    if mode != "march":
        raise ValueError(f"unknown mode {mode!r}")

    U = np.zeros((K + 1, N))
    F = np.zeros((N, K + 1))
    res = np.zeros(K + 1)
    its = np.zeros(K + 1, dtype=int)
    U[0] = xi0
    read = _reader(problem.history, U, h)
    F[:, 0] = f(0.0, read(args[0], 0))
    W0 = W[:, 0]
    for i in range(1, K + 1):
        base = omega[:, i] * xi0 + kernels.lagged_sum(Wrev, E, F, i)
        a = args[i]
        if f.state_free or a <= t[i - 1] * (1 + 1e-14):
            Fi = f(t[i], read(a, i - 1))
            U[i] = base + W0 * Fi
        else:
            th = min(1.0, (a - t[i - 1]) / h)
            prev = U[i - 1]
            ui = prev
            d_old = None
            for k in range(1, problem.max_picard + 1):
                Fi = f(t[i], (1.0 - th) * prev + th * ui)
                new = base + W0 * Fi
                d = float(np.max(np.abs(new - ui)))
                ui = new
                if d < problem.tol:
                    break
                if d_old is not None and d_old > 0:
                    rate = d / d_old
                d_old = d
            else:
                rate = d / d_old if d_old else float("nan")
                raise ConvergenceError(
                    f"Picard iteration did not converge at node {i} (t={t[i]:.6g}): "
                    f"last change {d:.3e}, contraction estimate {rate:.3g}")
            Fi = f(t[i], (1.0 - th) * prev + th * ui)
            U[i] = ui
            res[i] = d
            its[i] = k
        F[:, i] = Fi
    return MildTrajectory(grid, problem.history, U, F.T.copy(), args, res, its, "march")


def _forcing_series(problem, U, args):
    h = problem.grid.h
    K = U.shape[0] - 1
    read = _reader(problem.history, U, h)
    t = problem.grid.nodes
    return np.stack([problem.nonlin(t[i], read(args[i], K)) for i in range(K + 1)])


def _integrate_global(problem, table, args, initial, max_sweeps):
    K = problem.grid.size - 1
    xi0 = problem.history.at_zero
    W, E, _ = table.weights()
    free = table.table.T * xi0
    U = np.tile(xi0, (K + 1, 1)) if initial is None else np.array(initial, dtype=float)
    if U.shape != free.shape:
        raise GridError("initial guess has the wrong shape")
    U[0] = xi0
    d_old = None
    for sweep in range(1, max_sweeps + 1):
        F = _forcing_series(problem, U, args)
        new = free + kernels.causal_conv(W, E, np.ascontiguousarray(F.T)).T
        d = float(np.max(np.abs(new - U)))
        U = new
        if d < problem.tol:
            break
        d_old = d
    else:
        raise ConvergenceError(f"global Picard did not converge in {max_sweeps} sweeps "
                               f"(last change {d:.3e}, previous {d_old:.3e})")
    F = _forcing_series(problem, U, args)
    res = np.full(K + 1, d)
    res[0] = 0.0
    return MildTrajectory(problem.grid, problem.history, U, F, args, res,
                          np.full(K + 1, sweep), "global")


# ---------------------------------------------------------------- checks

def _interp_series(t_old, U, t_new):
    return np.stack([np.interp(t_new, t_old, U[:, n]) for n in range(U.shape[1])], axis=1)


def residual_check(traj, problem, threshold=None):
    """Re-evaluate the mild-solution right-hand side on the grid refined 2x.

    The stored trajectory is interpolated linearly onto the refined grid,
    the forcing is recomputed there, and ``S(t) xi(0) + Q(f)`` is compared
    with the stored values at the original nodes.
    """
    fine = problem.grid.refine()
    table = build_resolvent(problem.params, problem.basis, fine)
    Uf = _interp_series(problem.grid.nodes, traj.coeffs, fine.nodes)
    sub = problem.with_grid(fine)
    args = np.asarray(problem.delay.arg(fine.nodes), dtype=float)
    F = _forcing_series(sub, Uf, args)
    W, E, _ = table.weights()
    rhs = table.table.T * problem.history.at_zero \
        + kernels.causal_conv(W, E, np.ascontiguousarray(F.T)).T
    disc = np.max(np.abs(rhs[::2] - traj.coeffs), axis=1)
    if threshold is None:
        threshold = max(10.0 * float(table.est_error.max()), problem.tol)
    return BoundReport("mild_residual", threshold, disc,
                       info={"max": float(disc.max()), "argmax": int(np.argmax(disc))})


def uniqueness_probe(problem, perturbation=1e-3, seed=0):
    """March solution versus global Picard started from a perturbed guess."""
    if problem.nonlin.envelope not in ("F3", "F4"):
        raise ValueError("uniqueness probe needs Lipschitz (F3) metadata")
    a = integrate(problem, "march")
    rng = np.random.default_rng(seed)
    guess = a.coeffs + perturbation * rng.standard_normal(a.coeffs.shape)
    b = integrate(problem, "global", initial=guess)
    dist = float(np.max(np.abs(a.coeffs - b.coeffs)))
    return BoundReport("uniqueness_probe", 10.0 * problem.tol, dist,
                       info={"sweeps": int(b.iterations[0]), "perturbation": perturbation})


def norm_chain_report(traj, problem, rtol=1e-12):
    """``||u(t)|| <= omega(t, lambda_1) ||xi(0)|| + (omega(., lambda_1) * ||f||)(t)``."""
    table = problem.resolvent()
    W, E, _ = table.weights()
    fn = series_norms(traj.forcing)
    conv = kernels.causal_conv(W[:1], E[:1], fn[None, :])[0]
    claimed = table.table[0] * np.linalg.norm(problem.history.at_zero) + conv
    tol = rtol * (1.0 + float(claimed.max())) + 10.0 * float(table.est_error.max()) \
        * (np.linalg.norm(problem.history.at_zero) + problem.T * float(fn.max()))
    return BoundReport("norm_chain", claimed, traj.norms, tolerance=tol)


def apriori_report(traj, problem):
    """Growth bound under F2: ``sup_[0,t] ||u|| <= psi(t)`` with
    ``psi = ||xi|| + int_0^t p (1 + ||xi|| + psi)``, i.e.
    ``psi = (1 + 2||xi||) exp(int_0^t p) - 1 - ||xi||``."""
    if problem.nonlin.envelope != "F2":
        return BoundReport.skip("apriori_psi", "needs F2 metadata")
    t = problem.grid.nodes
    P = np.asarray(problem.nonlin.p(t), dtype=float) * np.ones_like(t)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (P[1:] + P[:-1]) * np.diff(t))])
    x = problem.history.sup_norm()
    psi = (1.0 + 2.0 * x) * np.exp(cum) - 1.0 - x
    run = np.maximum.accumulate(traj.norms)
    return BoundReport("apriori_psi", psi, run, tolerance=1e-12 * (1.0 + float(run.max())))


def delay_report(traj):
    """Every delayed read lies in ``[-tau, t]``."""
    t = traj.grid.nodes
    a = traj.args
    tau = traj.history.tau
    measured = np.maximum(-tau - a, a - t)
    return BoundReport("delay_in_range", 0.0, measured, tolerance=_EPS)


# ---------------------------------------------------------------- smallness

@dataclass
class SmallnessRadius:
    delta: float
    eta: float
    delta0: float
    zeta: float
    ell: float
    M: float
    lower_bound: float
    grid: TimeGrid = field(repr=False, default=None)
    conv: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        return {k: float(getattr(self, k)) for k in
                ("delta", "eta", "delta0", "zeta", "ell", "M", "lower_bound")}


def smallness_radius(nonlin, basis, params, horizon, h=0.05, zeta=None, r_max=1.0, n_scan=2000):
    """Invariant-ball radius ``eta`` and initial-data threshold ``delta``.

    ``M = sup_t (omega(., lambda_1) * p)(t)`` on the horizon.  ``zeta``
    defaults to ``0.05 (1 - ell M) / M``.  ``eta`` is the largest scan point
    below which ``G(r)/r <= ell + zeta`` holds on the whole geometric scan
    of ``[1e-6, r_max]``; then

        delta0 = eta inf_t (1 - c(t) (ell+zeta)) / (omega(t) + c(t) (ell+zeta))

    with ``c = omega * p`` and ``delta = min(eta, delta0)``.
    """
    if nonlin.G is None:
        raise ValueError("smallness radius needs a G envelope (F1/F5 or Lipschitz)")
    grid = TimeGrid.uniform(horizon, h)
    lam1 = basis.lambda1
    s = relaxation_samples(params, lam1, grid)
    P = np.asarray(nonlin.p(grid.nodes), dtype=float) * np.ones(grid.size)
    c = convolve(s, P)
    M = float(c.max())
    ell = float(nonlin.ell)
    if ell * M >= 1.0:
        raise ValueError(f"hypothesis fails: ell*M = {ell * M:.4g} >= 1, no radius under this certificate")
    if zeta is None:
        zeta = 0.05 * (1.0 - ell * M) / M if M > 0 else 0.05
    k = ell + zeta
    if k * M >= 1.0:
        raise ValueError(f"(ell + zeta) M = {k * M:.4g} >= 1")
    r = np.geomspace(1e-6, r_max, n_scan)
    ratio = np.array([nonlin.G(x) for x in r]) / r
    ok = ratio <= k * (1 + 1e-12)
    if not ok[0]:
        raise ValueError("G(r)/r exceeds ell + zeta already at r = 1e-6")
    bad = np.flatnonzero(~ok)
    eta = float(r_max) if bad.size == 0 else float(r[max(bad[0] - 1, 0)])
    q = (1.0 - k * c) / (s.values + k * c)
    delta0 = eta * float(q.min())
    lower = eta * (1.0 - k * M) / (1.0 + k * M)
    return SmallnessRadius(min(eta, delta0), eta, delta0, float(zeta), ell, M, lower, grid, c)
