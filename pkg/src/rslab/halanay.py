"""Delayed Halanay-type integral inequality.

Premise, for ``t`` in ``[0, T]``::

    v(t) <= omega(t, mu) v0 + int_0^t omega(t - s, mu) [a sup_{[s - rho(s), s]} v + b(s)] ds

with ``v = psi`` on ``[-tau, 0]``.  Conclusions checked here, for ``0 < a < mu``:

* global:  ``v(t) <= mu/(mu-a) [v0 + (omega * b)(t)] + sup psi``
* limsup:  ``limsup v <= mu/(mu-a) sup_t (omega * b)(t)``, and ``v -> 0`` when ``b = 0``.

The limsup statement is replaced by a tail-window maximum with an explicit
finite-horizon slack.
"""
import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .dde import DelaySpec
from .grid import TimeGrid
from .relaxation import ConvergenceError, FracParams, convolve, relaxation_samples
from .reports import BoundReport


class HalanayError(ValueError):
    pass


def window_sup(times, values, lo, hi_idx):
    """``max v`` over ``[lo_k, times[hi_idx[k]]]`` for piecewise-linear ``v``.

    Interior nodes are handled by a sparse-table range maximum; the left
    end contributes its interpolated value.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi_idx = np.asarray(hi_idx, dtype=int)
    n = values.size
    table = [values]
    span = 1
    while 2 * span <= n:
        prev = table[-1]
        table.append(np.maximum(prev[:-span], prev[span:]))
        span *= 2
    left = np.interp(lo, times, values)
    first = np.searchsorted(times, lo, side="right")
    out = left.copy()
    has = first <= hi_idx
    a, b = first[has], hi_idx[has]
    length = b - a + 1
    lev = np.floor(np.log2(length)).astype(int)
    best = np.empty(a.size)
    for k in np.unique(lev):
        sel = lev == k
        tk = table[k]
        best[sel] = np.maximum(tk[a[sel]], tk[b[sel] - (1 << k) + 1])
    out[has] = np.maximum(out[has], best)
    return out


@dataclass(eq=False)
class HalanayInstance:
    """Sampled ``v`` on ``[-tau, T]`` with the data of the inequality.

    ``grid`` is a uniform grid on ``[0, T]``; ``v`` and ``b`` live on it.
    ``psi`` lives on ``psi_times`` (increasing, ending at 0).
    """

    mu: float
    a: float
    grid: TimeGrid
    psi_times: np.ndarray
    psi: np.ndarray
    b: np.ndarray
    v: np.ndarray
    delay: DelaySpec
    params: FracParams
    info: dict = field(default_factory=dict)
    _omega: object = field(default=None, repr=False)

    def __post_init__(self):
        self.psi_times = np.asarray(self.psi_times, dtype=float)
        self.psi = np.asarray(self.psi, dtype=float)
        self.b = np.asarray(self.b, dtype=float) * np.ones(self.grid.size)
        self.v = np.asarray(self.v, dtype=float)
        if not self.grid.is_uniform:
            raise HalanayError("instances live on uniform grids")
        if self.mu <= 0 or self.a < 0:
            raise HalanayError("need mu > 0 and a >= 0")
        if self.psi_times[-1] != 0.0 or self.psi.shape != self.psi_times.shape:
            raise HalanayError("psi must be sampled on times ending at 0")
        if self.v.shape != self.grid.nodes.shape:
            raise HalanayError("v does not match the grid")
        if np.any(self.psi < 0) or np.any(self.v < 0) or np.any(self.b < 0):
            raise HalanayError("v, psi and b must be nonnegative")
        if np.any(np.diff(self.b) < -1e-14 * (1.0 + np.abs(self.b[1:]))):
            raise HalanayError("b must be nondecreasing")
        if self.v[0] != self.psi[-1]:
            raise HalanayError("v(0) must equal psi(0)")
        tau = self.delay.tau
        if self.psi_times.size > 1 and -self.psi_times[0] + 1e-12 < tau:
            raise HalanayError("psi does not cover [-tau, 0]")
        self.delay.check(self.grid.nodes)

    @property
    def v0(self):
        return float(self.psi[-1])

    @property
    def T(self):
        return self.grid.T

    @property
    def tau(self):
        return self.delay.tau

    def omega(self):
        if self._omega is None:
            self._omega = relaxation_samples(self.params, self.mu, self.grid)
        return self._omega

    def full(self):
        return (np.concatenate([self.psi_times[:-1], self.grid.nodes]),
                np.concatenate([self.psi[:-1], self.v]))

    def premise_rhs(self, v=None):
        """Right side of the premise for the path ``v`` (default: own ``v``)."""
        v = self.v if v is None else v
        ft = np.concatenate([self.psi_times[:-1], self.grid.nodes])
        fv = np.concatenate([self.psi[:-1], v])
        off = self.psi_times.size - 1
        lo = np.asarray(self.delay.arg(self.grid.nodes), dtype=float)
        S = window_sup(ft, fv, lo, off + np.arange(self.grid.size))
        om = self.omega()
        return om.values * self.v0 + convolve(om, self.a * S + self.b)

    def quad_tol(self, scale):
        om = self.omega()
        return 10.0 * om.est_error * scale + 1e-12 * (1.0 + scale)

    def to_csv(self, path):
        """JSON header line, then ``t, v, b`` rows over ``[-tau, T]`` (``b = 0`` on the history)."""
        hdr = {"mu": self.mu, "a": self.a, "tau": self.tau, "delay": self.delay.to_dict(),
               "alpha": self.params.alpha, "gamma": self.params.gamma,
               "T": self.T, "K": self.grid.size - 1}
        ft, fv = self.full()
        fb = np.concatenate([np.zeros(self.psi.size - 1), self.b])
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(hdr, sort_keys=True) + "\n")
            w = csv.writer(fh)
            w.writerow(["t", "v", "b"])
            for row in zip(ft, fv, fb):
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            hdr = json.loads(fh.readline()[2:])
            rows = list(csv.reader(fh))[1:]
        data = np.array(rows, dtype=float)
        t, v, b = data[:, 0], data[:, 1], data[:, 2]
        k0 = int(np.flatnonzero(t == 0.0)[0])
        d = hdr["delay"]
        delay = DelaySpec(d["kind"], d["tau"], d.get("q", 1.0))
        grid = TimeGrid.uniform(hdr["T"], n=hdr["K"])
        return cls(hdr["mu"], hdr["a"], grid, t[:k0 + 1], v[:k0 + 1], b[k0:], v[k0:], delay,
                   FracParams(hdr["alpha"], hdr["gamma"]))


def _scale(inst):
    return (max(inst.v0, float(inst.psi.max()), float(inst.v.max()))
            * (1.0 + inst.a * inst.T) + inst.T * float(inst.b.max()))


def verify_premise(inst, tol=None):
    """``v(t) <= RHS(t)`` at every node; margin is ``min(RHS - v)``."""
    rhs = inst.premise_rhs()
    if tol is None:
        tol = inst.quad_tol(_scale(inst))
    return BoundReport("halanay_premise", rhs, inst.v, tolerance=tol,
                       info={"mu": inst.mu, "a": inst.a, "hypothesis_a_lt_mu": inst.a < inst.mu})


def _require(inst, premise):
    if not inst.a < inst.mu:
        raise HalanayError(f"conclusions need a < mu (a={inst.a}, mu={inst.mu})")
    if premise is None:
        premise = verify_premise(inst)
    if not premise.passed:
        raise HalanayError(f"premise does not hold (margin {premise.margin:.3e})")
    return premise


def bound_global(inst, premise=None):
    """``v(t) <= mu/(mu-a) [v0 + (omega * b)(t)] + sup psi``."""
    _require(inst, premise)
    om = inst.omega()
    wb = convolve(om, inst.b)
    k = inst.mu / (inst.mu - inst.a)
    claimed = k * (inst.v0 + wb) + float(inst.psi.max())
    tol = inst.quad_tol(k * inst.T * float(inst.b.max()) + 1.0)
    return BoundReport("halanay_global", claimed, inst.v, tolerance=tol,
                       info={"factor": k, "sup_v": float(inst.v.max())})


def bound_limsup(inst, tail_start, slack=None, decay_tol=1e-3, premise=None):
    """Tail-window surrogate of the limsup conclusion.

    With ``b = 0`` the check is ``v(T) <= decay_tol sup psi``.  Otherwise
    the tail maximum over ``[tail_start, T]`` is compared with
    ``mu/(mu-a) sup (omega * b) + slack``.  The default slack
    ``(mu/(mu-a))**2 max(sup psi, v0) omega(tail_start, mu)`` models the
    transient of the delayed linear problem, whose algebraic tail carries
    the factor ``(mu/(mu-a))**2`` relative to ``omega``.  The uncorrected
    value ``sup (omega * b)`` is recorded in ``info`` for comparison.
    """
    _require(inst, premise)
    t = inst.grid.nodes
    tail = t >= tail_start
    if tail_start >= inst.T or not np.any(tail):
        raise HalanayError("tail window is empty; extend the horizon")
    om = inst.omega()
    sup_psi = float(inst.psi.max())
    if not np.any(inst.b):
        claimed = decay_tol * sup_psi
        return BoundReport("halanay_decay", claimed, float(inst.v[-1]),
                           tolerance=inst.quad_tol(1.0),
                           info={"T": inst.T, "decay_tol": decay_tol, "sup_psi": sup_psi})
    k = inst.mu / (inst.mu - inst.a)
    wb = float(convolve(om, inst.b).max())
    if slack is None:
        i0 = int(np.argmax(tail))
        slack = k * k * max(sup_psi, inst.v0) * float(om.values[i0])
    claimed = k * wb + slack
    return BoundReport("halanay_limsup", claimed, float(inst.v[tail].max()),
                       tolerance=inst.quad_tol(k * inst.T * float(inst.b.max())),
                       info={"sup_conv_b": wb, "factor": k, "slack": slack,
                             "uncorrected_claim": wb, "tail_start": float(tail_start)})


def build_extremal(mu, a, b, psi, delay, grid, params, psi_times=None, start="upper",
                   sweeps=None, tol=1e-12, max_sweeps=2000):
    """Near-equality witness: Picard iterates of the premise map.

    ``start="upper"`` extends ``psi`` by the constant ``sup psi`` (iterates
    decrease when ``b = 0``); ``"lower"`` starts from zero on ``(0, T]``
    (iterates increase and each satisfies the premise).  Runs ``sweeps``
    sweeps if given, otherwise until successive iterates differ by less
    than ``tol``.  ``info`` records the distances and contraction ratios.
    """
    if not a < mu:
        raise HalanayError("extremal construction needs a < mu")
    psi = np.atleast_1d(np.asarray(psi, dtype=float))
    if psi_times is None:
        if psi.size == 1:
            psi_times = np.array([-delay.tau, 0.0]) if delay.tau > 0 else np.array([0.0])
            psi = np.full(psi_times.size, psi[0])
        else:
            psi_times = np.linspace(-delay.tau, 0.0, psi.size)
    b = np.asarray(b, dtype=float) * np.ones(grid.size)
    v0 = float(psi[-1])
    if start == "upper":
        v = np.full(grid.size, float(psi.max()))
    elif start == "lower":
        v = np.zeros(grid.size)
    else:
        raise ValueError(f"unknown start {start!r}")
    v[0] = v0
    inst = HalanayInstance(mu, a, grid, psi_times, psi, b, v, delay, params)
    dists, monotone = [], []
    limit = sweeps if sweeps is not None else max_sweeps
    for k in range(limit):
        new = np.maximum(inst.premise_rhs(inst.v), 0.0)
        new[0] = v0
        step = new - inst.v
        dists.append(float(np.max(np.abs(step))))
        monotone.append(float(np.max(step)) if start == "upper" else float(np.min(step)))
        inst.v = new
        if sweeps is None and dists[-1] < tol:
            break
        if not np.isfinite(dists[-1]) or (k > 20 and dists[-1] > 10 * dists[0]):
            raise ConvergenceError(f"premise iteration diverges (distance {dists[-1]:.3e})")
    else:
        if sweeps is None:
            rates = _rates(dists)
            raise ConvergenceError(f"premise iteration did not reach {tol} in {limit} sweeps; "
                                   f"contraction {rates[-1] if rates else float('nan'):.3g}")
    inst.info = {"distances": dists, "rates": _rates(dists), "monotone_steps": monotone,
                 "start": start, "sweeps": len(dists), "a_over_mu": a / mu}
    return inst


def _rates(d):
    return [d[k + 1] / d[k] for k in range(len(d) - 1) if d[k] > 1e-14]


def contraction_report(inst, slack=1e-6):
    """Measured Picard contraction ratios against ``a/mu``."""
    rates = inst.info.get("rates", [])
    if not rates:
        return BoundReport.skip("halanay_contraction", "fewer than two nontrivial sweeps")
    return BoundReport("halanay_contraction", inst.a / inst.mu, np.array(rates), tolerance=slack)


def ramp(grid, b0, t1=1.0):
    """Nondecreasing ramp ``b0 min(t / t1, 1)``."""
    return b0 * np.minimum(grid.nodes / t1, 1.0)


def limsup_uncorrected_constant(inst):
    """The limsup constant without the ``mu/(mu-a)`` factor, kept for comparison."""
    return float(convolve(inst.omega(), inst.b).max())
