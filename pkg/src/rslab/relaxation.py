"""Relaxation function ``omega(t, mu)`` and scalar inhomogeneous solutions.

``omega`` solves ``omega' + mu (1 + gamma D^alpha) omega = 0``, ``omega(0) = 1``
with ``D^alpha`` the Riemann-Liouville derivative.  Two independent routes
are provided:

* :func:`omega_volterra` integrates the equivalent second-kind Volterra
  equation ``omega = 1 - mu (k * omega)`` with ``k = 1 + gamma g_{1-alpha}``
  by product integration (exact for piecewise-linear ``omega``).
* :func:`omega_branch_cut` inverts the Laplace transform
  ``1 / (s + gamma mu s**alpha + mu)`` along the negative real axis.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import GridError, TimeGrid
from .reports import BoundReport


class ConvergenceError(RuntimeError):
    """A numerical iteration or quadrature failed to converge."""


@dataclass(frozen=True)
class FracParams:
    """Fractional order ``alpha`` in (0, 1) and viscoelastic weight ``gamma``.

    ``gamma == 0`` is accepted as a degenerate oracle mode in which
    ``omega(t, mu) = exp(-mu t)``.
    """

    alpha: float
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def beta(self):
        """Order of the fractional integral inside the derivative."""
        return 1.0 - self.alpha

    @property
    def oracle(self):
        return self.gamma == 0.0


def g_beta(beta, t):
    """Riemann-Liouville kernel ``t**(beta-1) / Gamma(beta)`` (0 for t <= 0)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = t[pos] ** (beta - 1.0) / math.gamma(beta)
    return out if out.ndim else float(out)


@dataclass
class RelaxationSamples:
    """``omega(t_i, mu)`` tabulated on a grid.

    ``est_error`` bounds the nodal error; ``node_errors`` (optional) holds
    the per-node estimate it was derived from.
    """

    mu: float
    grid: TimeGrid
    values: np.ndarray
    method: str
    est_error: float
    params: FracParams = None
    node_errors: np.ndarray = field(default=None, repr=False)

    @property
    def t(self):
        return self.grid.nodes

    def to_csv(self, path):
        """Debug dump with header ``t,omega,err``."""
        errs = self.node_errors if self.node_errors is not None else np.full(self.values.shape, self.est_error)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "omega", "err"])
            for row in zip(self.t, self.values, errs):
                w.writerow([repr(float(x)) for x in row])

    def invariant_report(self, factor=10.0):
        """``0 < omega <= 1`` and nonincreasing, within ``factor * est_error``."""
        tol = factor * self.est_error
        v = self.values
        steps = np.diff(v)
        measured = np.concatenate([v - 1.0, -v, steps]) if v.size > 1 else np.concatenate([v - 1.0, -v])
        return BoundReport("omega_range_monotone", 0.0, measured, tolerance=tol,
                           info={"mu": self.mu, "min": float(v.min())})


# ---------------------------------------------------------------- Volterra

def _march(params, mu, grid):
    return kernels.volterra_march(grid.nodes, float(mu), float(params.gamma),
                                  float(params.beta), grid.is_uniform)


def omega_volterra(params, mu, grid, extrapolate=False):
    """Relaxation function on ``grid`` by product integration.

    The march is repeated on the grid with every cell halved.  The returned
    values are the fine-grid values at the original nodes (or their
    Richardson extrapolation with exponent 2 when ``extrapolate``); the
    error estimate is the step-halving difference (divided by 3 after
    extrapolation).
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if mu == 0:
        ones = np.ones(grid.size)
        return RelaxationSamples(0.0, grid, ones, "volterra", 0.0, params, np.zeros(grid.size))
    coarse = _march(params, mu, grid)
    fine = _march(params, mu, grid.refine())[::2]
    for arr in (coarse, fine):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise ConvergenceError(f"implicit step produced a non-finite value at node {bad[0]}")
    diff = np.abs(fine - coarse)
    if extrapolate:
        values = fine + (fine - coarse) / 3.0
        node_err = diff / 3.0
    else:
        values = fine
        node_err = diff
    return RelaxationSamples(float(mu), grid, values, "volterra", float(node_err.max()), params, node_err)


def product_integral(grid, values, beta):
    """``int_0^{t_i} g_beta(t_i - s) v(s) ds`` for piecewise-linear ``v``.

    ``beta == 1`` gives the cumulative trapezoid integral.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != grid.nodes.shape:
        raise GridError("values do not match the grid")
    return kernels.frac_integral(grid.nodes, values, float(beta), grid.is_uniform)


# ---------------------------------------------------------------- branch cut

_TAIL_EXP = 60.0  # exp(-60) ~ 9e-27 truncates the right tail


def _cut_density(params, mu, r):
    """Jump of the transform across the cut, divided by pi (times r for dr = r du)."""
    a = params.alpha
    sa, ca = math.sin(math.pi * a), math.cos(math.pi * a)
    gm = params.gamma * mu * r ** a
    den = (mu - r + gm * ca) ** 2 + (gm * sa) ** 2
    return gm * sa / (math.pi * den) * r


def _u_range(params, mu, t_min):
    a = params.alpha
    c0 = params.gamma * math.sin(math.pi * a) / (math.pi * mu)
    lo = math.log(1e-18 * (1.0 + a) / c0) / (1.0 + a)
    lo = min(lo, math.log(min(mu, params.gamma ** (-1.0 / a))) - 10.0)
    hi = math.log(_TAIL_EXP / t_min)
    return lo, max(hi, lo + 1.0)


def _branch_cut_sum(params, mu, times, atol, uniform_h=None, h0=0.5, max_levels=14):
    """Trapezoid rule in ``u = log r`` with step halving until ``atol``.

    Returns ``(values, error_estimate)`` at ``times`` (all > 0), or at
    ``uniform_h * arange(len(times))`` shifted by one step when ``uniform_h``
    is given (fast path for uniform tables).
    """
    t_min = float(np.min(times))
    lo, hi = _u_range(params, mu, t_min)

    def partial(u):
        r = np.exp(u)
        w = _cut_density(params, mu, r)
        if uniform_h is None:
            return kernels.exp_sum(r, w, times)
        # times are h, 2h, ..., K h: fold exp(-r h) into the weight
        return kernels.exp_sum_uniform(r, w * np.exp(-r * uniform_h), uniform_h, len(times) - 1)

    n = max(2, int(math.ceil((hi - lo) / h0)))
    h = (hi - lo) / n
    total = h * partial(lo + h * np.arange(n + 1))
    err = np.inf
    for _ in range(max_levels):
        new = 0.5 * total + 0.5 * h * partial(lo + h * (np.arange(n) + 0.5))
        err = float(np.max(np.abs(new - total)))
        total = new
        h *= 0.5
        n *= 2
        if err <= atol and h <= 0.125:
            return total, err
    raise ConvergenceError(f"branch-cut quadrature did not reach atol={atol} (last change {err:.2e})")


def omega_branch_cut(params, mu, t, atol=1e-9):
    """``omega(t, mu)`` at a single ``t > 0`` by Laplace inversion on the cut."""
    if t <= 0:
        raise ValueError("branch-cut evaluation needs t > 0")
    if mu <= 0:
        raise ValueError("branch-cut evaluation needs mu > 0")
    if params.oracle:
        return math.exp(-mu * t)
    vals, _ = _branch_cut_sum(params, mu, np.array([float(t)]), atol)
    return float(vals[0])


def omega_branch_cut_many(params, mu, times, atol=1e-9):
    """Vectorized :func:`omega_branch_cut`; returns ``(values, error_estimate)``."""
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("branch-cut evaluation needs t > 0")
    if mu <= 0:
        raise ValueError("branch-cut evaluation needs mu > 0")
    if params.oracle:
        return np.exp(-mu * times), 0.0
    return _branch_cut_sum(params, mu, times, atol)


_ERR_FLOOR = 1e-14


def branch_cut_samples(params, mu, grid, atol=1e-9):
    """:class:`RelaxationSamples` from the branch-cut route (``omega(0) = 1``)."""
    values = np.ones(grid.size)
    if mu == 0 or grid.size == 1:
        return RelaxationSamples(float(mu), grid, values, "branch_cut", 0.0, params)
    if params.oracle:
        values[1:] = np.exp(-mu * grid.nodes[1:])
        return RelaxationSamples(float(mu), grid, values, "branch_cut", _ERR_FLOOR, params)
    if grid.is_uniform:
        vals, err = _branch_cut_sum(params, mu, grid.nodes[1:], atol, uniform_h=grid.h)
    else:
        vals, err = _branch_cut_sum(params, mu, grid.nodes[1:], atol)
    values[1:] = vals
    return RelaxationSamples(float(mu), grid, values, "branch_cut", max(err, _ERR_FLOOR), params)


def relaxation_samples(params, mu, grid, method="branch_cut", **kw):
    if method == "branch_cut":
        return branch_cut_samples(params, mu, grid, **kw)
    if method == "volterra":
        return omega_volterra(params, mu, grid, **kw)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------- convolution

def conv_weights(values, h):
    """Product-integration weights for ``int_0^{t_i} omega(t_i - s) g(s) ds``.

    Both ``omega`` and ``g`` are taken piecewise linear on the uniform grid
    and the product is integrated exactly.  ``values`` may be one row or a
    stack of rows ``(N, K+1)``.  Returns ``(W, E)`` with::

        conv_i = E_i g_0 + sum_{j=1}^{i} W_{i-j} g_j
    """
    w = np.atleast_2d(np.asarray(values, dtype=float))
    N, M = w.shape
    W = np.zeros((N, M))
    E = np.zeros((N, M))
    if M < 2:
        return W, E
    c = h / 6.0
    W[:, 0] = c * (w[:, 1] + 2.0 * w[:, 0])
    W[:, 1:M - 1] = c * (w[:, 2:] + 4.0 * w[:, 1:M - 1] + w[:, :M - 2])
    E[:, 1:] = c * (2.0 * w[:, 1:] + w[:, :M - 1])
    return W, E


def convolve(samples, g):
    """``(omega(., mu) * g)(t_i)`` on the samples' uniform grid."""
    if not samples.grid.is_uniform:
        raise GridError("convolution needs a uniform grid")
    g = np.asarray(g, dtype=float)
    if g.shape != samples.values.shape:
        raise GridError(f"g has {g.shape[0] if g.ndim else 0} samples, grid has {samples.grid.size}")
    W, E = conv_weights(samples.values, samples.grid.h)
    return kernels.causal_conv(W, E, g[None, :])[0]


def scalar_inhomogeneous(params, mu, v0, g, grid, samples=None, method="branch_cut"):
    """Solution of ``v' + mu (1 + gamma D^alpha) v = g``, ``v(0) = v0``.

    ``v(t) = omega(t) v0 + (omega * g)(t)`` with ``g`` given at the nodes of
    a uniform ``grid``.  Pass ``samples`` to reuse an existing table.
    """
    if not grid.is_uniform:
        raise GridError("scalar_inhomogeneous needs a uniform grid")
    g = np.asarray(g, dtype=float)
    if g.shape != grid.nodes.shape:
        raise GridError("g does not match the grid")
    if samples is None:
        samples = relaxation_samples(params, mu, grid, method=method)
    elif not samples.grid.same_as(grid):
        raise GridError("samples live on a different grid")
    return samples.values * v0 + convolve(samples, g)


# ---------------------------------------------------------------- bound checks

def check_bounds_prop21(samples, params, factor=10.0):
    """Pointwise bounds on ``mu omega`` and the integral bound.

    Returns three reports: ``mu omega <= 1/(t + g_{2-alpha}(t))``,
    ``mu omega <= min(1/t, t**(alpha-1))`` and
    ``int_0^t omega <= (1 - omega(t)) / mu``.  Tolerances are
    ``factor * est_error`` propagated to each quantity.

    The first two are checked in their gamma-free form; see
    :func:`check_bounds_corrected`.  The cumulative integral is the
    trapezoid rule on the samples' grid, so (iii) needs a grid that
    resolves the initial layer (``mu h`` small near 0): on a coarse uniform
    grid the interpolant of the convex ``omega`` overestimates the integral.
    """
    mu = samples.mu
    if mu == 0:
        reason = "mu = 0: bounds are vacuous"
        return [BoundReport.skip(n, reason) for n in
                ("mu_omega_le_inv_t_plus_g", "mu_omega_le_min_power", "int_omega_le_one_minus_omega")]
    t = samples.t
    pos = t > 0
    tp = t[pos]
    mw = mu * samples.values[pos]
    tol_pt = factor * mu * samples.est_error
    claim1 = 1.0 / (tp + g_beta(2.0 - params.alpha, tp))
    claim2 = np.minimum(1.0 / tp, tp ** (params.alpha - 1.0))
    r1 = BoundReport("mu_omega_le_inv_t_plus_g", claim1, mw, tolerance=tol_pt)
    r2 = BoundReport("mu_omega_le_min_power", claim2, mw, tolerance=tol_pt)
    cum = product_integral(samples.grid, samples.values, 1.0)
    claim3 = (1.0 - samples.values) / mu
    tol3 = factor * samples.est_error * (samples.grid.T + 1.0 / mu)
    r3 = BoundReport("int_omega_le_one_minus_omega", claim3, cum, tolerance=tol3)
    return [r1, r2, r3]


def check_bounds_corrected(samples, params, factor=10.0):
    """The pointwise bounds with the weight ``gamma`` restored.

    Integrating the equation gives ``1 - omega(t) = mu int_0^t omega +
    mu gamma (g_{1-alpha} * omega)(t)`` and, since ``omega`` is
    nonincreasing, ``mu omega(t) <= 1 / (t + gamma g_{2-alpha}(t))``, hence
    ``mu omega <= min(1/t, Gamma(2-alpha) t**(alpha-1) / gamma)``.  The
    gamma-free forms in :func:`check_bounds_prop21` only follow when
    ``gamma >= 1``.
    """
    mu = samples.mu
    if mu == 0:
        reason = "mu = 0: bounds are vacuous"
        return [BoundReport.skip(n, reason) for n in ("mu_omega_le_inv_t_plus_gamma_g",
                                                       "mu_omega_le_min_power_gamma")]
    t = samples.t
    pos = t > 0
    tp = t[pos]
    mw = mu * samples.values[pos]
    tol = factor * mu * samples.est_error
    a, g = params.alpha, params.gamma
    claim1 = 1.0 / (tp + g * g_beta(2.0 - a, tp))
    if g > 0:
        claim2 = np.minimum(1.0 / tp, math.gamma(2.0 - a) * tp ** (a - 1.0) / g)
    else:
        claim2 = 1.0 / tp
    return [BoundReport("mu_omega_le_inv_t_plus_gamma_g", claim1, mw, tolerance=tol),
            BoundReport("mu_omega_le_min_power_gamma", claim2, mw, tolerance=tol)]


def check_complete_monotonicity(samples, order=3, factor=10.0):
    """Sign pattern of forward differences, ``(-1)**k D^k omega >= -tol_k``.

    ``tol_k = factor * 2**k * est_error``: a k-th difference of nodal values
    each off by at most ``est_error`` is off by at most ``2**k est_error``.
    """
    if not samples.grid.is_uniform:
        raise GridError("complete-monotonicity check needs a uniform grid")
    if not 1 <= order <= 4:
        raise ValueError("order must be in 1..4")
    scaled = []
    for k in range(1, order + 1):
        d = (-1) ** k * np.diff(samples.values, n=k)
        scaled.append(-d / 2.0 ** k)
    measured = np.concatenate(scaled) if scaled else np.zeros(0)
    return BoundReport(f"complete_monotone_order{order}", 0.0, measured,
                       tolerance=factor * samples.est_error, info={"order": order})


def check_mu_monotonicity(samples_list, factor=10.0):
    """``mu1 <= mu2`` implies ``omega(t, mu1) >= omega(t, mu2)`` on a shared grid."""
    ordered = sorted(samples_list, key=lambda s: s.mu)
    if len(ordered) < 2:
        return BoundReport.skip("omega_nonincreasing_in_mu", "needs two mu values")
    grid = ordered[0].grid
    diffs = []
    tol = 0.0
    for lo, hi in zip(ordered, ordered[1:]):
        if not hi.grid.same_as(grid):
            raise GridError("mu-monotonicity needs a shared grid")
        diffs.append(hi.values - lo.values)
        tol = max(tol, factor * (lo.est_error + hi.est_error))
    return BoundReport("omega_nonincreasing_in_mu", 0.0, np.concatenate(diffs), tolerance=tol,
                       info={"mus": [s.mu for s in ordered]})
