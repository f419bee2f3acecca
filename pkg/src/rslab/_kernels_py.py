"""Pure-Python (numpy) implementations of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
The compiled module is preferred at import time (see ``rslab.kernels``);
this file is the fallback and the reference the benchmark compares against.

Conventions shared by both backends
-----------------------------------
* Time grids are float64 arrays ``t`` with ``t[0] == 0``.
* Product-integration weights treat the integrand as piecewise linear
  between nodes and integrate it exactly against ``g_beta(u) = u**(beta-1) /
  Gamma(beta)``.
* Multi-mode arrays are mode-major, shape ``(N, M)``, time contiguous.
"""
from math import gamma as _gamma

import numpy as np

_SERIES_CUTOFF = 0.05


def phi2(p, x):
    """Stable ``(1 + x)**p - 1 - p*x`` (vectorized)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < _SERIES_CUTOFF
    xs = x[small]
    term = 0.5 * p * (p - 1.0) * xs * xs
    acc = term.copy()
    for k in range(3, 18):
        term = term * ((p - k + 1.0) / k) * xs
        acc += term
    out[small] = acc
    xl = x[~small]
    out[~small] = (1.0 + xl) ** p - 1.0 - p * xl
    return out


def cell_weights(ti, left, right, beta):
    """Weights of the nodal values at ``left``/``right`` of each cell.

    Returns ``(wl, wr)`` such that for a linear function ``v`` on the cell
    ``[left, right]``::

        int_left^right g_beta(ti - s) v(s) ds = wl * v(left) + wr * v(right)

    ``ti >= right`` is required.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    h = right - left
    if beta == 1.0:
        half = 0.5 * h
        return half, half.copy()
    p = beta + 1.0
    g = _gamma(p + 1.0)
    a = ti - right
    b = ti - left
    wl = b ** p * phi2(p, -h / b) / (g * h)
    pos = a > 0
    a_safe = np.where(pos, a, 1.0)
    wr = np.where(pos, a_safe ** p * phi2(p, h / a_safe), h ** p) / (g * h)
    return wl, wr


def _uniform_weights(h, K, beta):
    # wl[m], wr[m] for the cell whose right end is m-1 steps behind t_i
    m = np.arange(1, K + 1, dtype=float)
    wl, wr = cell_weights(0.0, -m * h, -(m - 1.0) * h, beta)
    out_l = np.zeros(K + 2)
    out_r = np.zeros(K + 2)
    out_l[1:K + 1] = wl
    out_r[1:K + 1] = wr
    return out_l, out_r


def _row_weights(t, i, beta):
    """Combined coefficient of ``v[0..i]`` in ``int_0^t_i g_beta(t_i - s) v(s) ds``."""
    wl, wr = cell_weights(t[i], t[:i], t[1:i + 1], beta)
    c = np.zeros(i + 1)
    c[:i] += wl
    c[1:i + 1] += wr
    return c


def _toeplitz_coeffs(t, beta):
    K = len(t) - 1
    h = t[1] - t[0]
    wl, wr = _uniform_weights(h, K, beta)
    # coefficient of v_j in row i depends on m = i - j:
    #   interior (1 <= j <= i-1): wl[m] + wr[m+1]; j == i: wr[1]; j == 0: wl[i]
    interior = wl[:K + 1] + wr[1:K + 2]
    return wl, wr, interior


def volterra_march(t, mu, gamma, beta, uniform):
    """Solve ``w(t) = 1 - mu * int_0^t (1 + gamma g_beta(t-s)) w(s) ds``.

    Implicit in the current node; the unknown enters linearly, so each
    step is a scalar division.
    """
    t = np.asarray(t, dtype=float)
    K = len(t) - 1
    w = np.empty(K + 1)
    w[0] = 1.0
    if K == 0:
        return w
    if uniform:
        wl1, wr1, c1 = _toeplitz_coeffs(t, 1.0)
        if gamma != 0.0:
            wlb, wrb, cb = _toeplitz_coeffs(t, beta)
            c = c1 + gamma * cb
            wl = wl1 + gamma * wlb
            diag = wr1[1] + gamma * wrb[1]
        else:
            c = c1
            wl = wl1
            diag = wr1[1]
        denom = 1.0 + mu * diag
        rev = c[::-1].copy()  # rev[K - m] == c[m]
        for i in range(1, K + 1):
            acc = wl[i] * w[0]
            if i > 1:
                acc += np.dot(rev[K - i + 1:K], w[1:i])
            w[i] = (1.0 - mu * acc) / denom
        return w
    for i in range(1, K + 1):
        c = _row_weights(t, i, 1.0)
        if gamma != 0.0:
            c = c + gamma * _row_weights(t, i, beta)
        acc = np.dot(c[:i], w[:i])
        w[i] = (1.0 - mu * acc) / (1.0 + mu * c[i])
    return w


def frac_integral(t, v, beta, uniform):
    """``int_0^{t_i} g_beta(t_i - s) v(s) ds`` for piecewise-linear ``v``."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    K = len(t) - 1
    out = np.zeros(K + 1)
    if uniform and K > 0:
        wl, wr, c = _toeplitz_coeffs(t, beta)
        for i in range(1, K + 1):
            acc = wl[i] * v[0] + wr[1] * v[i]
            if i > 1:
                acc += np.dot(c[i - 1:0:-1], v[1:i])
            out[i] = acc
        return out
    for i in range(1, K + 1):
        out[i] = np.dot(_row_weights(t, i, beta), v[:i + 1])
    return out


def lagged_sum(Wrev, E, F, i):
    """History part of the causal convolution at node ``i`` (all modes).

    ``Wrev[:, M-1-m] == W[:, m]``; returns
    ``E[:, i] * F[:, 0] + sum_{j=1}^{i-1} W[:, i-j] * F[:, j]``.
    """
    M = Wrev.shape[1]
    out = E[:, i] * F[:, 0]
    if i > 1:
        out = out + np.einsum("nj,nj->n", Wrev[:, M - i:M - 1], F[:, 1:i])
    return out


def causal_conv(W, E, G):
    """``out[:, i] = E[:, i] G[:, 0] + sum_{j=1}^{i} W[:, i-j] G[:, j]``; ``out[:, 0] = 0``."""
    N, M = G.shape
    out = np.zeros((N, M))
    if M < 2:
        return out
    for n in range(N):
        out[n, 1:] = E[n, 1:] * G[n, 0] + np.convolve(W[n], G[n, 1:])[:M - 1]
    return out


def exp_sum(r, w, t):
    """``sum_k w_k exp(-r_k t)`` at every ``t`` (chunked outer product)."""
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape[0])
    chunk = max(1, 2_000_000 // max(1, r.shape[0]))
    for s in range(0, t.shape[0], chunk):
        out[s:s + chunk] = np.exp(-np.outer(t[s:s + chunk], r)) @ w
    return out


def exp_sum_uniform(r, w, h, K):
    return exp_sum(r, w, h * np.arange(K + 1, dtype=float))
