# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py.py``.

Signatures and results match the numpy fallback up to floating-point
summation order.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, pow, tgamma

cnp.import_array()

cdef double SERIES_CUTOFF = 0.05


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    # four partial sums so the compiler can keep several lanes busy
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t k = 0
    while k + 4 <= n:
        s0 += a[k] * b[k]
        s1 += a[k + 1] * b[k + 1]
        s2 += a[k + 2] * b[k + 2]
        s3 += a[k + 3] * b[k + 3]
        k += 4
    while k < n:
        s0 += a[k] * b[k]
        k += 1
    return (s0 + s1) + (s2 + s3)


cdef inline double _phi2(double p, double x) noexcept nogil:
    cdef double term, acc
    cdef int k
    if fabs(x) < SERIES_CUTOFF:
        term = 0.5 * p * (p - 1.0) * x * x
        acc = term
        for k in range(3, 18):
            term = term * ((p - k + 1.0) / k) * x
            acc += term
        return acc
    return pow(1.0 + x, p) - 1.0 - p * x


cdef inline void _cell(double ti, double left, double right, double beta,
                       double g, double* wl, double* wr) noexcept nogil:
    cdef double h = right - left
    cdef double p, a, b
    if beta == 1.0:
        wl[0] = 0.5 * h
        wr[0] = 0.5 * h
        return
    p = beta + 1.0
    a = ti - right
    b = ti - left
    wl[0] = pow(b, p) * _phi2(p, -h / b) / (g * h)
    if a > 0.0:
        wr[0] = pow(a, p) * _phi2(p, h / a) / (g * h)
    else:
        wr[0] = pow(h, p) / (g * h)


def phi2(double p, x):
    xa = np.asarray(x, dtype=np.float64)
    flat = np.ascontiguousarray(xa.ravel())
    cdef const double[::1] xv = flat
    out = np.empty_like(flat)
    cdef double[::1] ov = out
    cdef Py_ssize_t k
    for k in range(xv.shape[0]):
        ov[k] = _phi2(p, xv[k])
    return out.reshape(xa.shape)


cdef void _uniform_tables(double h, Py_ssize_t K, double beta,
                          double[::1] wl, double[::1] wr) noexcept nogil:
    # cell m (1..K) spans [t_i - m h, t_i - (m-1) h]
    cdef double g = tgamma(beta + 2.0)
    cdef Py_ssize_t m
    cdef double a, b
    for m in range(1, K + 1):
        _cell(0.0, -m * h, -(m - 1.0) * h, beta, g, &a, &b)
        wl[m] = a
        wr[m] = b


def volterra_march(t, double mu, double gamma, double beta, bint uniform):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t K = tv.shape[0] - 1
    w_arr = np.empty(K + 1)
    cdef double[::1] w = w_arr
    w[0] = 1.0
    if K == 0:
        return w_arr
    cdef Py_ssize_t i, j, m
    cdef double acc, diag, gb, a, b, a1, b1, h
    cdef double[::1] wl1, wr1, wlb, wrb, c, wl
    if uniform:
        h = tv[1] - tv[0]
        wl1 = np.zeros(K + 2)
        wr1 = np.zeros(K + 2)
        wlb = np.zeros(K + 2)
        wrb = np.zeros(K + 2)
        _uniform_tables(h, K, 1.0, wl1, wr1)
        if gamma != 0.0:
            _uniform_tables(h, K, beta, wlb, wrb)
        c = np.zeros(K + 1)
        wl = np.zeros(K + 2)
        with nogil:
            for m in range(1, K + 1):
                c[m] = wl1[m] + wr1[m + 1] + gamma * (wlb[m] + wrb[m + 1])
                wl[m] = wl1[m] + gamma * wlb[m]
            diag = 1.0 + mu * (wr1[1] + gamma * wrb[1])
            for i in range(1, K + 1):
                acc = wl[i] * w[0]
                for j in range(1, i):
                    acc += c[i - j] * w[j]
                w[i] = (1.0 - mu * acc) / diag
        return w_arr
    gb = tgamma(beta + 2.0)
    with nogil:
        for i in range(1, K + 1):
            acc = 0.0
            for j in range(i):
                _cell(tv[i], tv[j], tv[j + 1], 1.0, 1.0, &a1, &b1)
                if gamma != 0.0:
                    _cell(tv[i], tv[j], tv[j + 1], beta, gb, &a, &b)
                    a1 += gamma * a
                    b1 += gamma * b
                acc += a1 * w[j]
                if j + 1 < i:
                    acc += b1 * w[j + 1]
            w[i] = (1.0 - mu * acc) / (1.0 + mu * b1)
    return w_arr


def frac_integral(t, v, double beta, bint uniform):
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t K = tv.shape[0] - 1
    out_arr = np.zeros(K + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, m
    cdef double acc, a, b, g
    cdef double[::1] wl, wr
    if K == 0:
        return out_arr
    if uniform:
        wl = np.zeros(K + 2)
        wr = np.zeros(K + 2)
        _uniform_tables(tv[1] - tv[0], K, beta, wl, wr)
        with nogil:
            for i in range(1, K + 1):
                acc = wl[i] * vv[0] + wr[1] * vv[i]
                for j in range(1, i):
                    acc += (wl[i - j] + wr[i - j + 1]) * vv[j]
                out[i] = acc
        return out_arr
    g = tgamma(beta + 2.0)
    with nogil:
        for i in range(1, K + 1):
            acc = 0.0
            for j in range(i):
                _cell(tv[i], tv[j], tv[j + 1], beta, g, &a, &b)
                acc += a * vv[j] + b * vv[j + 1]
            out[i] = acc
    return out_arr


def lagged_sum(Wrev, E, F, Py_ssize_t i):
    cdef const double[:, ::1] wv = Wrev
    cdef const double[:, ::1] ev = E
    cdef const double[:, ::1] fv = F
    cdef Py_ssize_t N = wv.shape[0]
    cdef Py_ssize_t M = wv.shape[1]
    out_arr = np.empty(N)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n, off
    off = M - 1 - i
    with nogil:
        for n in range(N):
            out[n] = ev[n, i] * fv[n, 0] + _dot(&wv[n, off + 1], &fv[n, 1], i - 1)
    return out_arr


def causal_conv(W, E, G):
    cdef const double[:, ::1] wv = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, ::1] ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[:, ::1] gv = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t N = gv.shape[0]
    cdef Py_ssize_t M = gv.shape[1]
    out_arr = np.zeros((N, M))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t n, i
    if M < 2:
        return out_arr
    # reversed rows turn each sum into a forward dot product
    cdef const double[:, ::1] wr = np.ascontiguousarray(np.asarray(wv)[:, ::-1])
    with nogil:
        for n in range(N):
            for i in range(1, M):
                out[n, i] = ev[n, i] * gv[n, 0] + _dot(&wr[n, M - i], &gv[n, 1], i)
    return out_arr


def exp_sum(r, w, t):
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t Q = rv.shape[0]
    cdef Py_ssize_t P = tv.shape[0]
    out_arr = np.zeros(P)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double acc
    with nogil:
        for i in range(P):
            acc = 0.0
            for k in range(Q):
                acc += wv[k] * exp(-rv[k] * tv[i])
            out[i] = acc
    return out_arr


def exp_sum_uniform(r, w, double h, Py_ssize_t K):
    """Same as ``exp_sum`` on ``t_i = i h`` using ``exp(-r i h) = q**i``."""
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t Q = rv.shape[0]
    out_arr = np.zeros(K + 1)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double q, acc
    with nogil:
        for k in range(Q):
            q = exp(-rv[k] * h)
            acc = wv[k]
            for i in range(K + 1):
                out[i] += acc
                acc *= q
                if acc < 1e-300:
                    break
    return out_arr
