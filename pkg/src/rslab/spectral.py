"""Dirichlet-Laplacian eigenbasis, spectral fields and the resolvent.

Fields are represented by their coefficients against the orthonormal
Dirichlet eigenfunctions of an interval or a rectangle.  The resolvent
``S(t)`` acts diagonally, multiplying coefficient ``n`` by
``omega(t, lambda_n)``; a :class:`ResolventTable` holds those multipliers on
a uniform time grid together with the convolution weights used by the
Cauchy operator ``Q(g)(t) = int_0^t S(t-s) g(s) ds``.

Time series of fields use the layout ``(K+1, N)``: one row per grid node.
"""
import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from . import kernels
from .grid import GridError, TimeGrid
from .relaxation import FracParams, conv_weights, relaxation_samples
from .reports import BoundReport


class BasisMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """``interval`` of length ``L`` or ``rectangle`` ``Lx x Ly``."""

    kind: str
    L: float
    Ly: float = None

    def __post_init__(self):
        if self.kind not in ("interval", "rectangle"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if not self.L > 0:
            raise ValueError("domain lengths must be positive")
        if self.kind == "rectangle":
            if self.Ly is None or not self.Ly > 0:
                raise ValueError("rectangle needs Ly > 0")
        elif self.Ly is not None:
            raise ValueError("interval takes a single length")

    @classmethod
    def interval(cls, L=math.pi):
        return cls("interval", float(L))

    @classmethod
    def rectangle(cls, Lx=math.pi, Ly=math.pi):
        return cls("rectangle", float(Lx), float(Ly))

    @property
    def dim(self):
        return 1 if self.kind == "interval" else 2

    def to_dict(self):
        d = {"kind": self.kind, "L": self.L}
        if self.Ly is not None:
            d["Ly"] = self.Ly
        return d


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """First ``N`` Dirichlet eigenpairs in ascending order.

    ``modes`` holds ``n`` (interval, shape ``(N, 1)``) or ``(m, n)``
    (rectangle, shape ``(N, 2)``).
    """

    domain: Domain
    lambdas: np.ndarray
    modes: np.ndarray

    @property
    def N(self):
        return self.lambdas.size

    @property
    def lambda1(self):
        return float(self.lambdas[0])

    def same_as(self, other):
        return (self is other) or (
            self.domain == other.domain and self.N == other.N
            and bool(np.all(self.lambdas == other.lambdas)))

    def eigenfunctions(self, points):
        """Matrix ``phi[k, n] = phi_n(points[k])``."""
        d = self.domain
        if d.kind == "interval":
            x = np.asarray(points, dtype=float).reshape(-1)
            if np.any(x < 0) or np.any(x > d.L):
                raise ValueError("point outside the interval")
            n = self.modes[:, 0]
            return math.sqrt(2.0 / d.L) * np.sin(np.outer(x, n) * math.pi / d.L)
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        x, y = pts[:, 0], pts[:, 1]
        if np.any(x < 0) or np.any(x > d.L) or np.any(y < 0) or np.any(y > d.Ly):
            raise ValueError("point outside the rectangle")
        m, n = self.modes[:, 0], self.modes[:, 1]
        return (2.0 / math.sqrt(d.L * d.Ly)) * np.sin(np.outer(x, m) * math.pi / d.L) \
            * np.sin(np.outer(y, n) * math.pi / d.Ly)

    def analytic_lambdas(self):
        d = self.domain
        if d.kind == "interval":
            return (self.modes[:, 0] * math.pi / d.L) ** 2
        return (self.modes[:, 0] * math.pi / d.L) ** 2 + (self.modes[:, 1] * math.pi / d.Ly) ** 2

    def to_dict(self):
        return {"domain": self.domain.to_dict(), "N": self.N,
                "lambdas": [float(v) for v in self.lambdas],
                "modes": self.modes.tolist()}


def build_basis(domain, N):
    """Ascending Dirichlet eigenvalues; 2D ties broken by lexicographic ``(m, n)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if domain.kind == "interval":
        modes = np.arange(1, N + 1).reshape(-1, 1)
        lam = (modes[:, 0] * math.pi / domain.L) ** 2
    else:
        # every one of the N smallest has m, n <= N
        m, n = np.meshgrid(np.arange(1, N + 1), np.arange(1, N + 1), indexing="ij")
        m, n = m.ravel(), n.ravel()
        lam_all = (m * math.pi / domain.L) ** 2 + (n * math.pi / domain.Ly) ** 2
        order = np.lexsort((n, m, lam_all))[:N]
        modes = np.stack([m[order], n[order]], axis=1)
        lam = lam_all[order]
    lam = np.ascontiguousarray(lam, dtype=float)
    lam.setflags(write=False)
    modes.setflags(write=False)
    return EigenBasis(domain, lam, modes)


@dataclass(eq=False)
class Field:
    """A function on the domain, stored as its ``N`` spectral coefficients."""

    basis: EigenBasis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.basis.N,):
            raise BasisMismatch(f"expected {self.basis.N} coefficients, got {self.coeffs.shape}")

    @classmethod
    def zeros(cls, basis):
        return cls(basis, np.zeros(basis.N))

    @classmethod
    def mode(cls, basis, n, scale=1.0):
        """``scale * phi_n`` (``n`` is 1-based)."""
        c = np.zeros(basis.N)
        c[n - 1] = scale
        return cls(basis, c)

    def norm(self):
        """L2 norm (Parseval)."""
        return float(np.linalg.norm(self.coeffs))

    def to_csv(self, path, points):
        """Snapshot ``(x, u(x))`` (``(x, y, u)`` on a rectangle)."""
        pts = np.asarray(points, dtype=float)
        vals = synthesize(self, pts)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.basis.domain.kind == "interval":
                w.writerow(["x", "u"])
                for x, u in zip(pts.reshape(-1), vals):
                    w.writerow([repr(float(x)), repr(float(u))])
            else:
                w.writerow(["x", "y", "u"])
                for (x, y), u in zip(pts.reshape(-1, 2), vals):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(u))])


def _trap_weights(M, length):
    w = np.full(M, length / (M - 1))
    w[0] = w[-1] = 0.5 * length / (M - 1)
    return w


def mesh(domain, M):
    """Uniform quadrature mesh with endpoints (``M`` points per direction)."""
    if domain.kind == "interval":
        return np.linspace(0.0, domain.L, M)
    x = np.linspace(0.0, domain.L, M)
    y = np.linspace(0.0, domain.Ly, M)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def project(values, basis, M=None):
    """Spectral coefficients of samples on the uniform mesh from :func:`mesh`.

    Composite trapezoid against each eigenfunction.  With zero boundary
    values the rule is exact for sine polynomials of degree below
    ``2 (M - 1) - N``.  Warns when a direction has fewer than four points
    per shortest wavelength.
    """
    d = basis.domain
    values = np.asarray(values, dtype=float)
    if d.kind == "interval":
        M = values.size if M is None else M
        if values.shape != (M,):
            raise GridError("values do not match an interval mesh")
        pts = mesh(d, M)
        w = _trap_weights(M, d.L)
        nmax = basis.modes[:, 0].max()
        _check_resolution(M, nmax, "x")
    else:
        if M is None:
            M = int(round(math.sqrt(values.size)))
        if values.size != M * M:
            raise GridError("values do not match a square mesh")
        values = values.reshape(-1)
        pts = mesh(d, M)
        w = np.outer(_trap_weights(M, d.L), _trap_weights(M, d.Ly)).ravel()
        _check_resolution(M, basis.modes[:, 0].max(), "x")
        _check_resolution(M, basis.modes[:, 1].max(), "y")
    phi = basis.eigenfunctions(pts)
    return Field(basis, phi.T @ (w * values))


def _check_resolution(M, nmax, axis):
    # shortest wavelength 2L/nmax spans (M-1) * 2 / nmax cells
    per_wave = 2.0 * (M - 1) / nmax
    if per_wave < 4.0:
        alias = max(0, nmax - (M - 1))
        warnings.warn(
            f"mesh under-resolves mode {nmax} along {axis}: {per_wave:.2f} points per "
            f"wavelength (< 4); modes above {M - 1} alias ({alias} affected)",
            RuntimeWarning, stacklevel=3)


def synthesize(fld, points):
    """Pointwise values ``sum_n c_n phi_n(x)``."""
    return fld.basis.eigenfunctions(points) @ fld.coeffs


# ---------------------------------------------------------------- resolvent

@dataclass(eq=False)
class ResolventTable:
    """``omega(t_i, lambda_n)`` for all modes on a uniform grid.

    ``table`` has shape ``(N, K+1)``.  Convolution weights are built on
    first use and cached.
    """

    basis: EigenBasis
    grid: TimeGrid
    params: FracParams
    table: np.ndarray
    est_error: np.ndarray
    method: str = "branch_cut"
    _weights: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if not self.grid.is_uniform:
            raise GridError("resolvent tables live on uniform grids")
        self.table = np.ascontiguousarray(self.table, dtype=float)
        if self.table.shape != (self.basis.N, self.grid.size):
            raise GridError("table shape does not match basis and grid")
        self.est_error = np.asarray(self.est_error, dtype=float)
        self.table.setflags(write=False)

    @property
    def N(self):
        return self.basis.N

    def row(self, n):
        """``omega(., lambda_n)`` for 1-based mode ``n``."""
        return self.table[n - 1]

    def weights(self):
        """``(W, E, Wrev)`` convolution weights, mode-major."""
        if self._weights is None:
            W, E = conv_weights(self.table, self.grid.h)
            Wrev = np.ascontiguousarray(W[:, ::-1])
            self._weights = (W, E, Wrev)
        return self._weights

    def header(self):
        return {"alpha": self.params.alpha, "gamma": self.params.gamma,
                "lambdas": [float(v) for v in self.basis.lambdas],
                "domain": self.basis.domain.to_dict(),
                "modes": self.basis.modes.tolist(),
                "T": self.grid.T, "K": self.grid.size - 1, "h": self.grid.h,
                "method": self.method,
                "est_error": [float(e) for e in self.est_error]}

    def to_csv(self, path):
        """JSON header on the first line (prefixed ``# ``), then one CSV row per mode."""
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
            w = csv.writer(fh)
            for r in self.table:
                w.writerow([repr(float(v)) for v in r])

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            first = fh.readline()
            if not first.startswith("# "):
                raise ValueError("missing JSON header line")
            hdr = json.loads(first[2:])
            body = fh.read()
        table = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
        dom = hdr["domain"]
        domain = Domain(dom["kind"], dom["L"], dom.get("Ly"))
        basis = build_basis(domain, len(hdr["lambdas"]))
        if not np.array_equal(basis.lambdas, np.array(hdr["lambdas"])):
            raise BasisMismatch("stored eigenvalues do not match the rebuilt basis")
        grid = TimeGrid.uniform(hdr["T"], n=hdr["K"])
        return cls(basis, grid, FracParams(hdr["alpha"], hdr["gamma"]), table,
                   np.array(hdr["est_error"]), hdr["method"])


def build_resolvent(params, basis, grid, method="branch_cut"):
    """Tabulate ``omega(t_i, lambda_n)`` mode by mode.

    ``method="branch_cut"`` (default) is accurate uniformly in ``lambda h``;
    ``"volterra"`` uses the product-integration march.
    """
    if not grid.is_uniform:
        raise GridError("resolvent tables need a uniform grid")
    rows = np.empty((basis.N, grid.size))
    errs = np.empty(basis.N)
    for k, lam in enumerate(basis.lambdas):
        s = relaxation_samples(params, float(lam), grid, method=method)
        rows[k] = s.values
        errs[k] = s.est_error
    return ResolventTable(basis, grid, params, rows, errs, method)


def _check_basis(table, basis):
    if not table.basis.same_as(basis):
        raise BasisMismatch("field and table use different bases")


def apply_resolvent(table, i, v):
    """``S(t_i) v``."""
    _check_basis(table, v.basis)
    if not 0 <= i < table.grid.size:
        raise IndexError(f"time index {i} outside 0..{table.grid.size - 1}")
    return Field(v.basis, table.table[:, i] * v.coeffs)


def cauchy_convolution(table, g, method="direct"):
    """``Q(g)(t_i) = int_0^{t_i} S(t_i - s) g(s) ds`` for a series ``g`` of shape ``(K+1, N)``.

    Each mode is convolved with its own row of the table using the
    piecewise-linear product rule of :func:`rslab.relaxation.conv_weights`.
    ``method="direct"`` is the O(N K^2) compiled loop and matches the scalar
    solver bit for bit; ``"fft"`` evaluates the same sums by FFT in
    O(N K log K) at the price of rounding at the 1e-16 * K level.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (table.grid.size, table.N):
        raise GridError(f"g has shape {g.shape}, expected {(table.grid.size, table.N)}")
    W, E, _ = table.weights()
    G = np.ascontiguousarray(g.T)
    if method == "direct":
        out = kernels.causal_conv(W, E, G)
    elif method == "fft":
        M = G.shape[1]
        out = np.zeros_like(G)
        if M > 1:
            out[:, 1:] = E[:, 1:] * G[:, :1] + fftconvolve(W, G[:, 1:], axes=1)[:, :M - 1]
    else:
        raise ValueError(f"unknown method {method!r}")
    return out.T


def truncation_report(table, i):
    """How much of ``S(t_i)`` the truncation at ``N`` modes can miss.

    Every discarded mode has ``lambda > lambda_N``, so its multiplier is at
    most ``omega(t_i, lambda_N)``; the claimed envelope is
    ``min(1, 1 / (lambda_N t_i))`` and the measured value is the table's
    last row.  ``info["tail_factor"]`` is the bound to multiply by the
    norm of the discarded coefficients.
    """
    t = table.grid.nodes[i]
    lamN = float(table.basis.lambdas[-1])
    claimed = 1.0 if t == 0 else min(1.0, 1.0 / (lamN * t))
    measured = float(table.table[-1, i])
    return BoundReport("spectral_tail", claimed, measured, tolerance=10 * float(table.est_error[-1]),
                       info={"t": float(t), "lambda_N": lamN, "tail_factor": measured})


def series_norms(series):
    """``||u(t_i)||`` for a ``(K+1, N)`` coefficient series."""
    return np.sqrt(np.einsum("kn,kn->k", series, series))
