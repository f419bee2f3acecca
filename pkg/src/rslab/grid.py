"""Time grids on [0, T]."""
from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing nodes starting at 0.

    ``kind`` is ``"uniform"`` or ``"graded"``; graded grids record the
    grading exponent (``t_j = T (j/K)**exponent`` before any inserted
    checkpoints).
    """

    nodes: np.ndarray
    kind: str = "graded"
    exponent: float = 1.0
    _uniform_step: float = field(default=0.0, repr=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 1:
            raise GridError("grid needs at least one node")
        if nodes[0] != 0.0:
            raise GridError(f"grid must start at 0, got {nodes[0]!r}")
        if np.any(np.diff(nodes) <= 0):
            raise GridError("grid nodes must be strictly increasing")
        if self.kind not in ("uniform", "graded"):
            raise GridError(f"unknown grid kind {self.kind!r}")
        if self.kind == "graded" and self.exponent < 1:
            raise GridError("grading exponent must be >= 1")
        if self.kind == "uniform" and nodes.size > 1:
            h = (nodes[-1] - nodes[0]) / (nodes.size - 1)
            if np.max(np.abs(np.diff(nodes) - h)) > 1e-9 * h:
                raise GridError("nodes are not uniformly spaced")
            object.__setattr__(self, "_uniform_step", float(h))
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, T, h=None, *, n=None):
        """Uniform grid with step ``h`` (``T`` must be a multiple) or ``n`` cells."""
        if n is None:
            if h is None:
                raise GridError("give h or n")
            n = int(round(T / h))
            if n < 1 or abs(n * h - T) > 1e-9 * max(1.0, T):
                raise GridError(f"T={T} is not a multiple of h={h}")
        h = T / n
        nodes = h * np.arange(n + 1, dtype=float)
        return cls(nodes, "uniform")

    @classmethod
    def graded(cls, T, n, exponent=2.0, include=()):
        """``t_j = T (j/n)**exponent``, optionally with extra checkpoint nodes.

        Checkpoints closer than a quarter of the local step to an existing
        node replace that node, so no degenerate cells appear.
        """
        if exponent < 1:
            raise GridError("grading exponent must be >= 1")
        nodes = T * (np.arange(n + 1) / n) ** exponent
        for c in include:
            if not 0 < c <= T:
                raise GridError(f"checkpoint {c} outside (0, {T}]")
            k = int(np.searchsorted(nodes, c))  # nodes[k-1] < c <= nodes[k]
            if nodes[k] == c:
                continue
            step = nodes[k] - nodes[k - 1]
            if c - nodes[k - 1] < 0.25 * step and k - 1 > 0:
                nodes[k - 1] = c
            elif nodes[k] - c < 0.25 * step and k < nodes.size - 1:
                nodes[k] = c
            else:
                nodes = np.insert(nodes, k, c)
        return cls(nodes, "graded", float(exponent))

    @property
    def T(self):
        return float(self.nodes[-1])

    @property
    def size(self):
        return self.nodes.size

    @property
    def is_uniform(self):
        return self.kind == "uniform"

    @property
    def h(self):
        if not self.is_uniform:
            raise GridError("step size is only defined for uniform grids")
        return self._uniform_step

    def refine(self):
        """Grid with every cell halved (original nodes are the even nodes)."""
        t = self.nodes
        out = np.empty(2 * t.size - 1)
        out[0::2] = t
        out[1::2] = 0.5 * (t[:-1] + t[1:])
        if self.is_uniform:
            return TimeGrid.uniform(self.T, n=2 * (t.size - 1)) if t.size > 1 else self
        return TimeGrid(out, "graded", self.exponent)

    def index_of(self, t, rtol=1e-12):
        """Index of the node equal to ``t`` (within ``rtol * T``)."""
        k = int(np.argmin(np.abs(self.nodes - t)))
        if abs(self.nodes[k] - t) > rtol * max(1.0, self.T):
            raise GridError(f"{t} is not a grid node")
        return k

    def same_as(self, other):
        return self.nodes.shape == other.nodes.shape and bool(np.all(self.nodes == other.nodes))


def default_grid(T, n=800):
    """Graded grid used when the caller does not supply one.

    Exponent 3 resolves the ``t**(1-alpha)`` layer at the origin for every
    ``alpha`` in (0, 1) at the step counts used here.
    """
    return TimeGrid.graded(T, n, 3.0)
