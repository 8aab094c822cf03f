"""Finite weighted graphs and the discrete calculus on them.

Functions on the graph are plain 1-d float arrays indexed by the dense vertex
id ``0..n-1``. Every operator comes in a vectorised form: pass ``x=None`` to
get the value at every vertex, or a vertex id to get one scalar.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError, SizeMismatchError


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite weighted graph stored as CSR adjacency (half-edges in both directions).

    ``indptr``/``indices``/``weights`` list, for every vertex x, the neighbours y
    and weights w_xy. Symmetry is *not* enforced here so that malformed input can
    still be inspected by :func:`validate_graph`; use :meth:`from_edges` to get
    a symmetric graph by construction.
    """

    measure: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    ids: tuple[str, ...] | None = None
    _id_index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "measure", _frozen(self.measure, np.float64))
        object.__setattr__(self, "indptr", _frozen(self.indptr, np.int64))
        object.__setattr__(self, "indices", _frozen(self.indices, np.int64))
        object.__setattr__(self, "weights", _frozen(self.weights, np.float64))
        n = self.measure.shape[0]
        if n < 1:
            raise InvalidParameterError("a graph needs at least one vertex")
        if self.indptr.shape != (n + 1,) or self.indptr[0] != 0:
            raise InvalidParameterError("indptr must have length n+1 and start at 0")
        if self.indices.shape != self.weights.shape or self.indptr[-1] != self.indices.size:
            raise InvalidParameterError("indices/weights inconsistent with indptr")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= n):
            raise InvalidParameterError("neighbour id out of range")
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != n or len(set(ids)) != n:
                raise InvalidParameterError("external ids must be unique, one per vertex")
            object.__setattr__(self, "ids", ids)
            object.__setattr__(self, "_id_index", {k: i for i, k in enumerate(ids)})

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, measure: Sequence[float], edges: Iterable[tuple[int, int, float]],
                   ids: Sequence[str] | None = None) -> "WeightedGraph":
        """Build a symmetric graph from undirected edges ``(x, y, w)``."""
        n = len(measure)
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for x, y, w in edges:
            adj[int(x)].append((int(y), float(w)))
            adj[int(y)].append((int(x), float(w)))
        return cls.from_adjacency(measure, adj, ids=ids)

    @classmethod
    def from_adjacency(cls, measure: Sequence[float],
                       adjacency: Sequence[Sequence[tuple[int, float]]],
                       ids: Sequence[str] | None = None) -> "WeightedGraph":
        """Build from per-vertex neighbour lists, taken verbatim (may be asymmetric)."""
        if len(adjacency) != len(measure):
            raise InvalidParameterError("need one neighbour list per vertex")
        indptr = [0]
        indices: list[int] = []
        weights: list[float] = []
        for nbrs in adjacency:
            for y, w in sorted(nbrs, key=lambda t: t[0]):
                indices.append(int(y))
                weights.append(float(w))
            indptr.append(len(indices))
        return cls(np.asarray(measure, dtype=float), np.asarray(indptr),
                   np.asarray(indices, dtype=np.int64), np.asarray(weights, dtype=float), ids)

    # -- basic structure --------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.measure.shape[0])

    @cached_property
    def src(self) -> np.ndarray:
        """Source vertex of every stored half-edge (parallel to ``indices``)."""
        s = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        s.setflags(write=False)
        return s

    @cached_property
    def mu0(self) -> float:
        return float(self.measure.min())

    @cached_property
    def degree_bound(self) -> float:
        """C = max_x sum_{y~x} w_xy (0 for an edgeless graph)."""
        if self.indices.size == 0:
            return 0.0
        return float(np.bincount(self.src, weights=self.weights, minlength=self.n).max())

    def neighbors(self, x: int) -> list[tuple[int, float]]:
        lo, hi = self.indptr[x], self.indptr[x + 1]
        return list(zip(self.indices[lo:hi].tolist(), self.weights[lo:hi].tolist()))

    def index_of(self, external_id: str) -> int:
        if self.ids is None:
            return int(external_id)
        return self._id_index[str(external_id)]

    def external_ids(self) -> tuple[str, ...]:
        return self.ids if self.ids is not None else tuple(str(i) for i in range(self.n))

    def edges(self) -> list[tuple[int, int, float]]:
        """Undirected edges x < y (weights taken from the x -> y half-edge)."""
        keep = self.src < self.indices
        return list(zip(self.src[keep].tolist(), self.indices[keep].tolist(),
                        self.weights[keep].tolist()))

    def bfs_distances(self, x: int) -> np.ndarray:
        """Hop distance d(x, .) by breadth-first search; -1 marks unreachable."""
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[x] = 0
        queue = deque([x])
        while queue:
            v = queue.popleft()
            for y in self.indices[self.indptr[v]:self.indptr[v + 1]]:
                if dist[y] < 0:
                    dist[y] = dist[v] + 1
                    queue.append(int(y))
        return dist

    def distance(self, x: int, y: int) -> int:
        return int(self.bfs_distances(x)[y])


@dataclass
class ValidationReport:
    violations: list[str]
    mu0: float
    C: float
    connected: bool

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"violations": list(self.violations), "mu0": self.mu0, "C": self.C,
                "connected": self.connected, "ok": self.ok}


def validate_graph(g: WeightedGraph) -> ValidationReport:
    """Check the standing graph hypotheses; never raises."""
    problems: list[str] = []
    mu = g.measure
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
        bad = np.flatnonzero(~(np.isfinite(mu) & (mu > 0)))
        problems.append(f"measure must be positive and finite (vertices {bad.tolist()[:10]})")
    w = g.weights
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        problems.append("edge weights must be positive and finite")
    loops = np.flatnonzero(g.src == g.indices)
    if loops.size:
        problems.append(f"self-loops at vertices {g.src[loops].tolist()[:10]}")

    half = {}
    for x, y, wxy in zip(g.src.tolist(), g.indices.tolist(), w.tolist()):
        if (x, y) in half:
            problems.append(f"duplicate edge ({x}, {y})")
        half[(x, y)] = wxy
    asym = [(x, y) for (x, y), wxy in half.items() if half.get((y, x)) != wxy]
    if asym:
        problems.append(f"asymmetric weights on {len(asym)} half-edges, e.g. {asym[0]}")

    connected = bool(np.all(g.bfs_distances(0) >= 0))
    if not connected:
        problems.append("graph is not connected")
    return ValidationReport(problems, float(mu.min()), g.degree_bound, connected)


# -- discrete calculus ------------------------------------------------------

def as_function(g: WeightedGraph, psi) -> np.ndarray:
    arr = np.asarray(psi, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != g.n:
        raise SizeMismatchError(f"expected {g.n} vertex values, got shape {arr.shape}")
    return arr


def _at(values: np.ndarray, x):
    return values if x is None else float(values[x])


def edge_differences(g: WeightedGraph, psi: np.ndarray) -> np.ndarray:
    """psi(y) - psi(x) for every half-edge x -> y."""
    return psi[g.indices] - psi[g.src]


def _vertex_sum(g: WeightedGraph, per_edge: np.ndarray) -> np.ndarray:
    return np.bincount(g.src, weights=per_edge, minlength=g.n)


def gamma(g: WeightedGraph, psi1, psi2, x: int | None = None):
    """Gamma(psi1, psi2)(x) = 1/(2 mu(x)) sum_y w_xy dpsi1 dpsi2."""
    d1 = edge_differences(g, as_function(g, psi1))
    d2 = edge_differences(g, as_function(g, psi2))
    # w * (d1 * d2) keeps the result bit-symmetric in (psi1, psi2)
    vals = _vertex_sum(g, g.weights * (d1 * d2)) / (2.0 * g.measure)
    return _at(vals, x)


def grad_norm(g: WeightedGraph, psi, x: int | None = None):
    """|grad psi|(x) = sqrt(Gamma(psi)(x))."""
    d = edge_differences(g, as_function(g, psi))
    vals = np.sqrt(_vertex_sum(g, g.weights * (d * d)) / (2.0 * g.measure))
    return _at(vals, x)


def directional_derivative(g: WeightedGraph, psi, x: int, y: int) -> float:
    psi = as_function(g, psi)
    for nb, w in g.neighbors(x):
        if nb == y:
            return (psi[x] - psi[y]) * math.sqrt(w / g.measure[x]) / math.sqrt(2.0)
    return 0.0


def gradient_vector(g: WeightedGraph, psi, x: int) -> dict[int, float]:
    """Non-zero entries of the gradient vector at x, keyed by neighbour."""
    return {y: directional_derivative(g, psi, x, y) for y, _ in g.neighbors(x)}


def laplacian(g: WeightedGraph, psi, x: int | None = None):
    """Linear graph Laplacian (1/mu(x)) sum_y w_xy (psi(y) - psi(x))."""
    d = edge_differences(g, as_function(g, psi))
    vals = _vertex_sum(g, g.weights * d) / g.measure
    return _at(vals, x)


def grad_power(gn: np.ndarray, s: float) -> np.ndarray:
    """|grad psi|^(s-2) with the convention 0^(negative) := 0."""
    if s == 2.0:
        return np.ones_like(gn)
    out = np.zeros_like(gn)
    pos = gn > 0
    out[pos] = gn[pos] ** (s - 2.0)
    return out


def s_laplacian(g: WeightedGraph, psi, s: float, x: int | None = None):
    """Nonlinear s-Laplacian; reduces to :func:`laplacian` for s = 2."""
    if not s > 1:
        raise InvalidParameterError(f"s-Laplacian needs s > 1, got {s}")
    psi = as_function(g, psi)
    P = grad_power(grad_norm(g, psi), s)
    d = edge_differences(g, psi)
    vals = _vertex_sum(g, (P[g.indices] + P[g.src]) * g.weights * d) / (2.0 * g.measure)
    return _at(vals, x)


def integrate(g: WeightedGraph, psi) -> float:
    """sum_x mu(x) psi(x), exactly rounded (math.fsum)."""
    psi = as_function(g, psi)
    return math.fsum((g.measure * psi).tolist())


def integration_by_parts_defect(g: WeightedGraph, psi, phi, s: float) -> float:
    """int (Delta_s psi) phi + int |grad psi|^(s-2) Gamma(psi, phi); zero in exact arithmetic."""
    psi = as_function(g, psi)
    phi = as_function(g, phi)
    lhs = g.measure * s_laplacian(g, psi, s) * phi
    rhs = g.measure * grad_power(grad_norm(g, psi), s) * gamma(g, psi, phi)
    return math.fsum(lhs.tolist() + rhs.tolist())
