"""Graph and instance generators used across the test suite."""

from __future__ import annotations

import networkx as nx
import numpy as np

from pqgraph import CoefficientFields, Exponents, ProblemInstance, WeightedGraph

GRID_EXPS = Exponents(p=3.0, q=2.0, gamma=0.5, alpha=3.0)


def from_nx(G: nx.Graph, mu=None, weight=None, rng=None) -> WeightedGraph:
    nodes = list(G.nodes())
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    if rng is not None:
        mu = rng.uniform(0.5, 2.0, n) if mu is None else mu
    mu = np.ones(n) if mu is None else np.broadcast_to(np.asarray(mu, float), (n,))
    edges = []
    for x, y in G.edges():
        w = weight if weight is not None else (rng.uniform(0.5, 2.0) if rng is not None else 1.0)
        edges.append((index[x], index[y], w))
    return WeightedGraph.from_edges(mu, edges)


def path(n: int, mu=1.0, w=1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(np.full(n, float(mu)), [(i, i + 1, w) for i in range(n - 1)])


def cycle(n: int, mu=1.0, w=1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(np.full(n, float(mu)), [(i, (i + 1) % n, w) for i in range(n)])


def grid(rows: int, cols: int, mu=1.0, w=1.0) -> WeightedGraph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1, w))
            if r + 1 < rows:
                edges.append((i, i + cols, w))
    return WeightedGraph.from_edges(np.full(rows * cols, float(mu)), edges)


def star(leaves: int, mu=1.0, w=1.0) -> WeightedGraph:
    return WeightedGraph.from_edges(np.full(leaves + 1, float(mu)),
                                    [(0, i, w) for i in range(1, leaves + 1)])


def random_regular(n: int, d: int, seed: int) -> WeightedGraph:
    """Connected d-regular graph with seeded measure and weights in [0.5, 2]."""
    rng = np.random.default_rng(seed)
    for attempt in range(100):
        G = nx.random_regular_graph(d, n, seed=seed * 1000 + attempt)
        if nx.is_connected(G):
            return from_nx(G, rng=rng)
    raise RuntimeError("no connected regular graph found")


def random_connected(n: int, rng: np.random.Generator, extra: float = 1.5) -> WeightedGraph:
    """Random spanning tree plus about extra*n chords, random measure and weights."""
    edges = {}
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges[(j, i)] = rng.uniform(0.1, 3.0)
    for _ in range(int(extra * n) if n > 2 else 0):
        x, y = sorted(rng.choice(n, 2, replace=False).tolist())
        edges.setdefault((x, y), rng.uniform(0.1, 3.0))
    mu = rng.uniform(0.2, 3.0, n)
    return WeightedGraph.from_edges(mu, [(x, y, w) for (x, y), w in edges.items()])


def single_vertex(mu=1.0) -> WeightedGraph:
    return WeightedGraph.from_edges([mu], [])


def two_vertex() -> WeightedGraph:
    """mu = 1 on both vertices, one edge of weight 2."""
    return WeightedGraph.from_edges([1.0, 1.0], [(0, 1, 2.0)], ids=["x", "y"])


def grid_instance(lam: float = 0.0, f=0.1) -> ProblemInstance:
    g = grid(10, 10)
    return ProblemInstance(g, CoefficientFields.constant(g.n, a=1.0, b=1.0, f=f, g=1.0),
                           GRID_EXPS, lam)


def single_instance(lam: float = 0.0, a=1.0, b=1.0, f=0.1, gg=1.0, exps=GRID_EXPS,
                    mu=1.0) -> ProblemInstance:
    g = single_vertex(mu)
    return ProblemInstance(g, CoefficientFields.constant(1, a=a, b=b, f=f, g=gg), exps, lam)


def random_instance(rng: np.random.Generator, n: int, exps: Exponents, lam: float = 0.0
                    ) -> ProblemInstance:
    g = random_connected(n, rng)
    fields = CoefficientFields(rng.uniform(0.3, 2.0, n), rng.uniform(0.3, 2.0, n),
                               rng.uniform(0.05, 1.0, n), rng.uniform(0.0, 2.0, n) + 0.01)
    return ProblemInstance(g, fields, exps, lam)


def random_exponents(rng: np.random.Generator) -> Exponents:
    gam = rng.uniform(0.05, 0.95)
    p = rng.uniform(1.1, 4.0)
    q = rng.uniform(1.05, p)
    alpha = p - 1 + rng.uniform(0.1, 3.0)
    return Exponents(p=p, q=q, gamma=gam, alpha=alpha)
