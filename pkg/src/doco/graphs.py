"""Communication graphs and doubly stochastic mixing matrices.

Nodes are indexed ``0..n-1`` in memory; the edge-list text format uses
1-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Graph",
    "WeightMatrix",
    "generate_random_connected_graph",
    "max_degree_weights",
    "validate_doubly_stochastic",
    "write_edge_list",
    "read_edge_list",
    "write_weights_csv",
]

MAX_GRAPH_RETRIES = 10_000


@dataclass(frozen=True)
class Graph:
    """Connected undirected graph without self-loops.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : tuple of (int, int)
        Undirected edges as pairs ``(i, j)`` with ``i < j``.
    """

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if u > v:
                raise ValueError(f"edge ({u},{v}) must be ordered (min,max)")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
        if not _is_connected(self.n, self.edges):
            raise ValueError("graph is not connected")

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n > 0 else 0

    def neighbors(self, i: int) -> list[int]:
        out = [v for u, v in self.edges if u == i]
        out += [u for u, v in self.edges if v == i]
        return sorted(out)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Square nonnegative mixing matrix; validity is checked separately."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("weight matrix must be square")
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _is_connected(n: int, edges) -> bool:
    """Breadth-first reachability from node 0."""
    if n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    count = 1
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == n


def generate_random_connected_graph(
    n: int, edge_prob: float, seed, max_retries: int = MAX_GRAPH_RETRIES
) -> Graph:
    """Sample a connected graph with independent edge inclusion.

    Each of the ``n(n-1)/2`` candidate edges is included independently with
    probability ``edge_prob``; the sample is rejected and redrawn until the
    result is connected.

    Raises
    ------
    RuntimeError
        If no connected sample is found within ``max_retries`` draws, which
        signals that ``edge_prob`` is too small for ``n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 < edge_prob <= 1.0):
        raise ValueError("edge_prob must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    for _ in range(max_retries):
        mask = rng.random(len(pairs)) < edge_prob
        edges = tuple(p for p, keep in zip(pairs, mask) if keep)
        if _is_connected(n, edges):
            return Graph(n=n, edges=edges)
    raise RuntimeError(
        f"no connected graph on {n} nodes found in {max_retries} draws; "
        f"edge_prob={edge_prob} is likely too small"
    )


def max_degree_weights(g: Graph) -> WeightMatrix:
    """Build the maximum-degree consensus weights of a connected graph.

    Off-diagonal entries are ``1/(1+d_max)`` on edges and zero elsewhere;
    the diagonal is ``1 - d_i/(1+d_max)``. The result is symmetric and
    doubly stochastic with strictly positive diagonal.
    """
    w = np.zeros((g.n, g.n))
    dmax = g.max_degree
    off = 1.0 / (1.0 + dmax)
    for u, v in g.edges:
        w[u, v] = off
        w[v, u] = off
    deg = g.degrees
    for i in range(g.n):
        w[i, i] = 1.0 - deg[i] / (1.0 + dmax)
    return WeightMatrix(entries=w)


def validate_doubly_stochastic(w: WeightMatrix, tol: float) -> bool:
    """True iff entries are >= -tol and all row/column sums are within tol of 1."""
    a = w.entries
    if np.any(a < -tol):
        return False
    rows = a.sum(axis=1)
    cols = a.sum(axis=0)
    return bool(np.all(np.abs(rows - 1.0) <= tol) and np.all(np.abs(cols - 1.0) <= tol))


def write_edge_list(g: Graph, path) -> None:
    """Write one ``i j`` pair per line, 1-based node indices."""
    lines = [f"{u + 1} {v + 1}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_edge_list(path, n: int | None = None) -> Graph:
    """Read a 1-based edge list; infers ``n`` from the largest index unless given."""
    edges = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        u_s, v_s = line.split()
        u, v = int(u_s) - 1, int(v_s) - 1
        edges.append((min(u, v), max(u, v)))
    if n is None:
        if not edges:
            raise ValueError("cannot infer node count from an empty edge list")
        n = 1 + max(max(u, v) for u, v in edges)
    return Graph(n=n, edges=tuple(sorted(edges)))


def write_weights_csv(w: WeightMatrix, path) -> None:
    """Write the matrix as ``n`` rows of comma-separated decimals."""
    with open(path, "w") as fh:
        for row in w.entries:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
