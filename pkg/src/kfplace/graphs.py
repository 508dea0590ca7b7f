"""Directed-graph view of a dynamics matrix and structural checks.

The graph of a square matrix A has an edge j -> i whenever A[i][j] is
structurally nonzero; all distances are unweighted shortest directed-path
lengths computed by BFS. Unreachable nodes are marked with ``None``, never
with a large sentinel value.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

#: Entries with magnitude at or below this are treated as structural zeros.
DEFAULT_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class DirectedGraph:
    """Adjacency-list digraph on nodes 0..node_count-1."""

    node_count: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.node_count < 0:
            raise ValueError("node_count must be nonnegative")
        if len(self.adjacency) != self.node_count:
            raise ValueError("adjacency length must equal node_count")
        for out in self.adjacency:
            for v in out:
                if not 0 <= v < self.node_count:
                    raise ValueError(f"neighbor index {v} out of range")

    def edge_count(self) -> int:
        return sum(len(out) for out in self.adjacency)

    def reversed(self) -> "DirectedGraph":
        rev: list[list[int]] = [[] for _ in range(self.node_count)]
        for u, out in enumerate(self.adjacency):
            for v in out:
                rev[v].append(u)
        return DirectedGraph(self.node_count, tuple(tuple(r) for r in rev))


@dataclass(frozen=True)
class DistanceMap:
    """Shortest directed-path lengths from ``source``; None marks unreachable."""

    source: int
    dist: tuple[int | None, ...]

    def reachable(self) -> bool:
        """True if every node is reachable from the source."""
        return all(d is not None for d in self.dist)

    def reachable_nodes(self) -> tuple[int, ...]:
        return tuple(j for j, d in enumerate(self.dist) if d is not None)

    def max_distance(self) -> int:
        """Largest finite distance (0 for a single reachable source)."""
        return max(d for d in self.dist if d is not None)


@dataclass(frozen=True)
class DistanceCheck:
    """Outcome of the matrix-power distance check; truthy iff it passed."""

    ok: bool
    unreachable: tuple[int, ...]
    cancelled: tuple[int, ...]

    def __bool__(self) -> bool:
        return self.ok


def graph_from_matrix(A, zero_tol: float = DEFAULT_ZERO_TOL) -> DirectedGraph:
    """Build the directed graph of A: edge j -> i iff |A[i][j]| > zero_tol."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"dynamics matrix must be square, got shape {A.shape}")
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    n = A.shape[0]
    adjacency = tuple(
        tuple(i for i in range(n) if abs(A[i, j]) > zero_tol) for j in range(n)
    )
    return DirectedGraph(n, adjacency)


def bfs_distances(g: DirectedGraph, source: int) -> DistanceMap:
    """Exact shortest directed-path lengths from ``source`` in O(n + |E|)."""
    if not 0 <= source < g.node_count:
        raise IndexError(f"source {source} out of range for {g.node_count} nodes")
    dist: list[int | None] = [None] * g.node_count
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] is None:
                dist[v] = dist[u] + 1
                queue.append(v)
    return DistanceMap(source, tuple(dist))


def is_strongly_connected(g: DirectedGraph) -> bool:
    """True iff every node reaches every other node.

    One forward BFS and one BFS on the reversed graph from node 0.
    """
    if g.node_count == 0:
        return True
    if not bfs_distances(g, 0).reachable():
        return False
    return bfs_distances(g.reversed(), 0).reachable()


def check_distance_assumption(
    A,
    source: int,
    dmap: DistanceMap | None = None,
    zero_tol: float = DEFAULT_ZERO_TOL,
) -> DistanceCheck:
    """Verify the structural distance condition used by the closed forms.

    Requires (a) every node reachable from ``source`` and (b) for each node j
    at distance m, |(A^m)[j][source]| > zero_tol, i.e. path weights do not
    cancel. Only the source column of A^m is propagated, so the check costs
    O(n^2 * l_max).
    """
    A = np.asarray(A, dtype=float)
    if dmap is None:
        dmap = bfs_distances(graph_from_matrix(A, zero_tol), source)
    n = A.shape[0]
    unreachable = tuple(j for j in range(n) if dmap.dist[j] is None)
    cancelled: list[int] = []
    if not unreachable:
        l_max = dmap.max_distance()
        col = np.zeros(n)
        col[source] = 1.0
        for m in range(1, l_max + 1):
            col = A @ col
            for j in range(n):
                if dmap.dist[j] == m and abs(col[j]) <= zero_tol:
                    cancelled.append(j)
    ok = not unreachable and not cancelled
    return DistanceCheck(ok, unreachable, tuple(cancelled))
