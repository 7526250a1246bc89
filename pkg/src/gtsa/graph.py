"""k-nearest-neighbor graph construction, connectivity repair and
all-pairs geodesic distances (binary-heap Dijkstra from every source).

Neighbor search is brute force: at desk scale determinism matters more
than asymptotics, and exact distances make the tie rule (lower index
wins) trivially reproducible.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidKError, UnreachableNodeError
from .linalg import as_matrix
from .parallel import ordered_map


@dataclass(frozen=True)
class KnnGraph:
    """Union-symmetrized kNN graph with Euclidean edge lengths.

    directed[i] holds the raw k nearest neighbors of node i (ascending
    distance, ties by index); neighbors[i]/lengths[i] hold the
    symmetrized adjacency sorted by neighbor index. bridges lists edges
    added by connectivity repair, in insertion order.
    """

    n: int
    k: int
    neighbors: tuple
    lengths: tuple
    directed: tuple
    bridges: tuple = field(default_factory=tuple)

    @property
    def bridge_count(self) -> int:
        return len(self.bridges)

    def edges(self):
        """Yield (i, j, length) once per undirected edge, i < j."""
        for i in range(self.n):
            nbr = self.neighbors[i]
            ln = self.lengths[i]
            for j, d in zip(nbr, ln):
                if i < j:
                    yield i, int(j), float(d)

    def edge_count(self) -> int:
        return sum(len(a) for a in self.neighbors) // 2


def knn_sets(X, k: int):
    """Directed k-nearest-neighbor index and distance lists.

    Exact per-row distances; ordering by (distance, index) so equidistant
    neighbors resolve to the lower index.
    """
    M = as_matrix(X, "X")
    n = M.shape[0]
    if not 1 <= k < n:
        raise InvalidKError(f"k={k} must satisfy 1 <= k < n={n}")
    idx_lists = []
    dist_lists = []
    order_tiebreak = np.arange(n)
    for i in range(n):
        diff = M - M[i]
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        d[i] = np.inf
        order = np.lexsort((order_tiebreak, d))[:k]
        idx_lists.append(order.astype(np.int64))
        dist_lists.append(d[order])
    return idx_lists, dist_lists


def build_knn(X, k: int) -> KnnGraph:
    """Link every node to its k nearest neighbors, then union-symmetrize."""
    M = as_matrix(X, "X")
    n = M.shape[0]
    idx_lists, dist_lists = knn_sets(M, k)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for i in range(n):
        for j, d in zip(idx_lists[i], dist_lists[i]):
            j = int(j)
            adj[i][j] = float(d)
            adj[j][i] = float(d)
    neighbors = []
    lengths = []
    for i in range(n):
        keys = np.array(sorted(adj[i]), dtype=np.int64)
        neighbors.append(keys)
        lengths.append(np.array([adj[i][int(j)] for j in keys]))
    return KnnGraph(n, k, tuple(neighbors), tuple(lengths), tuple(idx_lists))


def _components(g: KnnGraph) -> np.ndarray:
    comp = np.full(g.n, -1, dtype=np.int64)
    c = 0
    for s in range(g.n):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = c
        while stack:
            u = stack.pop()
            for v in g.neighbors[u]:
                v = int(v)
                if comp[v] < 0:
                    comp[v] = c
                    stack.append(v)
        c += 1
    return comp


def ensure_connected(g: KnnGraph, X) -> KnnGraph:
    """Repeatedly add the globally shortest Euclidean edge between two
    components until one component remains. Returns the repaired graph;
    added edges are recorded in .bridges."""
    M = as_matrix(X, "X")
    comp = _components(g)
    if comp.max() == 0:
        return g
    adj = [dict(zip((int(j) for j in nbr), ln))
           for nbr, ln in zip(g.neighbors, g.lengths)]
    bridges = list(g.bridges)
    while comp.max() > 0:
        best = (np.inf, -1, -1)
        for i in range(g.n):
            diff = M - M[i]
            d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            d[comp == comp[i]] = np.inf
            j = int(np.argmin(d))
            if d[j] < best[0]:
                best = (float(d[j]), i, j)
        _, i, j = best
        adj[i][j] = best[0]
        adj[j][i] = best[0]
        bridges.append((min(i, j), max(i, j)))
        comp[comp == comp[j]] = comp[i]
    neighbors = []
    lengths = []
    for i in range(g.n):
        keys = np.array(sorted(adj[i]), dtype=np.int64)
        neighbors.append(keys)
        lengths.append(np.array([adj[i][int(j)] for j in keys]))
    return KnnGraph(g.n, g.k, tuple(neighbors), tuple(lengths), g.directed,
                    tuple(bridges))


def _dijkstra(g: KnnGraph, source: int) -> np.ndarray:
    dist = np.full(g.n, np.inf)
    dist[source] = 0.0
    done = np.zeros(g.n, dtype=bool)
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        nbr = g.neighbors[u]
        ln = g.lengths[u]
        for t in range(len(nbr)):
            v = int(nbr[t])
            nd = d + ln[t]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def geodesic_all_pairs(g: KnnGraph) -> np.ndarray:
    """Shortest-path length between every node pair.

    Raises UnreachableNodeError on a disconnected graph (run
    ensure_connected first). The result is exactly symmetric: entries
    above the diagonal come from the lower-index source and are mirrored.
    """
    rows = ordered_map(lambda s: _dijkstra(g, s), range(g.n))
    D = np.vstack(rows)
    if not np.all(np.isfinite(D)):
        raise UnreachableNodeError(
            "graph is disconnected; run ensure_connected before geodesics")
    U = np.triu(D, 1)
    return U + U.T


def write_edge_list(g: KnnGraph, path) -> None:
    """Debug export: one `i j length` line per undirected edge."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, d in g.edges():
            fh.write(f"{i} {j} {repr(d)}\n")
