"""Ward agglomerative clustering and external partition-agreement indices
(adjusted Rand, Fowlkes-Mallows, V-measure).

Ward runs on the Lance-Williams recurrence over merge-cost values, with a
fully pinned tie rule (lexicographically smallest cluster-id pair; a
merged cluster keeps the smaller id) so merge sequences are reproducible
and checkable against a naive recomputation oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .linalg import as_matrix


@dataclass(frozen=True)
class Partition:
    """Cluster assignment per point, labels renumbered 0..c-1 by first
    occurrence so every label in range is used."""

    assignments: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        if a.ndim != 1 or a.size == 0:
            raise InvalidInputError("assignments must be a non-empty vector")
        object.__setattr__(self, "assignments", a)

    @property
    def n_clusters(self) -> int:
        return int(np.unique(self.assignments).size)


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    n: int


def _encode(labels) -> np.ndarray:
    """Renumber arbitrary labels to 0..c-1 by first appearance."""
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError("labels must be a non-empty vector")
    seen: dict = {}
    out = np.empty(arr.size, dtype=np.int64)
    for i, v in enumerate(arr.tolist()):
        if v not in seen:
            seen[v] = len(seen)
        out[i] = seen[v]
    return out


def contingency(a, b) -> ContingencyTable:
    x = _encode(a)
    y = _encode(b)
    if x.size != y.size:
        raise InvalidInputError(
            f"partition lengths differ: {x.size} vs {y.size}")
    ca, cb = int(x.max()) + 1, int(y.max()) + 1
    counts = np.zeros((ca, cb), dtype=np.int64)
    np.add.at(counts, (x, y), 1)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0),
                            x.size)


def _comb2(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v * (v - 1.0) / 2.0


def adjusted_rand_index(a, b) -> float:
    """Pair-counting agreement, chance-corrected; 0 when the correction
    denominator degenerates (e.g. one partition trivial both ways)."""
    t = contingency(a, b)
    sum_ij = float(np.sum(_comb2(t.counts)))
    sum_a = float(np.sum(_comb2(t.row_marginals)))
    sum_b = float(np.sum(_comb2(t.col_marginals)))
    total = float(_comb2(t.n))
    if total == 0.0:
        return 0.0
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        return 0.0
    return (sum_ij - expected) / (maximum - expected)


def fowlkes_mallows(a, b) -> float:
    """Geometric mean of pairwise precision and recall; 0 on an empty
    pair set (all-singleton partition on either side)."""
    t = contingency(a, b)
    tp = float(np.sum(_comb2(t.counts)))
    pa = float(np.sum(_comb2(t.row_marginals)))
    pb = float(np.sum(_comb2(t.col_marginals)))
    if pa == 0.0 or pb == 0.0:
        return 0.0
    return tp / np.sqrt(pa * pb)


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def v_measure(a, b) -> float:
    """Harmonic mean of homogeneity and completeness from natural-log
    conditional entropies; the log base cancels."""
    t = contingency(a, b)
    n = float(t.n)
    pa = t.row_marginals / n
    pb = t.col_marginals / n
    h_a = _entropy(pa)
    h_b = _entropy(pb)
    joint = t.counts / n
    nz = joint > 0
    # H(A|B) = -sum p(a,b) log(p(a,b)/p(b))
    pb_full = np.broadcast_to(pb[None, :], joint.shape)
    h_a_given_b = float(-np.sum(joint[nz] * np.log(joint[nz] / pb_full[nz])))
    pa_full = np.broadcast_to(pa[:, None], joint.shape)
    h_b_given_a = float(-np.sum(joint[nz] * np.log(joint[nz] / pa_full[nz])))
    hom = 1.0 if h_a == 0.0 else 1.0 - h_a_given_b / h_a
    com = 1.0 if h_b == 0.0 else 1.0 - h_b_given_a / h_b
    if hom + com == 0.0:
        return 0.0
    return 2.0 * hom * com / (hom + com)


def ward_merge_sequence(Y, n_clusters: int):
    """Run Ward merging down to n_clusters.

    Returns (assignments, merges) where merges lists the (kept_id,
    absorbed_id) pairs in order. Merge cost between clusters is
    |a||b|/(|a|+|b|) * |mu_a - mu_b|^2, maintained by the Lance-Williams
    update.
    """
    P = as_matrix(Y, "Y")
    n = P.shape[0]
    if not 1 <= n_clusters <= n:
        raise InvalidInputError(
            f"n_clusters={n_clusters} out of range for n={n}")
    member = np.arange(n)
    if n_clusters == n:
        return member.copy(), []

    diff = P[:, None, :] - P[None, :, :]
    D = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(D, np.inf)
    sizes = np.ones(n)
    alive = np.ones(n, dtype=bool)
    iu = np.triu_indices(n, 1)
    merges: list[tuple[int, int]] = []
    for _ in range(n - n_clusters):
        flat = D[iu]
        t = int(np.argmin(flat))
        a, b = int(iu[0][t]), int(iu[1][t])
        merges.append((a, b))
        dab = D[a, b]
        others = np.flatnonzero(alive)
        others = others[(others != a) & (others != b)]
        if others.size:
            sa, sb, sc = sizes[a], sizes[b], sizes[others]
            new = ((sa + sc) * D[a, others] + (sb + sc) * D[b, others]
                   - sc * dab) / (sa + sb + sc)
            D[a, others] = new
            D[others, a] = new
        sizes[a] += sizes[b]
        alive[b] = False
        D[b, :] = np.inf
        D[:, b] = np.inf
        member[member == b] = a
    return member, merges


def ward_cluster(Y, n_clusters: int) -> Partition:
    """Bottom-up Ward clustering cut at n_clusters, labels renumbered by
    first occurrence."""
    member, _ = ward_merge_sequence(Y, n_clusters)
    return Partition(_encode(member))


def metrics_report(predicted, truth) -> dict:
    """The JSON-able score bundle used across the evaluation harness."""
    pred = np.asarray(predicted)
    return {
        "ari": adjusted_rand_index(predicted, truth),
        "fm": fowlkes_mallows(predicted, truth),
        "vm": v_measure(predicted, truth),
        "n_clusters_found": int(np.unique(pred).size),
    }
