"""The geodesic tangent-space aggregation embedding.

Stage 1 estimates a tangent basis per point from a weighted covariance
centered at the point itself, with neighbor weights taken either from
curvature magnitudes (exp(-|K_j|/tau), suppressing neighbors in bent
regions) or from transport distances between neighborhood measures.
Stage 2 couples geodesic proximity 1/(1 + d_G) with the subspace
affinity |Tr(U_i^T U_j)| into a symmetric alignment matrix. Stage 3
embeds with its top-p eigenvectors.

The temperature tau can be fixed or selected by a semi-supervised sweep:
embed a stratified 20% labeled split for each candidate, score Ward
clusterings by (ARI + FM + VM)/3, keep the argmax, then embed the
remaining 80% with it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import (adjusted_rand_index, fowlkes_mallows, v_measure,
                         ward_cluster)
from .curvature import CurvatureField, mean_curvatures
from .data import LabeledDataset, stratified_indices, take_rows
from .errors import (DegenerateNeighborhoodError, InsufficientSubsetError,
                     InvalidInputError, MissingLabelsError)
from .graph import KnnGraph, build_knn, ensure_connected, geodesic_all_pairs
from .linalg import as_matrix, scatter_eig, sym_eig
from .parallel import ordered_map
from .transport import (local_measure, sinkhorn, sliced_wasserstein,
                        wasserstein_exact)

TAU_CANDIDATES = (0.5, 1.0, 5.0, 10.0, 100.0)


@dataclass(frozen=True)
class GtsaConfig:
    k: int
    p: int
    d_intrinsic: int | None = None
    tau: float | str = "auto"
    mode: str = "curvature"
    tau_candidates: tuple = TAU_CANDIDATES
    labeled_fraction: float = 0.2
    seed: int = 0
    ot_backend: str = "exact"
    wasserstein_weight_form: str = "kernel"
    sparsity: str = "auto"
    dense_limit: int = 2000
    scale_by_eigenvalues: bool = False
    include_self: bool = False
    sinkhorn_epsilon: float = 0.1
    sliced_projections: int = 50

    def __post_init__(self):
        if self.k < 1 or self.p < 1:
            raise InvalidInputError("k and p must be positive")
        if self.mode not in ("curvature", "wasserstein"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.ot_backend not in ("exact", "sinkhorn", "sliced"):
            raise InvalidInputError(f"unknown ot_backend {self.ot_backend!r}")
        if self.wasserstein_weight_form not in ("kernel", "literal"):
            raise InvalidInputError(
                f"unknown weight form {self.wasserstein_weight_form!r}")
        if self.sparsity not in ("auto", "dense", "edges"):
            raise InvalidInputError(f"unknown sparsity {self.sparsity!r}")
        if isinstance(self.tau, str):
            if self.tau != "auto":
                raise InvalidInputError("tau must be positive or 'auto'")
        elif self.tau <= 0:
            raise InvalidInputError("tau must be positive")
        if not 0.0 < self.labeled_fraction < 1.0:
            raise InvalidInputError("labeled_fraction must be in (0, 1)")
        if not self.tau_candidates:
            raise InvalidInputError("tau_candidates must be non-empty")
        object.__setattr__(self, "tau_candidates",
                           tuple(sorted(float(t) for t in self.tau_candidates)))

    @property
    def intrinsic_dim(self) -> int:
        return self.p if self.d_intrinsic is None else self.d_intrinsic


@dataclass(frozen=True)
class LocalBasisSet:
    """One D x p orthonormal tangent frame per point."""

    bases: tuple

    def __len__(self):
        return len(self.bases)

    def __getitem__(self, i):
        return self.bases[i]

    def stacked(self) -> np.ndarray:
        """(n, D*p) row-per-point flattening; row dot products are the
        Frobenius inner products between frames."""
        return np.vstack([U.ravel() for U in self.bases])


@dataclass(frozen=True)
class AlignmentMatrix:
    A: np.ndarray
    sparsity: str  # "dense" | "edges"


@dataclass(frozen=True)
class Embedding:
    """Top-p eigenvectors of the alignment matrix, one coordinate column
    per eigenvector, eigenvalues kept alongside."""

    Y: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class FitResult:
    embedding: Embedding
    used_indices: np.ndarray
    tau: float | None
    tau_report: tuple | None
    bridge_count: int
    stage_seconds: dict = field(default_factory=dict)


def curvature_weights(K: CurvatureField | np.ndarray, neighbor_idx,
                      tau: float) -> np.ndarray:
    """exp(-|K_j| / tau) per neighbor j: the weight a point gives a
    neighbor depends on the neighbor's curvature."""
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    k = K.K if isinstance(K, CurvatureField) else np.asarray(K)
    return np.exp(-np.abs(k[np.asarray(neighbor_idx, dtype=np.int64)]) / tau)


def _edge_distance(X, g: KnnGraph, i: int, j: int, cfg: GtsaConfig) -> float:
    mu = local_measure(X, g.directed[i])
    nu = local_measure(X, g.directed[j])
    if cfg.ot_backend == "exact":
        dist, _ = wasserstein_exact(mu, nu, p=2)
        return dist
    if cfg.ot_backend == "sinkhorn":
        return sinkhorn(mu, nu, p=2, epsilon=cfg.sinkhorn_epsilon).distance
    return sliced_wasserstein(mu, nu, p=2,
                              num_projections=cfg.sliced_projections,
                              seed=cfg.seed)


def wasserstein_weights(X, g: KnnGraph, cfg: GtsaConfig) -> dict:
    """Per-edge weights from transport distances between the uniform
    measures on the two endpoint neighborhoods.

    Form "literal" keeps the raw distance W_2(mu_i, mu_j); form "kernel"
    maps it to a similarity exp(-W / median W) so structurally alike
    neighborhoods get the higher weight.
    """
    M = as_matrix(X, "X")
    pairs = [(i, j) for i, j, _ in g.edges()]
    dists = ordered_map(lambda e: _edge_distance(M, g, e[0], e[1], cfg), pairs)
    if cfg.wasserstein_weight_form == "literal":
        return dict(zip(pairs, dists))
    sigma = float(np.median(dists)) if dists else 0.0
    if sigma <= 0.0:
        return {e: 1.0 for e in pairs}
    return {e: float(np.exp(-d / sigma)) for e, d in zip(pairs, dists)}


def local_tangent_bases(X, neighbor_sets, weight_sets, p: int) -> LocalBasisSet:
    """Stage 1: top-p eigenvectors of the weighted covariance centered at
    each point (not at the neighborhood mean)."""
    M = as_matrix(X, "X")
    if p > M.shape[1]:
        raise InvalidInputError(f"p={p} exceeds ambient dimension {M.shape[1]}")

    def basis(i: int) -> np.ndarray:
        idx = np.asarray(neighbor_sets[i], dtype=np.int64)
        w = np.asarray(weight_sets[i], dtype=np.float64)
        Z = float(w.sum())
        if Z <= 0.0 or not np.all(np.isfinite(w)):
            raise DegenerateNeighborhoodError(
                f"point {i}: neighborhood weights sum to {Z}")
        Q = (M[idx] - M[i]) * np.sqrt(w / Z)[:, None]
        if not np.any(Q):
            # all displacements zero (duplicate points): any frame works
            return np.eye(M.shape[1], p)
        return scatter_eig(Q, 1.0, p).eigenvectors

    return LocalBasisSet(tuple(ordered_map(basis, range(M.shape[0]))))


def subspace_affinity(U_i, U_j) -> float:
    """|Tr(U_i^T U_j)|: overlap of two orthonormal frames, in [0, p]."""
    A = as_matrix(U_i, "U_i")
    B = as_matrix(U_j, "U_j")
    if A.shape != B.shape:
        raise InvalidInputError(f"frame shapes differ: {A.shape} vs {B.shape}")
    return abs(float(np.sum(A * B)))


def _pair_products(F: np.ndarray, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
    """Frobenius products F[i].F[j] for a pair list, chunked.

    Both alignment modes go through here so the same float path produces
    bit-identical values for shared pairs.
    """
    out = np.empty(ii.size)
    step = 65536
    for s in range(0, ii.size, step):
        a = F[ii[s:s + step]]
        b = F[jj[s:s + step]]
        out[s:s + step] = np.einsum("ij,ij->i", a, b)
    return out


def alignment_matrix(bases: LocalBasisSet, d_G: np.ndarray | None,
                     sparsity: str = "dense",
                     graph: KnnGraph | None = None) -> AlignmentMatrix:
    """Stage 2: A_ij = |<U_i, U_j>_F| / (1 + d_G(i, j)).

    Dense mode fills every pair from the geodesic matrix. Edges-only mode
    fills graph edges plus the diagonal and leaves the rest zero; on an
    edge the geodesic equals the edge length (edge lengths are Euclidean,
    so no path can undercut the direct hop). Entries are computed once per
    unordered pair and mirrored, so A is exactly symmetric, and both modes
    share one codepath so they agree exactly where both are defined.
    """
    F = bases.stacked()
    n = F.shape[0]
    idx = np.arange(n)
    diag = np.abs(_pair_products(F, idx, idx))
    A = np.zeros((n, n))
    if sparsity == "dense":
        if d_G is None:
            raise InvalidInputError("dense mode needs the geodesic matrix")
        ii, jj = np.triu_indices(n, 1)
        vals = np.abs(_pair_products(F, ii, jj)) / (1.0 + d_G[ii, jj])
        A[ii, jj] = vals
        A[jj, ii] = vals
    elif sparsity == "edges":
        if graph is None:
            raise InvalidInputError("edges-only mode needs the graph")
        edges = list(graph.edges())
        if edges:
            ii = np.array([e[0] for e in edges], dtype=np.int64)
            jj = np.array([e[1] for e in edges], dtype=np.int64)
            lengths = np.array([e[2] for e in edges])
            vals = np.abs(_pair_products(F, ii, jj)) / (1.0 + lengths)
            A[ii, jj] = vals
            A[jj, ii] = vals
    else:
        raise InvalidInputError(f"unknown sparsity {sparsity!r}")
    np.fill_diagonal(A, diag)
    return AlignmentMatrix(A, sparsity)


def spectral_embedding(A: AlignmentMatrix | np.ndarray, p: int,
                       scale_by_eigenvalues: bool = False) -> Embedding:
    """Stage 3: coordinates from the top-p eigenvectors of A (optionally
    scaled by sqrt of the eigenvalues, clamped at zero)."""
    M = A.A if isinstance(A, AlignmentMatrix) else A
    res = sym_eig(M, p)
    Y = res.eigenvectors
    if scale_by_eigenvalues:
        Y = Y * np.sqrt(np.maximum(res.eigenvalues, 0.0))
    return Embedding(Y, res.eigenvalues.copy())


def _embed_fixed_tau(X: np.ndarray, cfg: GtsaConfig, tau: float | None,
                     p: int, timings: dict | None = None):
    """Pipeline with tau already resolved; returns (Embedding, graph)."""
    n = X.shape[0]
    if cfg.k >= n:
        raise InvalidInputError(f"k={cfg.k} must be < n={n}")
    t0 = time.perf_counter()
    g = ensure_connected(build_knn(X, cfg.k), X)
    t1 = time.perf_counter()

    if cfg.mode == "curvature":
        K = mean_curvatures(X, cfg.k, min(cfg.intrinsic_dim, X.shape[1]),
                            include_self=cfg.include_self)
        weight_sets = [curvature_weights(K, g.directed[i], tau)
                       for i in range(n)]
    else:
        wmap = wasserstein_weights(X, g, cfg)
        weight_sets = [
            np.array([wmap[(min(i, int(j)), max(i, int(j)))]
                      for j in g.directed[i]])
            for i in range(n)
        ]
    t2 = time.perf_counter()

    bases = local_tangent_bases(X, g.directed, weight_sets, p)
    t3 = time.perf_counter()

    sparsity = cfg.sparsity
    if sparsity == "auto":
        sparsity = "dense" if n <= cfg.dense_limit else "edges"
    if sparsity == "dense":
        d_G = geodesic_all_pairs(g)
        A = alignment_matrix(bases, d_G, "dense")
    else:
        A = alignment_matrix(bases, None, "edges", graph=g)
    t4 = time.perf_counter()

    emb = spectral_embedding(A, p, cfg.scale_by_eigenvalues)
    t5 = time.perf_counter()

    if timings is not None:
        timings["graph"] = timings.get("graph", 0.0) + (t1 - t0)
        timings["weights"] = timings.get("weights", 0.0) + (t2 - t1)
        timings["bases"] = timings.get("bases", 0.0) + (t3 - t2)
        timings["alignment"] = timings.get("alignment", 0.0) + (t4 - t3)
        timings["spectral"] = timings.get("spectral", 0.0) + (t5 - t4)
    return emb, g


def select_tau(ds: LabeledDataset, cfg: GtsaConfig):
    """Sweep the candidate taus on a stratified labeled split and keep the
    argmax of mean(ARI, FM, VM) after Ward clustering; ties go to the
    smaller tau. Returns (tau_star, per-candidate report)."""
    if ds.labels is None:
        raise MissingLabelsError("tau selection requires labels")
    idx = stratified_indices(ds.labels, cfg.labeled_fraction, cfg.seed)
    if idx.size < cfg.k + 1:
        raise InsufficientSubsetError(
            f"labeled split has {idx.size} points; needs at least k+1="
            f"{cfg.k + 1}")
    sub = take_rows(ds, idx)
    p_sel = min(2, sub.dim)
    best_tau = None
    best_score = -np.inf
    report = []
    for tau in cfg.tau_candidates:
        emb, _ = _embed_fixed_tau(sub.X, cfg, tau, p_sel)
        part = ward_cluster(emb.Y, int(sub.class_count))
        ari = adjusted_rand_index(part.assignments, sub.labels)
        fm = fowlkes_mallows(part.assignments, sub.labels)
        vm = v_measure(part.assignments, sub.labels)
        score = (ari + fm + vm) / 3.0
        report.append({"tau": tau, "ari": ari, "fm": fm, "vm": vm,
                       "mean": score})
        if score > best_score:
            best_score = score
            best_tau = tau
    return best_tau, tuple(report)


def fit(ds: LabeledDataset, cfg: GtsaConfig) -> FitResult:
    """Full pipeline. With tau='auto' in curvature mode the labeled split
    picks tau and the embedding covers the remaining rows; used_indices
    maps embedding rows back to dataset rows."""
    X = ds.X
    if cfg.p > ds.dim:
        raise InvalidInputError(f"p={cfg.p} exceeds dimension {ds.dim}")
    timings: dict = {}
    tau: float | None = None
    tau_report = None
    used = np.arange(ds.n)
    data = ds

    if cfg.mode == "curvature":
        if cfg.tau == "auto":
            t0 = time.perf_counter()
            tau, tau_report = select_tau(ds, cfg)
            timings["tau_selection"] = time.perf_counter() - t0
            labeled = stratified_indices(ds.labels, cfg.labeled_fraction,
                                         cfg.seed)
            used = np.setdiff1d(np.arange(ds.n), labeled)
            if used.size < cfg.k + 1:
                raise InsufficientSubsetError(
                    f"unlabeled remainder has {used.size} points; needs "
                    f"at least k+1={cfg.k + 1}")
            data = take_rows(ds, used)
        else:
            tau = float(cfg.tau)

    emb, g = _embed_fixed_tau(data.X, cfg, tau, cfg.p, timings)
    return FitResult(emb, used, tau, tau_report, g.bridge_count, timings)


def save_embedding_csv(emb: Embedding, path, indices=None, labels=None) -> None:
    """`index,y1,...,yp[,label]` rows; floats via repr so reads round-trip."""
    Y = emb.Y
    idx = np.arange(Y.shape[0]) if indices is None else np.asarray(indices)
    with open(path, "w", encoding="utf-8") as fh:
        cols = ",".join(f"y{j + 1}" for j in range(Y.shape[1]))
        fh.write(f"index,{cols}" + (",label\n" if labels is not None else "\n"))
        for r in range(Y.shape[0]):
            row = ",".join(repr(float(v)) for v in Y[r])
            if labels is not None:
                fh.write(f"{int(idx[r])},{row},{int(labels[r])}\n")
            else:
                fh.write(f"{int(idx[r])},{row}\n")


def save_alignment_matrix(A: AlignmentMatrix, path) -> None:
    """Debug dump: plain text matrix, one row per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {A.sparsity} alignment matrix {A.A.shape[0]}x{A.A.shape[1]}\n")
        for row in A.A:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
