"""Per-point mean-curvature estimation from local second-order structure.

For each point: take its k nearest neighbors, form the neighborhood-mean
centered covariance, read a local frame off its top eigenvectors, build
quadratic/interaction features of the frame, and contract everything into
a scalar: K_i = Tr(-H_i H_i^T C_i). Large |K_i| flags regions where a
linear local model is unreliable.

Note the centering: here the covariance is centered at the neighborhood
mean. The tangent-basis stage of the embedding pipeline centers at the
point itself; the two must not be conflated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .graph import knn_sets
from .linalg import as_matrix, covariance, scatter_eig, sym_eig
from .parallel import ordered_map


@dataclass(frozen=True)
class CurvatureField:
    """Scalar curvature estimate per point; scales as s^2 under x -> s*x."""

    K: np.ndarray
    intrinsic_dim: int


@dataclass(frozen=True)
class ShapeEstimate:
    """Full per-point diagnostic: covariance C, frame U (all D eigenvectors,
    descending), feature matrix H, second-fundamental estimate II = H H^T
    and shape-operator estimate S = -II C."""

    C: np.ndarray
    U: np.ndarray
    H: np.ndarray
    II: np.ndarray
    S: np.ndarray


def quadratic_features(U, d: int) -> np.ndarray:
    """Columns: squares of the top-d frame vectors, then pairwise
    elementwise products w_j * w_l for j < l in lexicographic order.
    Shape D x (d(d+1)/2)."""
    F = as_matrix(U, "U")
    D = F.shape[0]
    if d > D or d > F.shape[1] or d < 1:
        raise InvalidInputError(
            f"d={d} invalid for frame of shape {F.shape}")
    cols = [F[:, j] * F[:, j] for j in range(d)]
    for j in range(d):
        for l in range(j + 1, d):
            cols.append(F[:, j] * F[:, l])
    return np.column_stack(cols)


def shape_operator(C, H):
    """II = H H^T and S = -II C (the local metric inverse is approximated
    by the covariance itself, so no matrix inversion appears)."""
    Cm = as_matrix(C, "C")
    Hm = as_matrix(H, "H")
    D = Cm.shape[0]
    if Cm.shape != (D, D) or Hm.shape[0] != D:
        raise InvalidInputError(
            f"incompatible shapes C{Cm.shape} H{Hm.shape}")
    II = Hm @ Hm.T
    S = -II @ Cm
    return II, S


def _curvature_at(X: np.ndarray, idx: np.ndarray, d: int,
                  include_self: int | None) -> float:
    P = X[idx]
    if include_self is not None:
        P = np.vstack([P, X[include_self]])
    Q = P - P.mean(axis=0)
    if not np.any(Q):
        return 0.0
    frame = scatter_eig(Q, float(P.shape[0]), d).eigenvectors
    H = quadratic_features(frame, d)
    # Tr(S) = -Tr(H H^T C) = -|Q H|_F^2 / m, so C never has to be formed
    G = Q @ H
    return float(-np.sum(G * G) / P.shape[0])


def mean_curvatures(X, k: int, d: int, include_self: bool = False) -> CurvatureField:
    """Scalar mean-curvature estimate at every point.

    k neighbors per point (the point itself excluded unless include_self),
    d local frame directions feeding the quadratic feature basis.
    """
    M = as_matrix(X, "X")
    n, D = M.shape
    if d > D or d < 1:
        raise InvalidInputError(f"d={d} must be in [1, {D}]")
    idx_lists, _ = knn_sets(M, k)
    K = ordered_map(
        lambda i: _curvature_at(M, idx_lists[i], d,
                                i if include_self else None),
        range(n))
    return CurvatureField(np.array(K, dtype=np.float64), d)


def local_shape_estimate(X, k: int, d: int, i: int,
                         include_self: bool = False) -> ShapeEstimate:
    """Full shape-operator diagnostic at one point (all D frame vectors)."""
    M = as_matrix(X, "X")
    idx_lists, _ = knn_sets(M, k)
    P = M[idx_lists[i]]
    if include_self:
        P = np.vstack([P, M[i]])
    C = covariance(P, P.mean(axis=0))
    U = sym_eig(C, C.shape[0]).eigenvectors
    H = quadratic_features(U, d)
    II, S = shape_operator(C, H)
    return ShapeEstimate(C, U, H, II, S)


def save_curvature_csv(field: CurvatureField, path) -> None:
    """Per-point export: `index,K` lines under a header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,K\n")
        for i, v in enumerate(field.K):
            fh.write(f"{i},{repr(float(v))}\n")
