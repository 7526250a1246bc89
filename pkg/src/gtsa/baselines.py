"""Classical PCA and RBF kernel PCA, the comparison baselines.

PCA eigendecomposes the population covariance directly when the ambient
dimension is small and switches to an implicit-operator solve for wide
data, so the covariance never has to be materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateKernelError, InvalidInputError
from .linalg import JACOBI_MAX_DIM, as_matrix, sym_eig, top_eig_operator
from .method import Embedding


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray


def pca_embed(X, p: int):
    """Center, eigendecompose the covariance, project onto the top-p
    components. Returns (PcaModel, Embedding)."""
    M = as_matrix(X, "X")
    n, D = M.shape
    if not 1 <= p <= min(n, D):
        raise InvalidInputError(f"p={p} must be in [1, min(n={n}, D={D})]")
    mean = M.mean(axis=0)
    Xc = M - mean
    if D <= JACOBI_MAX_DIM:
        cov = (Xc.T @ Xc) / n
        res = sym_eig(0.5 * (cov + cov.T), p)
    else:
        scale = float(np.sum(Xc * Xc)) / n  # trace of the covariance
        res = top_eig_operator(lambda v: Xc.T @ (Xc @ v) / n, D, p, scale)
    model = PcaModel(mean, res.eigenvectors, res.eigenvalues.copy())
    return model, Embedding(Xc @ res.eigenvectors, res.eigenvalues.copy())


def pca_transform(model: PcaModel, X) -> np.ndarray:
    return (as_matrix(X, "X") - model.mean) @ model.components


def pca_reconstruct(model: PcaModel, Y) -> np.ndarray:
    return np.asarray(Y) @ model.components.T + model.mean


def default_gamma(X) -> float:
    """1 / (D * var(X)) with the overall entry variance; overridable."""
    M = as_matrix(X, "X")
    v = float(np.var(M))
    if v <= 0.0:
        v = 1.0
    return 1.0 / (M.shape[1] * v)


def kernel_pca_rbf(X, p: int, gamma: float | None = None) -> Embedding:
    """exp(-gamma |x_i - x_j|^2) kernel, double-centered, embedded by its
    top-p eigenpairs scaled by sqrt(eigenvalue)."""
    M = as_matrix(X, "X")
    n = M.shape[0]
    if not 1 <= p < n:
        raise InvalidInputError(f"p={p} must be in [1, n-1={n - 1}]")
    if gamma is None:
        gamma = default_gamma(M)
    if gamma <= 0:
        raise InvalidInputError("gamma must be positive")
    sq = np.einsum("ij,ij->i", M, M)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (M @ M.T), 0.0)
    K = np.exp(-gamma * d2)
    ones = np.full((n, n), 1.0 / n)
    Kc = K - ones @ K - K @ ones + ones @ K @ ones
    Kc = 0.5 * (Kc + Kc.T)
    res = sym_eig(Kc, p)
    if np.all(res.eigenvalues <= 1e-12):
        raise DegenerateKernelError(
            "centered kernel has no usable spectrum (gamma too small?)")
    return Embedding(res.eigenvectors * np.sqrt(np.maximum(res.eigenvalues, 0.0)),
                     res.eigenvalues.copy())
