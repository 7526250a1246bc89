"""Dense symmetric eigendecomposition and covariance primitives.

Two solver paths: cyclic Jacobi rotations for matrices up to 64x64
(exact, simple, and the sizes local-covariance work actually meets), and
Lanczos with full reorthogonalization for larger problems where only the
top-k eigenpairs are needed. Both honor a fixed sign convention so the
decomposition is a pure function of the input bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, SymmetryError

JACOBI_MAX_DIM = 64

_LANCZOS_SEED = 20240901


@dataclass(frozen=True)
class SymEigResult:
    """Top-k eigenpairs, eigenvalues sorted descending by algebraic value.

    eigenvectors holds one unit-norm column per eigenvalue; in each column
    the entry of largest absolute value is positive (first such entry on
    ties), which pins the otherwise arbitrary sign.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite 2-D float64 array."""
    M = np.asarray(values, dtype=np.float64)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {M.shape}")
    if M.size == 0:
        raise InvalidInputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return M


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive.

    np.argmax returns the first maximizer, which implements the
    ties-by-lowest-index rule.
    """
    V = V.copy()
    for j in range(V.shape[1]):
        idx = int(np.argmax(np.abs(V[:, j])))
        if V[idx, j] < 0:
            V[:, j] = -V[:, j]
    return V


def _jacobi_full(M: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60):
    """Cyclic Jacobi: returns (eigenvalues, eigenvectors), unsorted."""
    A = M.copy()
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return np.array([A[0, 0]]), V
    fnorm = np.linalg.norm(A)
    if fnorm == 0.0:
        return np.zeros(n), V
    stop = tol * fnorm
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, np.sum(A * A) - np.sum(np.diag(A) ** 2)))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # Stable rotation angle (Golub & Van Loan sym.schur)
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def _tridiag_eig(alphas: np.ndarray, betas: np.ndarray):
    """Full eigendecomposition of the (possibly block-split) tridiagonal."""
    m = len(alphas)
    T = np.diag(alphas)
    for i, b in enumerate(betas):
        T[i, i + 1] = b
        T[i + 1, i] = b
    return _jacobi_full(T)


def _lanczos_topk(matvec: Callable[[np.ndarray], np.ndarray], dim: int,
                  k: int, scale_hint: float):
    """Top-k algebraic eigenpairs via Lanczos with full reorthogonalization.

    The Krylov basis grows until the k leading Ritz pairs have explicit
    residuals below tolerance; a (near-)breakdown restarts with a fresh
    random direction in the orthogonal complement, recorded as a zero
    off-diagonal so the tridiagonal stays valid. At basis size == dim the
    decomposition is exact up to roundoff, so termination is guaranteed.
    """
    rng = np.random.default_rng(_LANCZOS_SEED)
    tol = 1e-9 * (1.0 + scale_hint)

    basis: list[np.ndarray] = []
    alphas: list[float] = []
    betas: list[float] = []

    def fresh_vector() -> np.ndarray | None:
        for _ in range(50):
            v = rng.standard_normal(dim)
            for b in basis:
                v -= (b @ v) * b
            nrm = np.linalg.norm(v)
            if nrm > 1e-8:
                return v / nrm
        return None

    v = fresh_vector()
    assert v is not None
    basis.append(v)

    check_every = 8
    while True:
        w = matvec(basis[-1])
        alpha = float(basis[-1] @ w)
        alphas.append(alpha)
        # Full reorthogonalization, twice for safety
        for _ in range(2):
            for b in basis:
                w -= (b @ w) * b
        beta = float(np.linalg.norm(w))
        m = len(basis)

        finished_subspace = m >= dim
        breakdown = beta <= 1e-12 * (1.0 + scale_hint)

        if not finished_subspace:
            if breakdown:
                nxt = fresh_vector()
                if nxt is None:
                    finished_subspace = True
                else:
                    betas.append(0.0)
                    basis.append(nxt)
            else:
                betas.append(beta)
                basis.append(w / beta)

        if finished_subspace or m % check_every == 0 or breakdown:
            theta, Y = _tridiag_eig(np.array(alphas), np.array(betas[: m - 1]))
            order = np.argsort(-theta, kind="stable")[: min(k, m)]
            V = np.column_stack(basis[:m])
            ritz_vals = theta[order]
            ritz_vecs = V @ Y[:, order]
            if len(ritz_vals) >= k or finished_subspace:
                ok = True
                for j in range(min(k, len(ritz_vals))):
                    x = ritz_vecs[:, j]
                    x = x / np.linalg.norm(x)
                    r = np.linalg.norm(matvec(x) - ritz_vals[j] * x)
                    if r > tol and not finished_subspace:
                        ok = False
                        break
                if ok or finished_subspace:
                    # Re-orthonormalize the accepted Ritz vectors
                    out = np.empty((dim, min(k, len(ritz_vals))))
                    for j in range(out.shape[1]):
                        x = ritz_vecs[:, j].copy()
                        for jj in range(j):
                            x -= (out[:, jj] @ x) * out[:, jj]
                        out[:, j] = x / np.linalg.norm(x)
                    return ritz_vals[: out.shape[1]], out


def sym_eig(M, k: int) -> SymEigResult:
    """Top-k eigenpairs of a symmetric matrix, descending by eigenvalue.

    Raises SymmetryError if M deviates from its transpose beyond 1e-10
    relative tolerance, InvalidInputError for non-finite entries or k out
    of range.
    """
    A = as_matrix(M, "M")
    n, m = A.shape
    if n != m:
        raise InvalidInputError(f"M must be square, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))))
    if float(np.max(np.abs(A - A.T))) > 1e-10 * scale:
        raise SymmetryError("matrix is not symmetric within 1e-10 relative tolerance")
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} out of range for {n}x{n} matrix")
    A = 0.5 * (A + A.T)

    if n <= JACOBI_MAX_DIM:
        vals, vecs = _jacobi_full(A)
        order = np.argsort(-vals, kind="stable")[:k]
        return SymEigResult(vals[order].copy(), fix_signs(vecs[:, order]))

    fnorm = float(np.linalg.norm(A))
    vals, vecs = _lanczos_topk(A.dot, n, k, fnorm)
    return SymEigResult(vals, fix_signs(vecs))


def top_eig_operator(matvec: Callable[[np.ndarray], np.ndarray], dim: int,
                     k: int, scale_hint: float = 1.0) -> SymEigResult:
    """Top-k eigenpairs of an implicitly defined symmetric operator.

    Used where forming the matrix is wasteful (wide-data covariance).
    """
    if not 1 <= k <= dim:
        raise InvalidInputError(f"k={k} out of range for operator of dim {dim}")
    if dim <= JACOBI_MAX_DIM:
        cols = [matvec(e) for e in np.eye(dim)]
        return sym_eig(np.column_stack(cols), k)
    vals, vecs = _lanczos_topk(matvec, dim, k, scale_hint)
    return SymEigResult(vals, fix_signs(vecs))


def scatter_eig(rows: np.ndarray, divisor: float, d: int) -> SymEigResult:
    """Top-d eigenpairs of the scatter matrix rows^T rows / divisor.

    When there are fewer rows than ambient dimensions the problem is
    solved on the (rank-bounded) Gram side: eigenvectors of R R^T map to
    eigenvectors of R^T R via w = R^T u / sqrt(divisor * lambda). Falls
    back to the direct side when the Gram spectrum cannot supply d
    directions (rank-deficient request).
    """
    R = as_matrix(rows, "rows")
    m, D = R.shape
    if not 1 <= d <= D:
        raise InvalidInputError(f"d={d} out of range for dimension {D}")
    if m < D:
        G = (R @ R.T) / divisor
        res = sym_eig(G, m)
        lam_floor = 1e-12 * max(1.0, float(res.eigenvalues[0]))
        usable = int(np.sum(res.eigenvalues > lam_floor))
        if usable >= d:
            lam = res.eigenvalues[:d]
            W = R.T @ res.eigenvectors[:, :d]
            W /= np.sqrt(divisor * lam)
            return SymEigResult(lam.copy(), fix_signs(W))
    C = (R.T @ R) / divisor
    return sym_eig(0.5 * (C + C.T), d)


def covariance(points, center) -> np.ndarray:
    """(1/m) * sum_j (x_j - center)(x_j - center)^T, symmetric PSD."""
    P = as_matrix(points, "points")
    c = np.asarray(center, dtype=np.float64)
    if c.ndim != 1 or c.shape[0] != P.shape[1]:
        raise InvalidInputError(
            f"center has dimension {c.shape}, expected ({P.shape[1]},)")
    if not np.all(np.isfinite(c)):
        raise InvalidInputError("center contains non-finite entries")
    Q = P - c
    C = (Q.T @ Q) / P.shape[0]
    return 0.5 * (C + C.T)


def weighted_covariance_at(x_i, neighbors, weights) -> np.ndarray:
    """Weighted covariance centered at x_i (not at the neighborhood mean).

    (1/Z) * sum_j w_j (x_j - x_i)(x_j - x_i)^T with Z = sum_j w_j.
    Invariant under positive rescaling of the weight vector.
    """
    from .errors import DegenerateWeightsError

    P = as_matrix(neighbors, "neighbors")
    x = np.asarray(x_i, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != P.shape[1]:
        raise InvalidInputError(
            f"x_i has dimension {x.shape}, expected ({P.shape[1]},)")
    if w.shape != (P.shape[0],):
        raise InvalidInputError(
            f"got {w.shape[0] if w.ndim == 1 else w.shape} weights for "
            f"{P.shape[0]} neighbors")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be finite and nonnegative")
    Z = float(w.sum())
    if Z <= 0.0:
        raise DegenerateWeightsError("all neighbor weights are zero")
    Q = P - x
    C = (Q.T * w) @ Q / Z
    return 0.5 * (C + C.T)
