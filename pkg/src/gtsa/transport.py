"""Discrete optimal transport between small empirical measures.

Four routes with different cost/accuracy trade-offs: an exact
transportation-simplex LP for small supports, entropic scaling
(Sinkhorn, with a log-domain mode for small regularization), a sliced
approximation averaging 1-D distances over random directions, and the
1-D quantile-coupling closed form. Ground metric is Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (InvalidInputError, NumericalUnderflowError,
                     SupportTooLargeError)

EXACT_SUPPORT_CAP = 64


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point masses: sum of weights is 1, all nonnegative."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.support, dtype=np.float64)
        if S.ndim == 1:
            S = S[:, None]
        if S.ndim != 2 or S.shape[0] == 0:
            raise InvalidInputError(f"support must be (m, D), got {S.shape}")
        if not np.all(np.isfinite(S)):
            raise InvalidInputError("support contains non-finite entries")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (S.shape[0],):
            raise InvalidInputError(
                f"{w.size} weights for {S.shape[0]} atoms")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidInputError("weights must be finite and nonnegative")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise InvalidInputError(f"weights sum to {w.sum()}, expected 1")
        object.__setattr__(self, "support", S)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.support.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix with its transport objective sum(T * d^p)."""

    T: np.ndarray
    cost: float


@dataclass(frozen=True)
class SinkhornResult:
    distance: float
    plan: TransportPlan
    converged: bool
    iterations: int


def local_measure(X, neighborhood) -> DiscreteMeasure:
    """Uniform empirical measure on the rows X[neighborhood]."""
    idx = np.asarray(neighborhood, dtype=np.int64)
    if idx.size == 0:
        raise InvalidInputError("neighborhood is empty")
    pts = np.asarray(X, dtype=np.float64)[idx]
    return DiscreteMeasure(pts, np.full(idx.size, 1.0 / idx.size))


def _cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int) -> np.ndarray:
    if mu.dim != nu.dim:
        raise InvalidInputError(
            f"ambient dimensions differ: {mu.dim} vs {nu.dim}")
    diff = mu.support[:, None, :] - nu.support[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return d ** p


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    n, m = a.size, b.size
    T = np.zeros((n, m))
    basis: list[tuple[int, int]] = []
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while True:
        t = min(ra[i], rb[j])
        T[i, j] = t
        basis.append((i, j))
        ra[i] -= t
        rb[j] -= t
        if i == n - 1 and j == m - 1:
            break
        if ra[i] <= rb[j] and i < n - 1:
            i += 1
        else:
            j += 1
    return T, basis


def _tree_path(basis: list, n: int, start: int, goal: int):
    """Path between two nodes of the basis spanning tree (rows are nodes
    0..n-1, columns n..n+m-1). Returns the node sequence."""
    adj: dict[int, list[int]] = {}
    for (i, j) in basis:
        u, v = i, n + j
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    prev = {start: start}
    stack = [start]
    while stack:
        u = stack.pop()
        if u == goal:
            break
        for v in adj.get(u, ()):
            if v not in prev:
                prev[v] = u
                stack.append(v)
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def _transportation_simplex(a: np.ndarray, b: np.ndarray, C: np.ndarray,
                            max_pivots: int = 100000) -> np.ndarray:
    """Network simplex on the bipartite transportation polytope.

    Bland's rule (least row-major index, for entering and leaving arcs)
    guards against cycling on the degenerate bases that uniform marginals
    produce routinely.
    """
    n, m = C.shape
    T, basis = _northwest_corner(a, b)
    eps = 1e-11 * (1.0 + float(np.max(C)))
    for _ in range(max_pivots):
        u = np.full(n, np.nan)
        v = np.full(m, np.nan)
        u[basis[0][0]] = 0.0
        pending = list(basis)
        while pending:
            rest = []
            for (i, j) in pending:
                if not np.isnan(u[i]):
                    v[j] = C[i, j] - u[i]
                elif not np.isnan(v[j]):
                    u[i] = C[i, j] - v[j]
                else:
                    rest.append((i, j))
            if len(rest) == len(pending):
                raise RuntimeError("basis is not a spanning tree")
            pending = rest
        R = C - u[:, None] - v[None, :]
        for (i, j) in basis:
            R[i, j] = 0.0
        negative = np.flatnonzero(R.ravel() < -eps)
        if negative.size == 0:
            return T
        ie, je = divmod(int(negative[0]), m)
        nodes = _tree_path(basis, n, ie, n + je)
        cells = []
        for s in range(len(nodes) - 1):
            x, y = nodes[s], nodes[s + 1]
            if x < n:
                cells.append((x, y - n))
            else:
                cells.append((y, x - n))
        # entering cell is '+'; walking the path away from ie alternates -,+,...
        minus = cells[0::2]
        plus = [(ie, je)] + cells[1::2]
        theta = min(T[c] for c in minus)
        leaving = min(c for c in minus if T[c] <= theta)
        for c in plus:
            T[c] += theta
        for c in minus:
            T[c] -= theta
        T[leaving] = 0.0
        basis.remove(leaving)
        basis.append((ie, je))
    raise RuntimeError("transportation simplex failed to terminate")


def _drop_zero_atoms(mu: DiscreteMeasure):
    keep = np.flatnonzero(mu.weights > 0.0)
    return keep, DiscreteMeasure(mu.support[keep], mu.weights[keep])


def wasserstein_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2,
                      max_support: int = EXACT_SUPPORT_CAP):
    """Exact W_p between two discrete measures via network simplex.

    Returns (distance, TransportPlan); the plan is indexed by the original
    atoms (zero-weight atoms get zero rows/columns).
    """
    if p not in (1, 2):
        raise InvalidInputError(f"order p must be 1 or 2, got {p}")
    if mu.size > max_support or nu.size > max_support:
        raise SupportTooLargeError(
            f"supports {mu.size}x{nu.size} exceed the exact-solver cap "
            f"{max_support}; use sinkhorn or sliced_wasserstein")
    ka, mua = _drop_zero_atoms(mu)
    kb, nub = _drop_zero_atoms(nu)
    C = _cost_matrix(mua, nub, p)
    Tc = _transportation_simplex(mua.weights, nub.weights, C)
    cost = float(np.sum(Tc * C))
    T = np.zeros((mu.size, nu.size))
    T[np.ix_(ka, kb)] = Tc
    distance = max(0.0, cost) ** (1.0 / p)
    return distance, TransportPlan(T, cost)


def _logsumexp(arr: np.ndarray, axis: int) -> np.ndarray:
    hi = np.max(arr, axis=axis, keepdims=True)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    out = np.log(np.sum(np.exp(arr - hi), axis=axis)) + np.squeeze(hi, axis=axis)
    return out


def sinkhorn(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2,
             epsilon: float = 0.1, max_iters: int = 10000,
             tol: float = 1e-9, log_domain: bool | None = None) -> SinkhornResult:
    """Entropically regularized transport by alternating marginal scaling.

    The reported distance is (<T, d^p>)^(1/p) on the returned plan; the
    entropy term is excluded. Non-convergence returns the current plan
    with converged=False. Small epsilon relative to the median cost
    switches to the log-domain recursion automatically (or force it with
    log_domain=True); kernel underflow in the standard domain raises
    NumericalUnderflowError.
    """
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    ka, mua = _drop_zero_atoms(mu)
    kb, nub = _drop_zero_atoms(nu)
    M = _cost_matrix(mua, nub, p)
    a, b = mua.weights, nub.weights
    if log_domain is None:
        log_domain = epsilon < 0.05 * float(np.median(M))

    iterations = 0
    converged = False
    if log_domain:
        f = np.zeros(a.size)
        g = np.zeros(b.size)
        log_a = np.log(a)
        log_b = np.log(b)
        # warm start through a geometric epsilon schedule; the returned
        # plan is still a fixed point of the target-epsilon scaling
        schedule = []
        eps_hot = max(float(np.max(M)), epsilon)
        while eps_hot > epsilon * 1.5:
            schedule.append(eps_hot)
            eps_hot /= 2.0
        for eps_k in schedule:
            for _ in range(5):
                if iterations >= max_iters:
                    break
                iterations += 1
                f = eps_k * (log_a - _logsumexp((g[None, :] - M) / eps_k, axis=1))
                g = eps_k * (log_b - _logsumexp((f[:, None] - M) / eps_k, axis=0))
        Tc = np.exp((f[:, None] + g[None, :] - M) / epsilon)
        while iterations < max_iters:
            iterations += 1
            f = epsilon * (log_a - _logsumexp((g[None, :] - M) / epsilon, axis=1))
            g = epsilon * (log_b - _logsumexp((f[:, None] - M) / epsilon, axis=0))
            Tc = np.exp((f[:, None] + g[None, :] - M) / epsilon)
            err = max(float(np.max(np.abs(Tc.sum(axis=1) - a))),
                      float(np.max(np.abs(Tc.sum(axis=0) - b))))
            if err <= tol:
                converged = True
                break
    else:
        K = np.exp(-M / epsilon)
        if np.any(K.sum(axis=1) == 0.0) or np.any(K.sum(axis=0) == 0.0):
            raise NumericalUnderflowError(
                "scaling kernel underflowed; increase epsilon or use "
                "log_domain=True")
        v = np.ones(b.size)
        for iterations in range(1, max_iters + 1):
            Kv = K @ v
            if np.any(Kv == 0.0):
                raise NumericalUnderflowError(
                    "scaling kernel underflowed; increase epsilon or use "
                    "log_domain=True")
            u = a / Kv
            Ktu = K.T @ u
            if np.any(Ktu == 0.0):
                raise NumericalUnderflowError(
                    "scaling kernel underflowed; increase epsilon or use "
                    "log_domain=True")
            v = b / Ktu
            Tc = (u[:, None] * K) * v[None, :]
            err = max(float(np.max(np.abs(Tc.sum(axis=1) - a))),
                      float(np.max(np.abs(Tc.sum(axis=0) - b))))
            if err <= tol:
                converged = True
                break

    cost = float(np.sum(Tc * M))
    T = np.zeros((mu.size, nu.size))
    T[np.ix_(ka, kb)] = Tc
    distance = max(0.0, cost) ** (1.0 / p)
    return SinkhornResult(distance, TransportPlan(T, cost), converged,
                          iterations)


def wasserstein_1d(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2) -> float:
    """Closed-form W_p on the line: integrate the quantile gap.

    |F_mu^{-1} - F_nu^{-1}|^p over the merged quantile grid, p-th root.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise InvalidInputError("wasserstein_1d requires 1-D supports")
    xa = mu.support[:, 0]
    xb = nu.support[:, 0]
    oa = np.argsort(xa, kind="stable")
    ob = np.argsort(xb, kind="stable")
    xa, wa = xa[oa], mu.weights[oa]
    xb, wb = xb[ob], nu.weights[ob]
    ca = np.cumsum(wa)
    cb = np.cumsum(wb)
    grid = np.concatenate([[0.0], np.sort(np.concatenate([ca[:-1], cb[:-1]])), [1.0]])
    grid = np.clip(grid, 0.0, 1.0)
    seg = np.diff(grid)
    mid = 0.5 * (grid[:-1] + grid[1:])
    ia = np.minimum(np.searchsorted(ca, mid, side="left"), xa.size - 1)
    ib = np.minimum(np.searchsorted(cb, mid, side="left"), xb.size - 1)
    total = float(np.sum(np.abs(xa[ia] - xb[ib]) ** p * seg))
    return max(0.0, total) ** (1.0 / p)


def sliced_wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, p: int = 2,
                       num_projections: int = 50, seed: int = 0) -> float:
    """Mean 1-D W_p over seeded uniform random unit directions."""
    if num_projections < 1:
        raise InvalidInputError("num_projections must be >= 1")
    if mu.dim != nu.dim:
        raise InvalidInputError(
            f"ambient dimensions differ: {mu.dim} vs {nu.dim}")
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(num_projections):
        theta = rng.standard_normal(mu.dim)
        nrm = np.linalg.norm(theta)
        while nrm < 1e-12:
            theta = rng.standard_normal(mu.dim)
            nrm = np.linalg.norm(theta)
        theta /= nrm
        pm = DiscreteMeasure(mu.support @ theta, mu.weights)
        pn = DiscreteMeasure(nu.support @ theta, nu.weights)
        total += wasserstein_1d(pm, pn, p)
    return total / num_projections
