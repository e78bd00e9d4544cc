"""Normalized Laplacian, smallest eigenpairs, embedding, k-means, clustering.

The solver works on the flipped operator 2I - L so the wanted pairs are
the largest ones; Lanczos with full reorthogonalization, deterministic
for a fixed seed, with a dense fallback for small operators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .graph import DynamicGraph, Partition

DENSE_FALLBACK_N = 64
EIGEN_TOL = 1e-8
GAP_FLOOR = 1e-12


class EigensolverError(RuntimeError):
    """Raised when the iteration budget is exhausted before convergence."""

    def __init__(self, msg: str, best_residual: float):
        super().__init__(f"{msg} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class LaplacianOperator:
    """Implicit x -> x - D^{-1/2} A D^{-1/2} x for a degree-positive graph.

    A self-loop contributes twice to both its diagonal adjacency entry
    and the degree, keeping row sums equal to degrees.
    """

    def __init__(self, g: DynamicGraph):
        n = g.n
        deg = np.asarray(g.deg, dtype=float)
        bad = np.nonzero(deg <= 0.0)[0]
        if bad.size:
            raise ValueError(f"isolated vertex {int(bad[0])} (degree 0) has no normalized Laplacian row")
        rows, cols, vals = [], [], []
        for u, v, w in g.edges():
            if u == v:
                rows.append(u)
                cols.append(u)
                vals.append(2.0 * w)
            else:
                rows.append(u)
                cols.append(v)
                vals.append(w)
                rows.append(v)
                cols.append(u)
                vals.append(w)
        adjacency = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
        dinv_sqrt = 1.0 / np.sqrt(deg)
        self.n = n
        self.deg = deg
        self._norm_adj = scipy.sparse.diags(dinv_sqrt) @ adjacency @ scipy.sparse.diags(dinv_sqrt)
        self._norm_adj = self._norm_adj.tocsr()

    def apply(self, x: np.ndarray) -> np.ndarray:
        """L x."""
        return x - self._norm_adj @ x

    def apply_flipped(self, x: np.ndarray) -> np.ndarray:
        """(2I - L) x; same eigenvectors, eigenvalues mirrored about 1."""
        return x + self._norm_adj @ x

    def dense(self) -> np.ndarray:
        return np.eye(self.n) - self._norm_adj.toarray()


@dataclass
class EigenPairs:
    """Nondecreasing eigenvalues with orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray
    residual_tol: float

    @property
    def count(self) -> int:
        return len(self.values)


def build_laplacian(g: DynamicGraph) -> LaplacianOperator:
    return LaplacianOperator(g)


def _lanczos_flipped(
    op: LaplacianOperator, count: int, tol: float, seed: int, max_iter: int
) -> tuple[np.ndarray, np.ndarray, float]:
    """Largest `count` pairs of 2I - L by Lanczos with full reorthogonalization.

    Returns (mu, vectors, worst_residual) with mu descending.  Residuals
    are the standard beta * |last Ritz component| bounds.
    """
    n = op.n
    rng = np.random.default_rng(seed)
    max_m = min(n, max_iter)
    Q = np.empty((max_m, n))
    alphas: list[float] = []
    betas: list[float] = []
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    best_residual = np.inf

    for j in range(max_m):
        Q[j] = q
        z = op.apply_flipped(q)
        a = float(q @ z)
        alphas.append(a)
        z -= a * q
        if j > 0 and betas[j - 1] != 0.0:
            z -= betas[j - 1] * Q[j - 1]
        # full reorthogonalization, twice for numerical safety
        basis = Q[: j + 1]
        z -= basis.T @ (basis @ z)
        z -= basis.T @ (basis @ z)
        b = float(np.linalg.norm(z))
        m = j + 1
        if b <= 1e-12:
            # invariant subspace exhausted: deflate and continue fresh
            betas.append(0.0)
            if m >= n:
                q = np.zeros(n)
            else:
                w = rng.standard_normal(n)
                w -= basis.T @ (basis @ w)
                nw = np.linalg.norm(w)
                if nw <= 1e-12:
                    betas.pop()
                    break
                q = w / nw
        else:
            betas.append(b)
            q = z / b

        if m >= count and (m % 10 == 0 or m == max_m or m >= n or betas[-1] == 0.0):
            theta, S = scipy.linalg.eigh_tridiagonal(np.array(alphas), np.array(betas[:-1]))
            order = np.argsort(theta)[::-1][:count]
            mu = theta[order]
            lam = 2.0 - mu
            resid = abs(betas[-1]) * np.abs(S[-1, order])
            best_residual = min(best_residual, float(resid.max()))
            if np.all(resid <= tol * np.maximum(1.0, np.abs(lam))):
                vecs = Q[:m].T @ S[:, order]
                # re-normalize: reorthogonalized basis is orthonormal to ~1e-14
                vecs /= np.linalg.norm(vecs, axis=0)
                return mu, vecs, float(resid.max())

    raise EigensolverError(
        f"Lanczos did not reach tol={tol:g} for {count} pairs within {max_m} iterations",
        best_residual,
    )


def smallest_eigenpairs(
    L: LaplacianOperator,
    count: int,
    tol: float = EIGEN_TOL,
    seed: int = 0,
    dense_threshold: int = DENSE_FALLBACK_N,
) -> EigenPairs:
    """The `count` smallest eigenpairs of L, deterministic for a fixed seed."""
    n = L.n
    if not 1 <= count <= n:
        raise ValueError(f"need 1 <= count <= n={n}, got {count}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n <= dense_threshold:
        vals, vecs = np.linalg.eigh(L.dense())
        return EigenPairs(vals[:count].copy(), vecs[:, :count].copy(), tol)
    budget = int(10 * count * np.sqrt(n) + 300)
    mu, vecs, resid = _lanczos_flipped(L, count, tol, seed, budget)
    lam = 2.0 - mu  # mu descending -> lam ascending
    return EigenPairs(lam, vecs, max(resid, tol))


def embed(g: DynamicGraph, pairs: EigenPairs, k: int) -> np.ndarray:
    """Per-vertex spectral coordinates: row u is (f_1(u),...,f_k(u)) / sqrt(deg u)."""
    if pairs.count < k:
        raise ValueError(f"need {k} eigenvectors, have {pairs.count}")
    deg = np.asarray(g.deg, dtype=float)
    if np.any(deg <= 0.0):
        bad = int(np.nonzero(deg <= 0.0)[0][0])
        raise ValueError(f"vertex {bad} has degree 0; cannot embed")
    return pairs.vectors[:, :k] / np.sqrt(deg)[:, None]


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = len(points)
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(m))
    centers[0] = points[first]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen center
            centers[i:] = points[first]
            break
        probs = d2 / total
        idx = int(rng.choice(m, p=probs))
        centers[i] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    rel_tol: float = 1e-7,
) -> np.ndarray:
    """Lloyd iterations from a k-means++ start; returns per-point labels."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    m = len(points)
    if k > m:
        raise ValueError(f"k={k} exceeds number of points {m}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(points, k, rng)
    prev_obj = np.inf
    labels = np.zeros(m, dtype=int)
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        obj = float(d2[np.arange(m), labels].sum())
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
            else:
                # deterministic empty-cluster fix: grab the worst-fit point
                far = int(np.argmax(d2[np.arange(m), labels]))
                centers[c] = points[far]
                labels[far] = c
        if prev_obj - obj <= rel_tol * max(obj, 1e-300):
            break
        prev_obj = obj
    return labels


def spectral_clustering(
    g: DynamicGraph,
    k: int,
    seed: int = 0,
    tol: float = EIGEN_TOL,
    dense_threshold: int = DENSE_FALLBACK_N,
) -> Partition:
    """Embed with the k smallest Laplacian eigenvectors, k-means, order by volume."""
    if k < 1:
        raise ValueError("k must be >= 1")
    op = build_laplacian(g)
    pairs = smallest_eigenpairs(op, k, tol=tol, seed=seed, dense_threshold=dense_threshold)
    points = embed(g, pairs, k)
    labels = kmeans(points, k, seed=seed)
    return Partition.from_labels(labels.tolist()).order_by_volume(g)


def eigen_gap_select(
    L: LaplacianOperator,
    k_max: int,
    tol: float = EIGEN_TOL,
    seed: int = 0,
    dense_threshold: int = DENSE_FALLBACK_N,
) -> int:
    """Cluster count by the largest ratio lambda_{l+1}/lambda_l over 2 <= l <= k_max.

    Ties break toward smaller l; the denominator is floored to dodge
    numerically-zero eigenvalues.
    """
    n = L.n
    if not 2 <= k_max <= n - 1:
        raise ValueError(f"need 2 <= k_max <= n-1 = {n - 1}, got {k_max}")
    pairs = smallest_eigenpairs(L, k_max + 1, tol=tol, seed=seed, dense_threshold=dense_threshold)
    lam = pairs.values
    best_l = 2
    best_ratio = -np.inf
    for ell in range(2, k_max + 1):
        ratio = lam[ell] / max(lam[ell - 1], GAP_FLOOR)
        if ratio > best_ratio:
            best_ratio = ratio
            best_l = ell
    return best_l
