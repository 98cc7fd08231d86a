"""Symmetric sparse eigensolvers and the static spectral embeddings.

The solver is plain power iteration with implicit deflation against already
converged pairs, shifted so the algebraically largest eigenvalue dominates in
magnitude. The smallest eigenpairs of a PSD matrix come from the same routine
applied to lambda_max I - M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .graphs import ConvergenceError, spectral_radius
from .seeding import derived_rng


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues with matching unit eigenvectors as matrix columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return len(self.values)


def _check_symmetric(M, atol=1e-12):
    if M.nnz:
        scale = max(1.0, abs(M.data).max())
        gap = abs(M - M.T)
        if gap.nnz and gap.data.max() > atol * scale:
            raise ValueError("matrix is not symmetric within tolerance")


def _fix_sign(v):
    # deterministic gauge: the largest-magnitude entry is positive
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _deflated_power(S, M, k, tol, max_iter, rng, to_shifted, n_return=None):
    """Top-k pairs of the shifted operator S by deflated power steps.

    ``to_shifted`` maps an eigenvalue of M to the matching eigenvalue of S,
    so converged pairs can be subtracted implicitly (S <- S - mu v v^T).
    Convergence is judged on the unshifted residual ||M v - lambda v||, which
    equals the shifted residual exactly. A pair that stagnates above its
    threshold is kept provisionally: a final Rayleigh-Ritz rotation of the
    collected span repairs the usual cause, clustered eigenvalues, and the
    thresholds are re-checked afterwards. Returns pairs in discovery order;
    only the first ``n_return`` pairs are threshold-checked and returned (the
    rest is an oversampling buffer that widens the span past boundary
    clusters).
    """
    n = S.shape[0]
    n_return = k if n_return is None else n_return
    values, vectors = [], []
    V = np.zeros((n, 0))
    mu = np.zeros(0)
    for _ in range(k):
        best, best_v, best_lam = np.inf, None, 0.0
        for _restart in range(6):
            v = rng.standard_normal(n)
            if V.shape[1]:
                v -= V @ (V.T @ v)
            nv = np.linalg.norm(v)
            if nv == 0.0:
                continue
            v /= nv
            stale = 0
            for _it in range(max_iter):
                w = S @ v
                if V.shape[1]:
                    w -= V @ (mu * (V.T @ v))
                    w -= V @ (V.T @ w)  # guard against drift back into found space
                nw = np.linalg.norm(w)
                if nw > 0:
                    v = w / nw
                # else: operator annihilates v, which is then an eigenvector
                mv = M @ v
                lam = float(v @ mv)
                res = float(np.linalg.norm(mv - lam * v))
                if res < best:
                    best, best_v, best_lam = res, v, lam
                    stale = 0
                else:
                    stale += 1
                # deflation error feeds later pairs, so push well below the
                # acceptance threshold before stopping
                if res <= 1e-3 * tol(lam) or (stale >= 400 and best <= tol(best_lam)):
                    break
                if stale >= 400:
                    break  # stagnated above threshold; restart fresh
            if best <= tol(best_lam):
                break
        lam, v = best_lam, best_v
        values.append(lam)
        vectors.append(v)
        V = np.column_stack([V, v])
        mu = np.append(mu, to_shifted(lam))

    # Rayleigh-Ritz rotation of the span: individual power vectors inside a
    # near-degenerate cluster converge slowly, but their span does not
    V, _ = np.linalg.qr(V)
    T = V.T @ (M @ V)
    theta, Q = np.linalg.eigh(0.5 * (T + T.T))
    order = np.argsort([-to_shifted(th) for th in theta], kind="stable")
    theta = theta[order]
    W = V @ Q[:, order]
    theta, W = theta[:n_return], W[:, :n_return]
    residuals = np.linalg.norm(M @ W - W * theta[None, :], axis=0)
    bad = [i for i in range(n_return) if residuals[i] > tol(theta[i])]
    if bad:
        raise ConvergenceError(
            f"power iteration failed on pairs {bad} of {n_return} after "
            f"Rayleigh-Ritz (residuals {residuals[bad]})", float(residuals[bad].max()))
    W = np.column_stack([_fix_sign(W[:, i]) for i in range(n_return)])
    return theta, W


def top_k_eigs(M, k: int, tol: float = 1e-10, max_iter: int = 5000,
               seed: int = 0) -> EigenPairs:
    """The k algebraically largest eigenpairs of a symmetric sparse matrix.

    Power iteration runs on M + shift I (shift just above the spectral radius
    estimate) so the target eigenvalue dominates in magnitude; converged pairs
    are deflated implicitly. Each returned pair satisfies
    ||M v - lambda v|| <= tol * max(1, |lambda|).
    """
    M = sparse.csr_array(M, dtype=np.float64)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    _check_symmetric(M)
    shift = 1.01 * spectral_radius(M) + 1e-12
    S = (M + shift * sparse.identity(n, format="csr")).tocsr()
    rng = derived_rng(seed, "eigs")
    values, vectors = _deflated_power(
        S, M, min(k + 8, n), lambda lam: tol * max(1.0, abs(lam)), max_iter, rng,
        to_shifted=lambda lam: lam + shift, n_return=k)
    order = np.argsort(-values, kind="stable")
    return EigenPairs(values=values[order], vectors=vectors[:, order])


def bottom_k_eigs(M, k: int, tol: float = 1e-10, max_iter: int = 5000,
                  seed: int = 0) -> EigenPairs:
    """The k smallest eigenpairs of a symmetric PSD matrix, ascending.

    Uses the spectral shift trick: the largest pairs of lambda_max I - M are
    the smallest pairs of M. The residual bound is the absolute form
    ||M v - lambda v|| <= tol, which implies the relative contract.
    """
    M = sparse.csr_array(M, dtype=np.float64)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    _check_symmetric(M)
    lam_max = spectral_radius(M) * 1.0000001 + 1e-12
    S = (lam_max * sparse.identity(n, format="csr") - M).tocsr()
    rng = derived_rng(seed, "eigs")
    # S's top pairs are M's bottom pairs; same residual vector either way
    values, vectors = _deflated_power(
        S, M, min(k + 8, n), lambda lam: tol, max_iter, rng,
        to_shifted=lambda lam: lam_max - lam, n_return=k)
    order = np.argsort(values, kind="stable")
    return EigenPairs(values=values[order], vectors=vectors[:, order])


def component_count(M) -> int:
    """Number of weakly connected components of the sparsity pattern."""
    ncomp, _ = connected_components(abs(sparse.csr_array(M)), directed=False)
    return int(ncomp)


def adjacency_embedding(A, d: int, tol: float = 1e-10, max_iter: int = 5000,
                        seed: int = 0) -> np.ndarray:
    """Spectral adjacency embedding: row i = (mu_j v_j[i]) over the d
    algebraically largest eigenpairs of the symmetric adjacency A."""
    A = sparse.csr_array(A, dtype=np.float64)
    if not 1 <= d <= A.shape[0]:
        raise ValueError("d must be in [1, n]")
    pairs = top_k_eigs(A, d, tol=tol, max_iter=max_iter, seed=seed)
    return pairs.vectors * pairs.values[None, :]


def resistance_embedding(L, d: int, tol: float = 1e-10, max_iter: int = 5000,
                         seed: int = 0) -> np.ndarray:
    """Resistance embedding: row j = (v_i[j] / sqrt(lambda_i)) over the d
    smallest nonzero Laplacian eigenpairs.

    Kernel modes (eigenvalues below 1e-9 * lambda_max) are skipped; there is
    one per connected component, so d can be at most n - c.
    """
    L = sparse.csr_array(L, dtype=np.float64)
    n = L.shape[0]
    c = component_count(L)
    if d < 1 or d > n - c:
        raise ValueError(f"d must be in [1, n - c] with {c} detected components")
    pairs = bottom_k_eigs(L, d + c, tol=tol, max_iter=max_iter, seed=seed)
    lam_max = spectral_radius(L)
    cutoff = 1e-9 * max(lam_max, 1e-300)
    nonzero = pairs.values > cutoff
    if int((~nonzero).sum()) != c:
        raise ValueError(
            f"kernel multiplicity {int((~nonzero).sum())} does not match the "
            f"{c} structural components; graph is near-disconnected")
    vals = pairs.values[nonzero][:d]
    vecs = pairs.vectors[:, nonzero][:, :d]
    return vecs / np.sqrt(vals)[None, :]


def effective_resistance(L, x: int, y: int) -> float:
    """Effective resistance between nodes x and y via the dense Laplacian
    pseudoinverse L+ = O Sigma O^T (test oracle; guarded to n <= 2000)."""
    L = sparse.csr_array(L, dtype=np.float64)
    n = L.shape[0]
    if n > 2000:
        raise ValueError("dense pseudoinverse oracle is limited to n <= 2000")
    if not (0 <= x < n and 0 <= y < n):
        raise ValueError("node index out of range")
    if x == y:
        return 0.0
    dense = L.toarray()
    vals, vecs = np.linalg.eigh(0.5 * (dense + dense.T))
    cutoff = 1e-9 * max(abs(vals).max(), 1e-300)
    inv = np.where(vals > cutoff, 1.0 / np.where(vals > cutoff, vals, 1.0), 0.0)
    pinv = (vecs * inv[None, :]) @ vecs.T
    return float(pinv[x, x] + pinv[y, y] - 2.0 * pinv[x, y])
