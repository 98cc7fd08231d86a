"""Sparse 3-tensors and CP / orthogonality-constrained CP decomposition by ALS.

The tensor is stored in coordinate form and never densified: the ALS inner
kernel is a matricized-tensor-times-Khatri-Rao product (MTTKRP) computed as a
sparse unfolding times a dense Khatri-Rao factor. The orthogonal variant
replaces the node-factor least-squares update with the orthogonal Procrustes
solution (polar factor of the MTTKRP matrix), which keeps that factor's
columns exactly orthonormal while every accepted sweep still decreases the
residual.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse

from .seeding import derived_rng


class DecompositionError(RuntimeError):
    """ALS aborted (non-finite factors or an unusable configuration)."""


@dataclass(frozen=True)
class SparseTensor3:
    """Coordinate-format sparse 3-tensor with canonical entries.

    Duplicates are summed, explicit zeros dropped, coordinates sorted.
    """

    dims: tuple
    i: np.ndarray = field(repr=False)
    j: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)

    @classmethod
    def from_entries(cls, dims, i, j, t, vals) -> "SparseTensor3":
        n1, n2, n3 = (int(d) for d in dims)
        i = np.asarray(i, dtype=np.int64).ravel()
        j = np.asarray(j, dtype=np.int64).ravel()
        t = np.asarray(t, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (i.size == j.size == t.size == vals.size):
            raise ValueError("coordinate arrays must have equal length")
        if vals.size:
            if i.min() < 0 or j.min() < 0 or t.min() < 0 or \
                    i.max() >= n1 or j.max() >= n2 or t.max() >= n3:
                raise ValueError("tensor coordinate out of range")
            if not np.all(np.isfinite(vals)):
                raise ValueError("tensor values must be finite")
        flat = (i * n2 + j) * n3 + t
        uniq, inverse = np.unique(flat, return_inverse=True)
        summed = np.zeros(uniq.size)
        np.add.at(summed, inverse, vals)
        keep = summed != 0.0
        uniq, summed = uniq[keep], summed[keep]
        return cls(dims=(n1, n2, n3), i=uniq // (n2 * n3),
                   j=(uniq // n3) % n2, t=uniq % n3, vals=summed)

    @classmethod
    def from_slices(cls, slices: Sequence) -> "SparseTensor3":
        """Stack square sparse matrices as the frontal slices Z[:, :, t]."""
        if len(slices) == 0:
            raise ValueError("need at least one slice")
        mats = [sparse.coo_array(S) for S in slices]
        n = mats[0].shape[0]
        for S in mats:
            if S.shape != (n, n):
                raise ValueError(f"slice shape {S.shape} != ({n}, {n})")
        i = np.concatenate([S.row for S in mats]) if mats else np.zeros(0, np.int64)
        j = np.concatenate([S.col for S in mats])
        t = np.concatenate([np.full(S.nnz, k, dtype=np.int64) for k, S in enumerate(mats)])
        v = np.concatenate([S.data for S in mats])
        return cls.from_entries((n, n, len(mats)), i, j, t, v)

    @classmethod
    def from_dense(cls, array) -> "SparseTensor3":
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 3:
            raise ValueError("expected a 3-way array")
        idx = np.nonzero(array)
        return cls.from_entries(array.shape, *idx, array[idx])

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dims)
        out[self.i, self.j, self.t] = self.vals
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(self.vals))

    @cached_property
    def _unfoldings(self):
        n1, n2, n3 = self.dims
        u1 = sparse.csr_array(
            (self.vals, (self.i, self.j + self.t * n2)), shape=(n1, n2 * n3))
        u2 = sparse.csr_array(
            (self.vals, (self.j, self.i + self.t * n1)), shape=(n2, n1 * n3))
        u3 = sparse.csr_array(
            (self.vals, (self.t, self.i + self.j * n1)), shape=(n3, n1 * n2))
        return (u1, u2, u3)


def from_snapshots(slices: Sequence) -> SparseTensor3:
    """Alias of :meth:`SparseTensor3.from_slices` for adjacency-slice stacks."""
    return SparseTensor3.from_slices(slices)


def _khatri_rao(X, Y):
    # rows indexed (x_row * len(Y) + y_row), i.e. the Y index varies fastest
    r = X.shape[1]
    return (X[:, None, :] * Y[None, :, :]).reshape(-1, r)


def mttkrp(Z: SparseTensor3, factors: Sequence[np.ndarray], mode: int) -> np.ndarray:
    """Matricized-tensor-times-Khatri-Rao product for one mode (1, 2 or 3).

    ``factors`` is the triple (A, B, C); the factor of the requested mode is
    ignored. Z is used in unfolded sparse form and never densified.
    """
    A, B, C = factors
    n1, n2, n3 = Z.dims
    r = {1: B, 2: A, 3: A}[mode].shape[1]
    for M, n in ((A, n1), (B, n2), (C, n3)):
        if M.shape != (n, r):
            raise ValueError(f"factor shape {M.shape} inconsistent with dims {Z.dims} rank {r}")
    u1, u2, u3 = Z._unfoldings
    if mode == 1:
        return u1 @ _khatri_rao(C, B)
    if mode == 2:
        return u2 @ _khatri_rao(C, A)
    if mode == 3:
        return u3 @ _khatri_rao(B, A)
    raise ValueError("mode must be 1, 2 or 3")


@dataclass(frozen=True)
class AlsConfig:
    """Settings for the alternating least-squares decomposition.

    ``prox`` is the relative weight of a proximal term that pulls each factor
    update toward its previous value. It leaves exact decompositions as fixed
    points and barely slows well-posed problems, but pins the gauge drift of
    weakly identifiable tensors (near-parallel time profiles), where plain
    ALS wanders along flat directions and inflates paired components.
    """

    rank: int
    max_sweeps: int = 200
    rel_tol: float = 1e-10
    init: str = "auto"  # auto | spectral | random
    orthogonality: str = "none"  # none | node_factor
    seed: int = 0
    prox: float = 1e-3

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.rel_tol <= 0 or self.max_sweeps < 1:
            raise ValueError("tolerances and sweep budget must be positive")
        if self.prox < 0:
            raise ValueError("proximal weight must be >= 0")
        if self.init not in ("auto", "spectral", "random"):
            raise ValueError(f"unknown init scheme {self.init!r}")
        if self.orthogonality not in ("none", "node_factor"):
            raise ValueError(f"unknown orthogonality mode {self.orthogonality!r}")


@dataclass(frozen=True)
class CPModel:
    """Rank-r decomposition sum_r lambda_r a_r x b_r x c_r.

    Factor columns are unit vectors, the nonnegative weights are sorted in
    non-increasing order, and ``fit`` is the final relative reconstruction
    error (0 by convention for an all-zero tensor).
    """

    lambdas: np.ndarray
    factor_a: np.ndarray
    factor_b: np.ndarray
    factor_c: np.ndarray
    fit: float
    sweeps: int = 0
    fit_history: tuple = ()

    @property
    def rank(self) -> int:
        return int(self.lambdas.size)

    @property
    def dims(self) -> tuple:
        return (self.factor_a.shape[0], self.factor_b.shape[0], self.factor_c.shape[0])

    def to_dense(self) -> np.ndarray:
        return np.einsum("r,ir,jr,tr->ijt", self.lambdas,
                         self.factor_a, self.factor_b, self.factor_c)


def submodel(model: CPModel, indices) -> CPModel:
    """Restrict a model to the given components (fit becomes undefined)."""
    idx = np.asarray(indices, dtype=np.int64)
    return CPModel(lambdas=model.lambdas[idx],
                   factor_a=model.factor_a[:, idx],
                   factor_b=model.factor_b[:, idx],
                   factor_c=model.factor_c[:, idx],
                   fit=float("nan"))


# ---------------------------------------------------------------------------
# ALS internals


def _aggregate_slice(Z: SparseTensor3) -> np.ndarray:
    n1, n2, _ = Z.dims
    S = np.zeros((n1, n2))
    np.add.at(S, (Z.i, Z.j), Z.vals)
    return 0.5 * (S + S.T)


def initial_factors(Z: SparseTensor3, cfg: AlsConfig):
    """Warm-start factors: node factors from eigenvectors of the time-summed
    symmetrized slice, time factor constant 1/sqrt(n3) per column (exact in
    the identical-slices limit); random columns fill beyond the node count."""
    n1, n2, n3 = Z.dims
    r = cfg.rank
    rng = derived_rng(cfg.seed, "als-init")
    use_spectral = cfg.init in ("auto", "spectral") and n1 == n2 and n1 <= 4096
    if use_spectral:
        vals, vecs = np.linalg.eigh(_aggregate_slice(Z))
        order = np.argsort(-np.abs(vals), kind="stable")
        k = min(r, n1)
        lead = vecs[:, order[:k]]
        if r > k:
            extra = rng.uniform(-1.0, 1.0, size=(n1, r - k))
            extra /= np.maximum(np.linalg.norm(extra, axis=0), 1e-300)
            lead = np.column_stack([lead, extra])
        A = lead.copy()
        B = lead.copy()
    else:
        A = rng.uniform(-1.0, 1.0, size=(n1, r))
        B = rng.uniform(-1.0, 1.0, size=(n2, r))
        A /= np.maximum(np.linalg.norm(A, axis=0), 1e-300)
        B /= np.maximum(np.linalg.norm(B, axis=0), 1e-300)
        if cfg.orthogonality == "node_factor":
            B = np.linalg.qr(B)[0]
            if B.shape[1] < r:
                raise DecompositionError("cannot orthonormalize node factor: rank > n")
    if use_spectral:
        C = np.full((n3, r), 1.0 / np.sqrt(n3))
    else:
        C = rng.uniform(-1.0, 1.0, size=(n3, r))
        C /= np.maximum(np.linalg.norm(C, axis=0), 1e-300)
    return A, B, C


def _gram_solve(G, rhs, prox=0.0, prev=None):
    """Least-squares factor update from its Gram system, optionally proximal.

    Solves (G + rho I) X^T = (rhs + rho prev)^T with rho = prox tr(G)/r, plus
    the documented ridge fallback when G is numerically rank-deficient.
    """
    r = G.shape[0]
    if prox > 0.0 and prev is not None:
        rho = prox * np.trace(G) / r
        G = G + rho * np.eye(r)
        rhs = rhs + rho * prev
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e12:
        G = G + (1e-10 * np.trace(G) / r + 1e-300) * np.eye(r)
    try:
        return np.linalg.solve(G, rhs.T).T
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(G, rhs.T, rcond=None)[0].T


def _polar(M):
    U, _, Vt = np.linalg.svd(M, full_matrices=False)
    return U @ Vt


def _model_norm_sq(lambdas, A, B, C):
    G = (A.T @ A) * (B.T @ B) * (C.T @ C)
    return float(lambdas @ G @ lambdas)


def _inner_with_tensor(Z, lambdas, A, B, C):
    prod = A[Z.i] * B[Z.j] * C[Z.t]
    return float(Z.vals @ (prod @ lambdas))


def _relative_error(Z, norm_z, lambdas, A, B, C):
    err2 = norm_z ** 2 - 2.0 * _inner_with_tensor(Z, lambdas, A, B, C) \
        + _model_norm_sq(lambdas, A, B, C)
    err = np.sqrt(max(err2, 0.0))
    return err / norm_z if norm_z > 0 else err


def _normalize_columns(F, fallback):
    norms = np.linalg.norm(F, axis=0)
    dead = norms < np.finfo(float).tiny
    out = F.copy()
    if dead.any():
        out[:, dead] = fallback[:, dead]
        norms = np.where(dead, 0.0, norms)
    live = ~dead
    out[:, live] = out[:, live] / norms[live]
    return out, norms


# fit values at this scale are dominated by cancellation noise in the
# norm-difference formula; sweeping further cannot improve anything real
_FIT_FLOOR = 1e-8


def _als(Z: SparseTensor3, cfg: AlsConfig, orthogonal_b: bool) -> CPModel:
    n1, n2, n3 = Z.dims
    r = cfg.rank
    if orthogonal_b and r > n2:
        raise ValueError(f"orthogonal decomposition needs rank <= {n2}")
    if r > min(n1 * n3, n1 * n2):
        raise ValueError(f"rank {r} above practical cap {min(n1 * n3, n1 * n2)}")

    A, B, C = initial_factors(Z, cfg)
    norm_z = Z.norm()
    if norm_z == 0.0:
        lam = np.zeros(r)
        return CPModel(lam, A, B, C, fit=0.0, sweeps=0, fit_history=(0.0,))

    fits = []
    prev_fit = np.inf
    units = (A, B, C)
    lam_prev = np.ones(r)
    accepted_state = None
    sweeps_done = 0
    for sweep in range(cfg.max_sweeps):
        prev_units = units
        newA, newB, newC = _sweep(Z, *units, lam_prev, orthogonal_b, cfg.prox)
        A, na = _normalize_columns(newA, prev_units[0])
        B, nb = _normalize_columns(newB, prev_units[1])
        C, nc = _normalize_columns(newC, prev_units[2])
        lam = na * nb * nc
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))
                and np.all(np.isfinite(C)) and np.all(np.isfinite(lam))):
            raise DecompositionError(
                f"non-finite factor entries at sweep {sweep + 1}; "
                "input scaling or rank is pathological")
        fit = _relative_error(Z, norm_z, lam, A, B, C)

        if orthogonal_b and fit > prev_fit + 1e-12:
            # retraction overshoot: reject the sweep, retry damped
            accepted = False
            blend = 0.5
            for _ in range(3):
                A_d = prev_units[0] + blend * (A - prev_units[0])
                C_d = prev_units[2] + blend * (C - prev_units[2])
                A_d, _ = _normalize_columns(A_d, prev_units[0])
                C_d, _ = _normalize_columns(C_d, prev_units[2])
                B_d = _polar(prev_units[1] + blend * (B - prev_units[1]))
                nA, nB, nC = _sweep(Z, A_d, B_d, C_d, lam_prev, orthogonal_b, cfg.prox)
                A_c, na = _normalize_columns(nA, A_d)
                B_c, nb = _normalize_columns(nB, B_d)
                C_c, nc = _normalize_columns(nC, C_d)
                lam_c = na * nb * nc
                fit_c = _relative_error(Z, norm_z, lam_c, A_c, B_c, C_c)
                if fit_c <= prev_fit + 1e-12:
                    A, B, C, lam, fit = A_c, B_c, C_c, lam_c, fit_c
                    accepted = True
                    break
                blend *= 0.5
            if not accepted:
                break  # keep the last accepted state

        units = (A, B, C)
        lam_prev = lam
        accepted_state = (lam, A, B, C)
        fits.append(fit)
        sweeps_done = sweep + 1
        if fit <= _FIT_FLOOR or abs(prev_fit - fit) <= cfg.rel_tol:
            break
        prev_fit = fit

    if accepted_state is None:  # every sweep rejected: report the start
        lam = np.zeros(r)
        A, B, C = units
        fits = [_relative_error(Z, norm_z, lam, A, B, C)]
    else:
        lam, A, B, C = accepted_state

    order = np.argsort(-lam, kind="stable")
    model = CPModel(lambdas=lam[order], factor_a=A[:, order], factor_b=B[:, order],
                    factor_c=C[:, order], fit=fits[-1], sweeps=sweeps_done,
                    fit_history=tuple(fits))
    return model


def _sweep(Z, A, B, C, lam, orthogonal_b, prox):
    # the first solve re-absorbs the component scale, so its proximal anchor
    # is the scaled previous factor; the later solves stay near unit norm
    A = _gram_solve((B.T @ B) * (C.T @ C), mttkrp(Z, (A, B, C), 1),
                    prox, A * lam[None, :])
    if orthogonal_b:
        M = mttkrp(Z, (A, B, C), 2)
        if prox > 0.0:
            M = M + (prox * np.linalg.norm(M) / np.sqrt(M.shape[1])) * B
        B = _polar(M)
    else:
        B = _gram_solve((A.T @ A) * (C.T @ C), mttkrp(Z, (A, B, C), 2), prox, B)
    C = _gram_solve((A.T @ A) * (B.T @ B), mttkrp(Z, (A, B, C), 3), prox, C)
    return A, B, C


def cp_als(Z: SparseTensor3, cfg: AlsConfig) -> CPModel:
    """Rank-``cfg.rank`` CP approximation by alternating least squares.

    The relative fit is non-increasing sweep to sweep (up to 1e-12 rounding
    slack); iteration stops when the fit change drops below ``cfg.rel_tol``
    or the sweep budget runs out. Factor columns are renormalized after every
    sweep with the scales absorbed into the component weights, and components
    are emitted sorted by weight.
    """
    return _als(Z, cfg, orthogonal_b=False)


def ocp_als(Z: SparseTensor3, cfg: AlsConfig) -> CPModel:
    """CP approximation with an orthonormal second (node) factor.

    Same contract as :func:`cp_als` except the node-factor update is the
    orthogonal Procrustes solution, so ``factor_b.T @ factor_b`` is the
    identity to machine precision; a sweep that increases the residual is
    rejected and retried with damping.
    """
    return _als(Z, cfg, orthogonal_b=True)


def reconstruct_error(Z: SparseTensor3, model: CPModel,
                      weights: Sequence[float] | None = None) -> float:
    """Relative Frobenius reconstruction error, optionally slice-weighted.

    With ``weights`` (positive, one per frontal slice), slice t of both the
    tensor and the reconstruction is scaled by sqrt(weights[t]) first, the
    diagonal specialization of a weighted Frobenius inner product in the time
    domain. For an all-zero tensor the absolute error is returned and a
    RuntimeWarning flags the switch.
    """
    n1, n2, n3 = Z.dims
    if model.dims != (n1, n2, n3):
        raise ValueError(f"model dims {model.dims} do not match tensor {Z.dims}")
    C = model.factor_c
    vals = Z.vals
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.size != n3:
            raise ValueError(f"need {n3} slice weights, got {w.size}")
        if np.any(w <= 0):
            raise ValueError("slice weights must be positive")
        root = np.sqrt(w)
        C = C * root[:, None]
        vals = vals * root[Z.t]
    norm_z = float(np.linalg.norm(vals))
    prod = model.factor_a[Z.i] * model.factor_b[Z.j] * C[Z.t]
    inner = float(vals @ (prod @ model.lambdas))
    err2 = norm_z ** 2 - 2.0 * inner \
        + _model_norm_sq(model.lambdas, model.factor_a, model.factor_b, C)
    err = float(np.sqrt(max(err2, 0.0)))
    if norm_z == 0.0:
        warnings.warn("zero tensor: returning absolute reconstruction error",
                      RuntimeWarning, stacklevel=2)
        return err
    return err / norm_z
