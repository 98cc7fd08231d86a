"""Dynamic-network data model and generalized adjacency/Laplacian constructions.

A dynamic network is an ordered sequence of weighted digraph snapshots over a
shared, label-aligned node set. All matrix builders return
``scipy.sparse.csr_array`` with canonical entries (duplicates summed, explicit
zeros dropped).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components


class ConvergenceError(RuntimeError):
    """Iteration failed to reach tolerance; carries the final residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ReducibleChainError(ValueError):
    """Transition matrix is not irreducible, so no unique positive stationary
    vector exists. Regularize first (``teleport=...``) or densify the graph
    (e.g. Katz preprocessing)."""


def _canonicalize(node_count, src, dst, wgt):
    """Sum duplicate (src, dst) pairs, drop zero weights, sort by (src, dst)."""
    src = np.asarray(src, dtype=np.int64).ravel()
    dst = np.asarray(dst, dtype=np.int64).ravel()
    wgt = np.asarray(wgt, dtype=np.float64).ravel()
    if src.size == 0:
        return src, dst, wgt
    if src.min() < 0 or dst.min() < 0 or \
            src.max() >= node_count or dst.max() >= node_count:
        raise ValueError(f"edge endpoint out of range [0, {node_count})")
    if not np.all(np.isfinite(wgt)):
        raise ValueError("edge weights must be finite")
    flat = src * node_count + dst
    uniq, inverse = np.unique(flat, return_inverse=True)
    summed = np.zeros(uniq.size)
    np.add.at(summed, inverse, wgt)
    keep = summed != 0.0
    uniq, summed = uniq[keep], summed[keep]
    return uniq // node_count, uniq % node_count, summed


def _canonical_edges(node_count, edges):
    src, dst, wgt = [], [], []
    for e in edges:
        if len(e) == 2:
            i, j = e
            w = 1.0
        else:
            i, j, w = e
        src.append(i)
        dst.append(j)
        wgt.append(w)
    return _canonicalize(node_count, src, dst, wgt)


@dataclass(frozen=True)
class Snapshot:
    """One time slice: ``node_count`` nodes and directed weighted edges.

    Edges are stored canonically: duplicate (src, dst) pairs summed, zero
    weights dropped, sorted by (src, dst). An undirected slice stores both
    orientations with equal weight (see :meth:`from_edges`).
    """

    node_count: int
    src: np.ndarray = field(repr=False)
    dst: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable, undirected: bool = False) -> "Snapshot":
        """Build a snapshot from (src, dst[, weight]) tuples.

        With ``undirected=True`` every off-diagonal edge is mirrored so both
        orientations carry the weight; duplicates are summed per orientation
        first, and a pair listed in both orientations must agree in weight.
        """
        if node_count < 0:
            raise ValueError("node_count must be >= 0")
        src, dst, wgt = _canonical_edges(node_count, edges)
        if undirected and src.size:
            lo, hi = np.minimum(src, dst), np.maximum(src, dst)
            flat = lo * node_count + hi
            uniq, inverse = np.unique(flat, return_inverse=True)
            # keep one weight per unordered pair; duplicate orientations must agree
            w_u = np.zeros(uniq.size)
            seen = np.zeros(uniq.size, dtype=bool)
            for k in range(flat.size):
                u = inverse[k]
                if seen[u] and w_u[u] != wgt[k]:
                    raise ValueError("conflicting weights for undirected edge")
                w_u[u] = wgt[k]
                seen[u] = True
            lo_u, hi_u = uniq // node_count, uniq % node_count
            loop = lo_u == hi_u
            mirrored = [(int(a), int(b), float(w)) for a, b, w in zip(lo_u, hi_u, w_u)]
            mirrored += [(int(b), int(a), float(w))
                         for a, b, w in zip(lo_u[~loop], hi_u[~loop], w_u[~loop])]
            src, dst, wgt = _canonical_edges(node_count, mirrored)
        snap = cls(node_count=int(node_count), src=src, dst=dst, weight=wgt)
        return snap

    @classmethod
    def from_matrix(cls, M) -> "Snapshot":
        """Build a snapshot directly from a square sparse/dense weight matrix."""
        M = sparse.coo_array(M)
        if M.shape[0] != M.shape[1]:
            raise ValueError("weight matrix must be square")
        n = M.shape[0]
        src, dst, wgt = _canonicalize(n, M.row, M.col, M.data)
        return cls(node_count=n, src=src, dst=dst, weight=wgt)

    @property
    def edge_count(self) -> int:
        return int(self.src.size)

    def edge_list(self):
        """Edges as a list of (src, dst, weight) tuples."""
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.src, self.dst, self.weight)]


@dataclass(frozen=True)
class DynamicNetwork:
    """Aligned snapshot sequence over a common labeled node set."""

    labels: tuple
    snapshots: tuple
    directed: bool = False

    def __post_init__(self):
        if len(self.snapshots) < 1:
            raise ValueError("need at least one snapshot")
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("node labels must be unique")
        for s in self.snapshots:
            if s.node_count != n:
                raise ValueError("snapshot node_count does not match label count")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def tau(self) -> int:
        return len(self.snapshots)

    def adjacency(self, t: int) -> sparse.csr_array:
        return adjacency_matrix(self.snapshots[t])

    def index_of(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown node label {label!r}") from None


def align_snapshots(snapshot_edges: Sequence[Sequence], *,
                    snapshot_labels: Sequence[Sequence] | None = None,
                    directed: bool = False) -> DynamicNetwork:
    """Align raw labelled edge lists onto the union node set.

    ``snapshot_edges[t]`` lists (src_label, dst_label[, weight]) for slice t.
    ``snapshot_labels[t]``, when given, declares nodes present at t even if
    isolated; a label repeated within one slice's declaration is rejected.
    Every slice is padded with isolated nodes to the full union label set,
    and the label -> index map (sorted label order) is shared by all slices.
    """
    if len(snapshot_edges) == 0:
        raise ValueError("need at least one snapshot")
    if snapshot_labels is not None and len(snapshot_labels) != len(snapshot_edges):
        raise ValueError("snapshot_labels length must match snapshot_edges")

    union: set = set()
    for t, edges in enumerate(snapshot_edges):
        if snapshot_labels is not None:
            seen_t: set = set()
            for lab in snapshot_labels[t]:
                if lab in seen_t:
                    raise ValueError(f"duplicate label {lab!r} in snapshot {t}")
                seen_t.add(lab)
            union |= seen_t
        for e in edges:
            union.add(e[0])
            union.add(e[1])

    labels = tuple(sorted(union, key=str))
    index = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)

    snaps = []
    for edges in snapshot_edges:
        indexed = []
        for e in edges:
            w = float(e[2]) if len(e) > 2 else 1.0
            indexed.append((index[e[0]], index[e[1]], w))
        snaps.append(Snapshot.from_edges(n, indexed, undirected=not directed))
    return DynamicNetwork(labels=labels, snapshots=tuple(snaps), directed=directed)


# ---------------------------------------------------------------------------
# matrix constructions


def _compact(M) -> sparse.csr_array:
    M = sparse.csr_array(M)
    M.sum_duplicates()
    M.eliminate_zeros()
    return M


def adjacency_matrix(s: Snapshot) -> sparse.csr_array:
    """Weighted adjacency A with A[i, j] = w_ij."""
    n = s.node_count
    return _compact(sparse.coo_array((s.weight, (s.src, s.dst)), shape=(n, n)))


def degree_matrix(A, direction: str = "out") -> sparse.csr_array:
    """Diagonal weighted degree matrix; out = row sums, in = column sums."""
    A = sparse.csr_array(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("adjacency must be square")
    if direction == "out":
        d = np.asarray(A.sum(axis=1)).ravel()
    elif direction == "in":
        d = np.asarray(A.sum(axis=0)).ravel()
    else:
        raise ValueError("direction must be 'out' or 'in'")
    return _compact(sparse.dia_array((d[None, :], [0]), shape=A.shape))


def _check_nonnegative(A):
    if A.nnz and A.data.min() < 0:
        raise ValueError("adjacency weights must be nonnegative")


def laplacian(A) -> sparse.csr_array:
    """Combinatorial Laplacian L = D - A with out-degree D."""
    A = sparse.csr_array(A)
    _check_nonnegative(A)
    return _compact(degree_matrix(A, "out") - A)


def normalized_laplacian(A) -> sparse.csr_array:
    """Normalized Laplacian I - D^{-1/2} A D^{-1/2}.

    Isolated nodes use the (D^{-1})_vv = 0 convention: their row/column of the
    scaled adjacency term vanishes, leaving the identity contribution, so the
    diagonal entry is 1 and the off-diagonal entries are 0.
    """
    A = sparse.csr_array(A)
    _check_nonnegative(A)
    n = A.shape[0]
    d = np.asarray(A.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        dinv_sqrt = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    Dh = sparse.dia_array((dinv_sqrt[None, :], [0]), shape=(n, n))
    return _compact(sparse.identity(n, format="csr") - Dh @ A @ Dh)


def transition_matrix(A) -> sparse.csr_array:
    """Row-stochastic P with P[i, j] = w_ij / sum_k w_ik; zero rows stay zero."""
    A = sparse.csr_array(A)
    _check_nonnegative(A)
    d = np.asarray(A.sum(axis=1)).ravel()
    with np.errstate(divide="ignore"):
        dinv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 0.0)
    Dinv = sparse.dia_array((dinv[None, :], [0]), shape=A.shape)
    return _compact(Dinv @ A)


def _strongly_connected(P) -> bool:
    ncomp, _ = connected_components(P, directed=True, connection="strong")
    return ncomp == 1


def stationary_vector(P, total_weight: float = 1.0, *, tol: float = 1e-12,
                      max_iter: int = 20000, teleport: float | None = None) -> np.ndarray:
    """Positive left fixed vector of P, scaled so its entries sum to ``total_weight``.

    Computed by power iteration on the lazy chain (P + I)/2, which has the
    same fixed vectors but no periodicity. P must be irreducible (strongly
    connected with no zero rows); otherwise pass ``teleport=eps`` to iterate
    on the regularized chain (1 - eps) P + eps J / n instead, which is a
    documented deviation from the strict fixed-vector contract.
    """
    P = sparse.csr_array(P, dtype=np.float64)
    n = P.shape[0]
    if P.shape[0] != P.shape[1]:
        raise ValueError("P must be square")
    if n == 0:
        raise ValueError("empty chain")

    if teleport is not None:
        if not 0.0 < teleport < 1.0:
            raise ValueError("teleport must be in (0, 1)")
    else:
        rows = np.asarray(P.sum(axis=1)).ravel()
        if np.any(rows <= tol) or not _strongly_connected(P):
            raise ReducibleChainError(
                "transition matrix is reducible; no unique positive stationary "
                "vector. Pass teleport=1e-3 or preprocess with a Katz kernel.")

    phi = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iter):
        if teleport is None:
            nxt = 0.5 * (phi + phi @ P)
        else:
            nxt = (1.0 - teleport) * (phi @ P) + teleport * phi.sum() / n
        s = nxt.sum()
        if s <= 0:
            raise ConvergenceError("stationary iteration collapsed to zero", float("inf"))
        nxt = nxt / s
        drift = float(np.abs(nxt - phi).sum())
        phi = nxt
        residual = float(np.abs(phi @ P - phi).sum())
        if (residual if teleport is None else drift) < tol:
            break
    else:
        raise ConvergenceError(
            f"stationary vector did not converge in {max_iter} iterations "
            f"(residual {residual:.3e})", residual)

    if phi.min() <= 0:
        raise ReducibleChainError(
            "stationary vector has non-positive entries; chain is effectively "
            "reducible. Pass teleport=1e-3 or preprocess with a Katz kernel.")
    return phi * (total_weight / phi.sum())


def _phi_and_p(A, teleport):
    A = sparse.csr_array(A, dtype=np.float64)
    _check_nonnegative(A)
    P = transition_matrix(A)
    phi = stationary_vector(P, total_weight=float(A.sum()), teleport=teleport)
    return phi, P


def symmetric_directed_laplacian(A, normalized: bool = False, *,
                                 teleport: float | None = None) -> sparse.csr_array:
    """Symmetric Laplacian Phi - (Phi P + P^T Phi)/2 of a weighted digraph.

    ``normalized=True`` rescales by Phi^{-1/2} on both sides. Reduces to the
    ordinary (normalized) Laplacian on undirected input. The result is
    explicitly symmetrized so M == M.T holds exactly.
    """
    phi, P = _phi_and_p(A, teleport)
    Phi = sparse.dia_array((phi[None, :], [0]), shape=P.shape)
    M = Phi - 0.5 * (Phi @ P + P.T @ Phi)
    if normalized:
        scale = sparse.dia_array(((1.0 / np.sqrt(phi))[None, :], [0]), shape=P.shape)
        M = scale @ M @ scale
    M = _compact(M)
    return _compact(0.5 * (M + M.T))


def symmetrized_adjacency(A, *, teleport: float | None = None) -> sparse.csr_array:
    """Generalized symmetric adjacency (Phi P + P^T Phi)/2; equals A when A is symmetric."""
    phi, P = _phi_and_p(A, teleport)
    Phi = sparse.dia_array((phi[None, :], [0]), shape=P.shape)
    M = _compact(0.5 * (Phi @ P + P.T @ Phi))
    return _compact(0.5 * (M + M.T))


def spectral_radius(A, iters: int = 100, tol: float = 1e-8) -> float:
    """Power-iteration estimate of the spectral radius.

    The start vector is a fixed pseudo-random draw: a structured start such
    as the all-ones vector can be exactly orthogonal to the dominant
    eigenvector (it is the kernel of every Laplacian) and would stall at 0.
    """
    A = sparse.csr_array(A, dtype=np.float64)
    n = A.shape[0]
    if n == 0:
        return 0.0
    v = np.random.default_rng(0x5EED).standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = A @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        if est > 0 and abs(nw - est) <= tol * est:
            return nw
        est = nw
        v = w / nw
    return est


def katz_omega_bound(A, safety: float = 0.99) -> float:
    """Largest admissible Katz damping: ``safety / rho(A)`` by power estimate,
    widened by the closed-form minimum-degree bound on unweighted undirected
    input (which certifies convergence on its own)."""
    A = sparse.csr_array(A, dtype=np.float64)
    rho = spectral_radius(A)
    bound = np.inf if rho == 0.0 else safety / rho
    if A.nnz and np.all(A.data == 1.0):
        diff = A - A.T
        if diff.nnz == 0 or np.abs(diff.data).max() == 0.0:
            deg = np.asarray(A.sum(axis=1)).ravel()
            delta = float(deg.min())
            m = A.nnz / 2.0
            n = A.shape[0]
            root = np.sqrt((delta + 1.0) ** 2 + 4.0 * (2.0 * m - delta * n))
            closed = 2.0 / (delta - 1.0 + root)
            bound = max(bound, closed)
    return float(bound)


def katz_adjacency(A, omega: float, max_terms: int = 50, *,
                   series_tol: float = 1e-12, method: str = "auto") -> sparse.csr_array:
    """Katz path-counting kernel A_w = sum_{l>=1} w^{l-1} A^l.

    Requires omega below the admissible bound (see :func:`katz_omega_bound`).
    The truncated power series (with a geometric tail bound) is used while
    nnz * max_terms stays small, otherwise (I - w A) X = A is solved with a
    sparse LU factorization; ``method`` forces one route. omega = 0 returns
    A itself.
    """
    A = _compact(sparse.csr_array(A, dtype=np.float64))
    n = A.shape[0]
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    if method not in ("auto", "series", "solve"):
        raise ValueError(f"unknown katz method {method!r}")
    if omega == 0.0:
        return A.copy()
    bound = katz_omega_bound(A)
    if omega >= bound:
        raise ValueError(
            f"omega={omega} is not below the admissible Katz bound {bound:.6g} "
            "(safety-margined inverse spectral radius)")

    sym_in = abs(A - A.T).max() if A.nnz else 0.0
    rho = spectral_radius(A)
    q = omega * rho

    total = None
    use_series = method == "series" or \
        (method == "auto" and A.nnz * max_terms <= 2_000_000)
    if use_series:
        term = A.copy()
        total = A.copy()
        converged = False
        for _ in range(max_terms - 1):
            term = _compact(omega * (A @ term))
            total = _compact(total + term)
            head = abs(term).max() if term.nnz else 0.0
            tail = head * q / (1.0 - q) if q < 1.0 else np.inf
            if tail < series_tol:
                converged = True
                break
        if method == "auto" and not converged and q >= 1e-3:
            # tail not provably small: fall back to the exact closed form
            total = None

    if total is None:
        from scipy.sparse.linalg import splu
        # A_w = (1/w)((I - wA)^{-1} - I) = (I - wA)^{-1} A, one solve per column
        lu = splu(sparse.csc_array(sparse.identity(n) - omega * A))
        total = _compact(sparse.csr_array(lu.solve(A.toarray())))

    if sym_in <= 1e-12:
        total = _compact(0.5 * (total + total.T))
    return total
