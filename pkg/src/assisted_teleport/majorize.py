"""Majorization, doubly stochastic synthesis and Birkhoff-von Neumann POVMs.

Spectra are squared Schmidt coefficients. Functions accept any ordering
and sort internally; vectors of different length are zero-padded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, MatchingError
from .qstate import PovmEnsemble

MAJORIZATION_TOL = 1e-12
DS_TOL = 1e-10
ZERO_ENTRY = 1e-12
SUPPORT_CUTOFF = 1e-14

BELL_SPECTRUM = np.array([0.5, 0.5])

__all__ = [
    "BELL_SPECTRUM",
    "BvnDecomposition",
    "PovmEnsemble",
    "bell_pmax",
    "build_nielsen_povm",
    "bvn_decompose",
    "check_doubly_stochastic",
    "majorized_by",
    "nielsen_operators",
    "perfect_matching",
    "solve_doubly_stochastic",
    "spectrum",
    "vidal_pmax",
]


def spectrum(values, dim: int | None = None) -> np.ndarray:
    """Validate a probability vector and return it sorted nonincreasing.

    Args:
        values: entries in [0, 1] summing to one within 1e-12.
        dim: pad with zeros up to this length.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise DomainError("empty spectrum")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"spectrum entries must be finite: {v}")
    if np.any(v < -MAJORIZATION_TOL) or np.any(v > 1 + MAJORIZATION_TOL):
        raise DomainError(f"spectrum entries must lie in [0, 1]: {v}")
    if abs(v.sum() - 1) > 1e-12 * max(1, v.size):
        raise DomainError(f"spectrum must sum to 1, got {v.sum()!r}")
    v = np.clip(v, 0.0, 1.0)
    if dim is not None:
        if dim < v.size:
            raise DomainError(f"cannot pad length {v.size} to {dim}")
        v = np.concatenate([v, np.zeros(dim - v.size)])
    return np.sort(v)[::-1].copy()


def _pair(source, target) -> tuple[np.ndarray, np.ndarray]:
    d = max(np.size(source), np.size(target))
    return spectrum(source, d), spectrum(target, d)


def majorized_by(source, target, tol: float = MAJORIZATION_TOL) -> bool:
    """True iff every partial sum of ``source`` is at most that of ``target``."""
    s, t = _pair(source, target)
    return bool(np.all(np.cumsum(s) <= np.cumsum(t) + tol))


def vidal_pmax(source, target) -> float:
    """Optimal LOCC conversion probability ``min_k E_k(source) / E_k(target)``.

    ``E_k`` is the tail sum from index k onward of the sorted spectrum.
    Indices where the target tail vanishes impose no constraint.
    """
    s, t = _pair(source, target)
    tail_s = np.cumsum(s[::-1])[::-1]
    tail_t = np.cumsum(t[::-1])[::-1]
    live = tail_t > SUPPORT_CUTOFF
    return float(min(1.0, np.min(tail_s[live] / tail_t[live])))


def bell_pmax(lambda_max: float) -> float:
    """Bell-pair conversion probability from the largest squared Schmidt coefficient."""
    if not 0 <= lambda_max <= 1 + MAJORIZATION_TOL:
        raise DomainError(f"lambda_max must lie in [0, 1], got {lambda_max}")
    return float(min(1.0, 2 * (1 - lambda_max)))


# -- doubly stochastic matrices --------------------------------------------


def check_doubly_stochastic(d_matrix, tol: float = DS_TOL) -> np.ndarray:
    """Return ``d_matrix`` as a float array or raise naming the first bad line."""
    d = np.asarray(d_matrix, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DomainError(f"doubly stochastic matrix must be square, got shape {d.shape}")
    neg = np.argwhere(d < -tol)
    if len(neg):
        i, j = neg[0]
        raise DomainError(f"entry ({i}, {j}) is negative: {float(d[i, j])!r}")
    for i, r in enumerate(d.sum(axis=1)):
        if abs(r - 1) > tol:
            raise DomainError(f"row {i} sums to {float(r)!r}, not 1")
    for j, c in enumerate(d.sum(axis=0)):
        if abs(c - 1) > tol:
            raise DomainError(f"column {j} sums to {float(c)!r}, not 1")
    return np.clip(d, 0.0, None)


def solve_doubly_stochastic(source, target) -> np.ndarray:
    """Doubly stochastic ``D`` with ``D @ target == source``.

    Built as a product of T-transforms (convex mixtures of the identity and
    a transposition), each of which moves one more coordinate of the
    running vector onto ``source``. Inputs keep their original ordering in
    the returned matrix.

    Raises:
        InfeasibleError: if ``source`` is not majorized by ``target``.
    """
    src = np.asarray(source, dtype=float).reshape(-1)
    tgt = np.asarray(target, dtype=float).reshape(-1)
    dim = max(src.size, tgt.size)
    src = np.concatenate([src, np.zeros(dim - src.size)])
    tgt = np.concatenate([tgt, np.zeros(dim - tgt.size)])
    if not majorized_by(src, tgt):
        raise InfeasibleError(f"{src} is not majorized by {tgt}")
    ord_s = np.argsort(-src, kind="stable")
    ord_t = np.argsort(-tgt, kind="stable")
    y = src[ord_s]
    x = tgt[ord_t].copy()

    d_sorted = np.eye(dim)
    tol = 1e-15
    for _ in range(dim * dim):
        diff = x - y
        above = np.flatnonzero(diff > tol)
        if above.size == 0:
            break
        j = above[-1]
        below = np.flatnonzero(diff[j + 1:] < -tol)
        if below.size == 0:
            break
        k = j + 1 + below[0]
        delta = min(diff[j], -diff[k])
        s = delta / (x[j] - x[k])
        t_mat = np.eye(dim)
        t_mat[j, j] = t_mat[k, k] = 1 - s
        t_mat[j, k] = t_mat[k, j] = s
        x = t_mat @ x
        d_sorted = t_mat @ d_sorted

    # back to the caller's ordering: source = S^T D_sorted T target
    p_s = np.eye(dim)[ord_s]
    p_t = np.eye(dim)[ord_t]
    return p_s.T @ d_sorted @ p_t


def perfect_matching(mask: np.ndarray) -> list[int] | None:
    """Row-to-column perfect matching on a boolean support, or None.

    Augmenting-path search; rows are processed in increasing order and
    columns tried lowest index first, so results are reproducible.
    """
    n = mask.shape[0]
    match_col = [-1] * n  # column -> row

    def augment(row: int, seen: list[bool]) -> bool:
        for col in np.flatnonzero(mask[row]):
            if seen[col]:
                continue
            seen[col] = True
            if match_col[col] < 0 or augment(match_col[col], seen):
                match_col[col] = row
                return True
        return False

    for row in range(n):
        if not augment(row, [False] * n):
            return None
    perm = [0] * n
    for col, row in enumerate(match_col):
        perm[row] = col
    return perm


@dataclass(frozen=True, eq=False)
class BvnDecomposition:
    """``D = sum_k weight_k P_k`` with ``P_k[i, perm_k[i]] = 1``."""

    terms: tuple[tuple[float, tuple[int, ...]], ...]
    dim: int

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.terms])

    def permutation_matrix(self, k: int) -> np.ndarray:
        p = np.zeros((self.dim, self.dim))
        p[np.arange(self.dim), list(self.terms[k][1])] = 1.0
        return p

    def reconstruct(self) -> np.ndarray:
        return sum(w * self.permutation_matrix(k) for k, (w, _) in enumerate(self.terms))

    def __len__(self) -> int:
        return len(self.terms)


def bvn_decompose(d_matrix) -> BvnDecomposition:
    """Greedy Birkhoff-von Neumann decomposition.

    Repeatedly finds a perfect matching on the positive entries of the
    residual, subtracts the matched permutation scaled by its smallest
    matched entry, and stops when the residual vanishes. Every step zeroes
    at least one entry, so the loop runs at most ``d**2`` times; in practice
    the number of terms respects the ``(d-1)**2 + 1`` bound.

    Raises:
        DomainError: if the input is not doubly stochastic.
        MatchingError: if a residual with mass left has no perfect matching.
    """
    r = check_doubly_stochastic(d_matrix).copy()
    dim = r.shape[0]
    r[r <= ZERO_ENTRY] = 0.0
    terms = []
    remaining = 1.0
    for _ in range(dim * dim + 1):
        if not np.any(r > ZERO_ENTRY):
            break
        perm = perfect_matching(r > ZERO_ENTRY)
        if perm is None:
            if remaining <= 1e-9:
                break
            raise MatchingError(
                f"no perfect matching with residual mass {remaining:.3g}; input not doubly stochastic"
            )
        rows = np.arange(dim)
        w = float(r[rows, perm].min())
        terms.append((w, tuple(int(c) for c in perm)))
        remaining -= w
        r[rows, perm] -= w
        r[r <= ZERO_ENTRY] = 0.0
    return BvnDecomposition(tuple(terms), dim)


# -- Nielsen POVM ----------------------------------------------------------


def nielsen_operators(source, target):
    """Weights, Kraus operators and corrections for ``source -> target``.

    Returns ``(weights, operators, corrections)``; see
    :func:`build_nielsen_povm`.
    """
    s, t = _pair(source, target)
    if not majorized_by(s, t):
        raise InfeasibleError(f"{s} is not majorized by {t}")
    bvn = bvn_decompose(solve_doubly_stochastic(s, t))
    support = s > SUPPORT_CUTOFF
    inv_sqrt = np.where(support, 1 / np.sqrt(np.where(support, s, 1.0)), 0.0)
    off = np.diag((~support).astype(float))
    sqrt_t = np.diag(np.sqrt(t))
    ops, corrections = [], []
    for k, (w, _) in enumerate(bvn.terms):
        p_t = bvn.permutation_matrix(k).T
        ops.append((np.sqrt(w) * (sqrt_t @ p_t @ np.diag(inv_sqrt) + off)).astype(complex))
        corrections.append(p_t)
    return bvn.weights, ops, corrections


def build_nielsen_povm(source, target) -> PovmEnsemble:
    """POVM realizing a deterministic LOCC conversion ``source -> target``.

    Operators ``M_k = sqrt(p_k) L_t^{1/2} P_k^T L_s^{-1/2}`` act in the
    Schmidt-index basis of the measuring party, with both spectra sorted
    nonincreasing and ``D = sum_k p_k P_k`` the Birkhoff-von Neumann
    decomposition of a doubly stochastic ``D`` with ``D t = s``.
    ``L_s^{-1/2}`` is the pseudo-inverse square root; on the kernel of
    ``L_s`` each outcome acts as ``sqrt(p_k)`` times the identity, which
    keeps the set complete. ``corrections[k]`` is ``P_k^T``, the
    permutation the other party applies on learning outcome ``k``.

    Raises:
        InfeasibleError: if ``source`` is not majorized by ``target``.
    """
    _, ops, corrections = nielsen_operators(source, target)
    return PovmEnsemble(tuple(ops), tuple(range(len(ops))), tuple(corrections))
