"""Pure states on small labeled qubit registers.

Amplitudes are stored densely. The basis index of an amplitude is the
bitstring of the register read in label order, first label most
significant (big-endian), so for labels ``("A", "B")`` the amplitude
vector is ``(|00>, |01>, |10>, |11>)``.

All state comparisons ignore global phase; use :func:`fidelity` rather
than comparing amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, IncompletePovmError, LabelError

MAX_QUBITS = 8
NORM_TOL = 1e-12
SCHMIDT_CUTOFF = 1e-14
BRANCH_CUTOFF = 1e-14

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULIS = (X, Y, Z)

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class PureState:
    """Amplitude vector over an ordered tuple of qubit labels.

    Instances are immutable. The vector is not forced to unit norm, since
    filters and projectors legitimately shrink it; constructors that
    promise normalization say so.
    """

    labels: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate labels in {labels}")
        if len(labels) > MAX_QUBITS:
            raise DomainError(f"at most {MAX_QUBITS} qubits supported, got {len(labels)}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** len(labels):
            raise ValueError(
                f"{len(labels)} labels need {2 ** len(labels)} amplitudes, got {amps.size}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        n = self.norm()
        if n == 0:
            raise DomainError("cannot normalize the zero vector")
        return PureState(self.labels, self.amplitudes / n)

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def reorder(self, labels: Sequence[str]) -> "PureState":
        """Return the same state with its labels permuted into ``labels``."""
        labels = tuple(labels)
        if sorted(labels) != sorted(self.labels):
            raise LabelError(f"{labels} is not a permutation of {self.labels}")
        if labels == self.labels:
            return self
        axes = [self.labels.index(lab) for lab in labels]
        return PureState(labels, np.transpose(self.as_tensor(), axes).reshape(-1))

    def amplitude(self, bits: str) -> complex:
        return complex(self.amplitudes[int(bits, 2)])

    def __repr__(self) -> str:
        terms = []
        for idx in np.flatnonzero(np.abs(self.amplitudes) > 1e-12):
            bits = format(idx, f"0{self.n_qubits}b")
            terms.append(f"({self.amplitudes[idx]:.6g})|{bits}>")
        return f"PureState[{','.join(self.labels)}]: " + (" + ".join(terms) or "0")


@dataclass(frozen=True)
class Bipartition:
    side_a: tuple[str, ...]
    side_b: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "side_a", tuple(self.side_a))
        object.__setattr__(self, "side_b", tuple(self.side_b))
        if set(self.side_a) & set(self.side_b):
            raise LabelError(f"cut sides overlap: {self.side_a} | {self.side_b}")

    def check(self, state: PureState) -> None:
        if set(self.side_a) | set(self.side_b) != set(state.labels) or (
            len(self.side_a) + len(self.side_b) != state.n_qubits
        ):
            raise LabelError(
                f"cut {self.side_a}|{self.side_b} does not partition {state.labels}"
            )


def _as_cut(state: PureState, cut) -> Bipartition:
    if isinstance(cut, Bipartition):
        bp = cut
    else:
        side_a = (cut,) if isinstance(cut, str) else tuple(cut)
        missing = set(side_a) - set(state.labels)
        if missing:
            raise LabelError(f"labels {sorted(missing)} not in state {state.labels}")
        bp = Bipartition(side_a, tuple(lab for lab in state.labels if lab not in side_a))
    bp.check(state)
    return bp


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    """Squared Schmidt coefficients (nonincreasing) with local vectors.

    ``vectors_a[:, i]`` and ``vectors_b[:, i]`` are the local states paired
    with ``coefficients[i]``, written in the computational basis of
    ``labels_a`` and ``labels_b`` respectively.
    """

    coefficients: np.ndarray
    vectors_a: np.ndarray
    vectors_b: np.ndarray
    labels_a: tuple[str, ...]
    labels_b: tuple[str, ...]

    @property
    def rank(self) -> int:
        return len(self.coefficients)

    @property
    def lambda_max(self) -> float:
        return float(self.coefficients[0])

    def reconstruct(self) -> PureState:
        amps = np.einsum(
            "i,ai,bi->ab", np.sqrt(self.coefficients), self.vectors_a, self.vectors_b
        )
        return PureState(self.labels_a + self.labels_b, amps.reshape(-1))


def cut_svd(state: PureState, side_a: Sequence[str], side_b: Sequence[str]):
    """Full SVD of the amplitude matrix with rows ``side_a`` and columns ``side_b``.

    Returns ``(u, s, vh)`` as from :func:`numpy.linalg.svd`, with complete
    unitary ``u`` and ``vh``.
    """
    ordered = state.reorder(tuple(side_a) + tuple(side_b))
    mat = ordered.amplitudes.reshape(2 ** len(side_a), 2 ** len(side_b))
    return np.linalg.svd(mat)


def schmidt(state: PureState, cut) -> SchmidtDecomposition:
    """Schmidt decomposition of ``state`` across ``cut``.

    ``cut`` is a :class:`Bipartition` or the labels of side A (side B is
    the complement). The input need not be normalized; coefficients are
    normalized to sum to one. Coefficients below ``SCHMIDT_CUTOFF`` are
    dropped.
    """
    bp = _as_cut(state, cut)
    u, s, vh = cut_svd(state, bp.side_a, bp.side_b)
    total = float(np.sum(s**2))
    if total == 0:
        raise DomainError("zero vector has no Schmidt decomposition")
    lam = s**2 / total
    keep = lam > SCHMIDT_CUTOFF
    r = int(np.count_nonzero(keep))
    return SchmidtDecomposition(
        coefficients=lam[:r],
        vectors_a=u[:, :r],
        vectors_b=vh[:r, :].T,
        labels_a=bp.side_a,
        labels_b=bp.side_b,
    )


def entanglement_entropy(state: PureState, cut) -> float:
    """Entropy of entanglement across ``cut`` in bits."""
    lam = schmidt(state, cut).coefficients
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def tensor(s1: PureState, s2: PureState) -> PureState:
    overlap = set(s1.labels) & set(s2.labels)
    if overlap:
        raise LabelError(f"label collision: {sorted(overlap)}")
    return PureState(s1.labels + s2.labels, np.kron(s1.amplitudes, s2.amplitudes))


def tensor_all(*states: PureState) -> PureState:
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def apply_local(state: PureState, operator, targets: Sequence[str]) -> PureState:
    """Apply ``operator`` to the qubits ``targets`` (in that bit order).

    The result is not renormalized.
    """
    targets = (targets,) if isinstance(targets, str) else tuple(targets)
    missing = set(targets) - set(state.labels)
    if missing:
        raise LabelError(f"targets {sorted(missing)} not in state {state.labels}")
    if len(set(targets)) != len(targets):
        raise LabelError(f"duplicate targets {targets}")
    op = np.asarray(operator, dtype=complex)
    dim = 2 ** len(targets)
    if op.shape != (dim, dim):
        raise ValueError(f"operator shape {op.shape} does not match {len(targets)} target qubits")
    nt = len(targets)
    axes = [state.labels.index(t) for t in targets]
    psi = np.moveaxis(state.as_tensor(), axes, range(nt))
    shape = psi.shape
    psi = (op @ psi.reshape(dim, -1)).reshape(shape)
    psi = np.moveaxis(psi, range(nt), axes)
    return PureState(state.labels, psi.reshape(-1))


def reduced_density_matrix(state: PureState, keep: Sequence[str]) -> np.ndarray:
    """Partial trace onto ``keep`` (in that order). Not renormalized."""
    keep = tuple(keep)
    rest = tuple(lab for lab in state.labels if lab not in keep)
    mat = state.reorder(keep + rest).amplitudes.reshape(2 ** len(keep), -1)
    return mat @ mat.conj().T


def discard(state: PureState, labels: Iterable[str], atol: float = 1e-10) -> PureState:
    """Drop registers that are in a product state with the rest.

    Raises:
        DomainError: if the discarded registers are entangled with the rest.
    """
    labels = tuple(labels)
    keep = tuple(lab for lab in state.labels if lab not in labels)
    if not labels:
        return state
    u, s, _ = cut_svd(state, keep, labels)
    if len(s) > 1 and s[1] > atol * max(s[0], 1.0):
        raise DomainError(f"registers {labels} are entangled with {keep}")
    return PureState(keep, u[:, 0] * s[0])


def fidelity(s1: PureState, s2: PureState) -> float:
    """|<s1|s2>|^2 for normalized inputs; labels are matched by name."""
    s2 = s2.reorder(s1.labels)
    return float(abs(np.vdot(s1.amplitudes, s2.amplitudes)) ** 2)


def fidelity_to_bell(state: PureState, pair: tuple[str, str] = ("A", "B")) -> float:
    """Overlap of the reduced state on ``pair`` with |Phi+>."""
    for lab in pair:
        if lab not in state.labels:
            raise LabelError(f"label {lab!r} not in state {state.labels}")
    rho = reduced_density_matrix(state, pair)
    tr = np.trace(rho).real
    if tr == 0:
        raise DomainError("zero vector")
    f = np.vdot(PHI_PLUS, rho @ PHI_PLUS).real / tr
    return float(min(1.0, max(0.0, f)))


# -- constructors ----------------------------------------------------------


def basis_state(bits: str, labels: Sequence[str]) -> PureState:
    labels = tuple(labels)
    if len(bits) != len(labels) or set(bits) - {"0", "1"}:
        raise ValueError(f"bitstring {bits!r} does not fit labels {labels}")
    amps = np.zeros(2 ** len(labels), dtype=complex)
    amps[int(bits, 2)] = 1.0
    return PureState(labels, amps)


def bell_state(labels: Sequence[str] = ("A", "B")) -> PureState:
    return PureState(tuple(labels), PHI_PLUS)


def make_link_state(theta: float, labels: Sequence[str] = ("A", "B")) -> PureState:
    """cos(theta)|00> + sin(theta)|11> for theta in (0, pi/2)."""
    if not 0 < theta < np.pi / 2:
        raise DomainError(f"theta must lie in (0, pi/2), got {theta}")
    return PureState(tuple(labels), [np.cos(theta), 0, 0, np.sin(theta)])


def make_ghz(alpha: float, labels: Sequence[str] = ("A'", "B'", "K")) -> PureState:
    """alpha|000> + beta|111> with beta = sqrt(1 - alpha^2)."""
    if not 0 < alpha < 1:
        raise DomainError(f"GHZ alpha must lie in (0, 1), got {alpha}")
    amps = np.zeros(8, dtype=complex)
    amps[0] = alpha
    amps[7] = np.sqrt(1 - alpha**2)
    return PureState(tuple(labels), amps)


def make_w(
    alpha: float, beta: float, gamma: float, labels: Sequence[str] = ("A'", "B'", "K")
) -> PureState:
    """alpha|001> + beta|010> + gamma|100> on (A', B', K)."""
    if min(alpha, beta, gamma) <= 0:
        raise DomainError(f"W coefficients must be positive, got {(alpha, beta, gamma)}")
    if abs(alpha**2 + beta**2 + gamma**2 - 1) > NORM_TOL:
        raise DomainError(
            f"W coefficients not normalized: sum of squares = {alpha**2 + beta**2 + gamma**2}"
        )
    amps = np.zeros(8, dtype=complex)
    amps[0b001] = alpha
    amps[0b010] = beta
    amps[0b100] = gamma
    return PureState(tuple(labels), amps)


# -- measurement -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PovmEnsemble:
    """Measurement operators ``M_k`` with sum of ``M_k^dag M_k`` equal to I.

    ``corrections`` optionally pairs each outcome with the unitary the other
    party applies once the outcome is announced.
    """

    operators: tuple
    labels: tuple = ()
    corrections: tuple | None = None

    def __post_init__(self):
        ops = tuple(np.asarray(m, dtype=complex) for m in self.operators)
        if not ops:
            raise ValueError("empty POVM")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(m.shape != shape for m in ops):
            raise ValueError("POVM operators must be square and of equal dimension")
        labels = tuple(self.labels) if self.labels else tuple(range(len(ops)))
        if len(labels) != len(ops):
            raise ValueError("one label per operator required")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", labels)
        if self.corrections is not None:
            object.__setattr__(self, "corrections", tuple(np.asarray(c) for c in self.corrections))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __len__(self) -> int:
        return len(self.operators)

    def completeness_residual(self) -> float:
        total = sum(m.conj().T @ m for m in self.operators)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def is_complete(self, atol: float = 1e-10) -> bool:
        return self.completeness_residual() <= atol


def projective_povm(basis: Sequence, labels: Sequence = ()) -> PovmEnsemble:
    """Rank-one projectors onto the given orthonormal vectors."""
    ops = [np.outer(v, np.conj(v)) for v in (np.asarray(b, dtype=complex) for b in basis)]
    return PovmEnsemble(tuple(ops), tuple(labels))


HADAMARD_POVM = projective_povm(
    [np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)], ("+", "-")
)
Z_POVM = projective_povm([np.array([1, 0]), np.array([0, 1])], (0, 1))


def measure_outcomes(
    state: PureState, povm: PovmEnsemble, targets: Sequence[str], atol: float = 1e-10
) -> list[tuple[object, float, PureState]]:
    """Like :func:`measure_branches` but keeps each branch's outcome label."""
    targets = (targets,) if isinstance(targets, str) else tuple(targets)
    if povm.dim != 2 ** len(targets):
        raise ValueError(f"POVM dimension {povm.dim} does not match targets {targets}")
    if not povm.is_complete(atol):
        raise IncompletePovmError(
            f"sum of M^dag M deviates from I by {povm.completeness_residual():.3g}"
        )
    norm2 = state.norm() ** 2
    out = []
    for label, m in zip(povm.labels, povm.operators):
        branch = apply_local(state, m, targets)
        p = branch.norm() ** 2 / norm2
        if p > BRANCH_CUTOFF:
            out.append((label, p, branch.normalized()))
    return out


def measure_branches(
    state: PureState, povm: PovmEnsemble, targets: Sequence[str], atol: float = 1e-10
) -> list[tuple[float, PureState]]:
    """Apply a POVM on ``targets`` and return ``(probability, post-state)`` pairs.

    Branches with probability at most 1e-14 are dropped; kept branches are
    normalized.
    """
    return [(p, s) for _, p, s in measure_outcomes(state, povm, targets, atol)]


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    rho = rho / np.trace(rho)
    return np.array([np.trace(rho @ s).real for s in PAULIS])
