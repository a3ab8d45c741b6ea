"""Executable Bell-pair restoration protocols.

Every runner starts from the link ``cos(theta)|00> + sin(theta)|11>`` on
(A, B), tensored with a Bank resource on (A', B', K), and returns a
:class:`ProtocolTranscript` holding every measurement branch exactly (no
sampling). Alice's deterministic step is the Birkhoff-von Neumann POVM from
:mod:`majorize`, realized on her physical registers; Bob answers each
outcome with a permutation unitary on his.

For entanglement accounting the Bank counts as sitting with Alice, so the
audited cut is Bob's registers against everything else. Bank measurements
and the transfer of K to Alice are local with respect to that cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InfeasibleError
from .feasibility import (
    FeasibilityResult,
    ghz_feasible,
    w_meas_feasible,
    w_trans_feasible,
)
from .majorize import BELL_SPECTRUM, majorized_by, nielsen_operators
from .qstate import (
    HADAMARD_POVM,
    PovmEnsemble,
    PureState,
    Z,
    apply_local,
    basis_state,
    bell_state,
    cut_svd,
    discard,
    entanglement_entropy,
    fidelity,
    fidelity_to_bell,
    make_ghz,
    make_link_state,
    make_w,
    measure_outcomes,
    reduced_density_matrix,
    schmidt,
    tensor,
)

FIDELITY_TOL = 1e-9
MONOTONE_TOL = 1e-9

ALICE = ("A", "A'")
ALICE_WITH_K = ("A", "A'", "K")
BOB = ("B", "B'")


@dataclass(frozen=True)
class ProtocolConfig:
    theta: float
    resource_kind: str  # "ghz", "w", "catalyst", "none"
    resource_params: tuple[float, ...]
    model: str  # "bank_measures", "deferred", "transfer", "routing", "filter"
    probabilistic: bool = False


@dataclass(frozen=True)
class Round:
    """One actor's local instrument application.

    ``bits`` counts classical bits broadcast in this round;
    ``qubits_sent`` counts qubits carried across the Alice|Bob cut.
    """

    actor: str
    operation: str
    bits: int = 0
    qubits_sent: int = 0


@dataclass(frozen=True, eq=False)
class Branch:
    probability: float
    state: PureState
    bell_fidelity: float
    outcomes: tuple = ()
    success: bool = True


@dataclass(eq=False)
class ProtocolTranscript:
    config: ProtocolConfig
    rounds: list[Round]
    branches: list[Branch]
    bob_side: tuple[str, ...]
    snapshots: list[list[tuple[float, PureState]]] = field(repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def deterministic(self) -> bool:
        return all(b.bell_fidelity >= 1 - FIDELITY_TOL for b in self.branches)

    @property
    def total_bank_bits(self) -> int:
        return sum(r.bits for r in self.rounds if r.actor == "Bank")

    @property
    def total_bits(self) -> int:
        return sum(r.bits for r in self.rounds)

    @property
    def success_probability(self) -> float:
        """Weight of branches flagged as successful and ending in |Phi+>."""
        return float(
            sum(
                b.probability
                for b in self.branches
                if b.success and b.bell_fidelity >= 1 - FIDELITY_TOL
            )
        )

    def total_probability(self) -> float:
        return float(sum(b.probability for b in self.branches))


def _bits_for(n_outcomes: int) -> int:
    return math.ceil(math.log2(n_outcomes)) if n_outcomes > 1 else 0


# -- transcript builder ----------------------------------------------------


class _Run:
    """Accumulates branch paths and rounds while a protocol executes."""

    def __init__(self, config: ProtocolConfig, state: PureState, bob_side: Sequence[str]):
        self.config = config
        self.bob_side = tuple(bob_side)
        self.paths: list[tuple[float, PureState, tuple]] = [(1.0, state.normalized(), ())]
        self.rounds: list[Round] = []
        self.snapshots = [[(1.0, self.paths[0][1])]]
        self.diagnostics: dict = {}

    def _record(self, rnd: Round) -> None:
        self.rounds.append(rnd)
        self.snapshots.append([(p, s) for p, s, _ in self.paths])

    def measure(self, actor: str, operation: str, povm_for: Callable, targets: Sequence[str]):
        """``povm_for(outcomes, state)`` returns the instrument for one path."""
        new, widest = [], 1
        for p, s, outs in self.paths:
            povm = povm_for(outs, s) if callable(povm_for) else povm_for
            widest = max(widest, len(povm))
            for label, q, branch in measure_outcomes(s, povm, targets):
                new.append((p * q, branch, outs + (label,)))
        self.paths = new
        self._record(Round(actor, operation, _bits_for(widest)))

    def unitary(
        self,
        actor: str,
        operation: str,
        unitary_for: Callable,
        targets: Sequence[str],
        qubits_sent: int = 0,
    ):
        """``unitary_for(outcomes, state)`` returns a matrix or None (do nothing)."""
        new = []
        for p, s, outs in self.paths:
            u = unitary_for(outs, s) if callable(unitary_for) else unitary_for
            new.append((p, s if u is None else apply_local(s, u, targets), outs))
        self.paths = new
        self._record(Round(actor, operation, 0, qubits_sent))

    def note(self, actor: str, operation: str) -> None:
        self._record(Round(actor, operation))

    def finish(self, pair=("A", "B"), failed: Callable[[tuple], bool] = lambda outs: False):
        branches = [
            Branch(p, s, fidelity_to_bell(s, pair), outs, not failed(outs))
            for p, s, outs in self.paths
        ]
        return ProtocolTranscript(
            self.config, self.rounds, branches, self.bob_side, self.snapshots, self.diagnostics
        )


# -- generic restoration instrument ----------------------------------------


def _target_basis(labels: Sequence[str], pair_label: str) -> np.ndarray:
    """Permutation taking Schmidt index j to a computational state of ``labels``.

    Index 0 -> all zeros, index 1 -> only ``pair_label`` set, then the
    remaining basis states in increasing order.
    """
    n = len(labels)
    first = [0, 1 << (n - 1 - labels.index(pair_label))]
    order = first + [i for i in range(2**n) if i not in first]
    return np.eye(2**n)[:, order]


@dataclass(frozen=True, eq=False)
class Restoration:
    """Alice's instrument and Bob's per-outcome corrections for one pure state.

    Outcome labels are ``(k, True)`` for the Birkhoff-von Neumann branch
    ``k`` and, in the probabilistic variant, ``(k, False)`` for its failed
    filter.
    """

    alice: PovmEnsemble
    bob: dict
    alice_labels: tuple[str, ...]
    bob_labels: tuple[str, ...]
    spectrum: np.ndarray


def restoration(
    state: PureState,
    alice: Sequence[str],
    bob: Sequence[str],
    pair: tuple[str, str] = ("A", "B"),
    probabilistic: bool = False,
    feasibility: FeasibilityResult | None = None,
) -> Restoration:
    """Build the LOCC instrument that turns ``state`` into |Phi+> on ``pair``.

    Registers outside ``alice`` and ``bob`` must be in a product state with
    them. When the largest Schmidt weight exceeds 1/2 and ``probabilistic``
    is set, Alice first converts deterministically to the two-level
    spectrum ``(l1, 1 - l1)`` and then applies a local filter that succeeds
    with total probability ``2 (1 - l1)``.

    Raises:
        InfeasibleError: if the conversion cannot be deterministic and
            ``probabilistic`` is False.
    """
    alice, bob = tuple(alice), tuple(bob)
    spectators = [lab for lab in state.labels if lab not in alice + bob]
    core = discard(state.normalized(), spectators)
    u, sv, vh = cut_svd(core, alice, bob)
    lam = sv**2 / np.sum(sv**2)
    r = lam.size
    d_a, d_b = 2 ** len(alice), 2 ** len(bob)

    if majorized_by(lam, BELL_SPECTRUM):
        target = BELL_SPECTRUM
        filters = [(np.eye(r), True)]
    elif probabilistic:
        l1 = float(lam[0])
        target = np.array([l1, 1 - l1])
        keep = np.ones(r)
        keep[0] = math.sqrt((1 - l1) / l1)
        lose = np.zeros(r)
        lose[0] = math.sqrt(max(0.0, 1 - keep[0] ** 2))
        filters = [(np.diag(keep), True), (np.diag(lose), False)]
    else:
        raise InfeasibleError(
            f"largest Schmidt weight {lam[0]:.12g} exceeds 1/2; no deterministic restoration",
            feasibility,
        )

    weights, ops, perms = nielsen_operators(lam, target)
    t_a = _target_basis(alice, pair[0])
    t_b = _target_basis(bob, pair[1])
    to_index_b = vh.conj()

    alice_ops, labels, bob_ops = [], [], {}
    for k, (w, m, p_t) in enumerate(zip(weights, ops, perms)):
        for f, ok in filters:
            block = np.zeros((d_a, d_a), dtype=complex)
            block[:r, :r] = f @ m
            if ok:
                block[r:, r:] = math.sqrt(w) * np.eye(d_a - r)
            alice_ops.append(t_a @ block @ u.conj().T)
            labels.append((k, ok))
        perm_b = np.eye(d_b)
        perm_b[:r, :r] = p_t
        bob_ops[k] = t_b @ perm_b @ to_index_b
    return Restoration(
        PovmEnsemble(tuple(alice_ops), tuple(labels)), bob_ops, alice, bob, lam
    )


def _apply_restoration(run: _Run, rest: Restoration | Callable, where: str) -> None:
    def povm_for(outs, s):
        return (rest(outs, s) if callable(rest) else rest).alice

    def bob_for(outs, s):
        r = rest(outs[:-1], None) if callable(rest) else rest
        return r.bob[outs[-1][0]]

    alice_labels = rest.alice_labels if isinstance(rest, Restoration) else ALICE
    run.measure("Alice", f"Birkhoff-von Neumann POVM on {where}", povm_for, alice_labels)
    run.unitary("Bob", "permutation correction on (B, B')", bob_for, BOB)


def _failed(outs: tuple) -> bool:
    return any(isinstance(o, tuple) and len(o) == 2 and o[1] is False for o in outs)


def _closed_form(fn, *args) -> FeasibilityResult | None:
    try:
        return fn(*args)
    except DomainError:
        return None


# -- GHZ -------------------------------------------------------------------


def _ghz_start(theta: float, alpha: float) -> PureState:
    # alpha = 1 (product Bank state) is admitted so curves can reach their endpoint
    if alpha == 1:
        bank = basis_state("000", ("A'", "B'", "K"))
    else:
        bank = make_ghz(alpha)
    return tensor(make_link_state(theta), bank)


def run_ghz_bank_measures(theta: float, alpha: float, probabilistic: bool = False) -> ProtocolTranscript:
    """Bank measures K in the Hadamard basis and broadcasts one bit.

    On ``-`` Bob first applies sigma_z to B', which maps the branch onto
    the ``+`` branch; Alice then runs the POVM built for the ``+`` branch
    and Bob applies the matching permutation.
    """
    config = ProtocolConfig(theta, "ghz", (alpha,), "bank_measures", probabilistic)
    run = _Run(config, _ghz_start(theta, alpha), BOB)
    run.measure("Bank", "Hadamard-basis measurement of K", HADAMARD_POVM, ("K",))
    run.unitary(
        "Bob", "sigma_z on B' when the Bank reports '-'",
        lambda outs, s: Z if outs[-1] == "-" else None, ("B'",),
    )
    plus = next(s for _, s, outs in run.paths if outs == ("+",))
    rest = restoration(
        plus, ALICE, BOB, probabilistic=probabilistic,
        feasibility=_closed_form(ghz_feasible, theta, alpha),
    )
    _apply_restoration(run, rest, "(A, A')")
    return run.finish(failed=_failed)


def run_ghz_deferred(theta: float, alpha: float) -> ProtocolTranscript:
    """Alice and Bob run the ``+``-branch LOCC map before the Bank measures.

    The Alice-outcome branches are then ``(|T>|+> + Zt_k|T>|->)/sqrt(2)``
    with ``|T> = |Phi+>_AB |00>_A'B'`` and
    ``Zt_k = U_k sigma_z(B') U_k^dag``. Tracing out K leaves a dephased
    mixture; the Bank's Hadamard measurement and one bit let Bob undo
    ``Zt_k`` on ``-``.

    ``diagnostics`` holds per Alice outcome ``k``: the branch weight, the
    Bell fidelity with K traced out (``pre_bank_fidelity``) and the overlap
    with the coherent form above (``coherent_form_fidelity``).
    """
    config = ProtocolConfig(theta, "ghz", (alpha,), "deferred")
    start = _ghz_start(theta, alpha)
    plus = apply_local(start, HADAMARD_POVM.operators[0], ("K",)).normalized()
    rest = restoration(plus, ALICE, BOB, feasibility=_closed_form(ghz_feasible, theta, alpha))

    run = _Run(config, start, BOB)
    _apply_restoration(run, rest, "(A, A')")

    junk = basis_state("00", ("A'", "B'"))
    target = tensor(bell_state(), junk)
    ket_plus = PureState(("K",), [1 / math.sqrt(2), 1 / math.sqrt(2)])
    ket_minus = PureState(("K",), [1 / math.sqrt(2), -1 / math.sqrt(2)])
    z_b = np.kron(np.eye(2), Z)
    twists, records = {}, []
    for p, s, outs in run.paths:
        k = outs[0][0]
        u_k = rest.bob[k]
        twist = u_k @ z_b @ u_k.conj().T
        twists[k] = twist
        coherent = PureState(
            tensor(target, ket_plus).labels,
            (tensor(target, ket_plus).amplitudes
             + tensor(apply_local(target, twist, BOB), ket_minus).amplitudes) / math.sqrt(2),
        )
        records.append({
            "outcome": k,
            "probability": p,
            "pre_bank_fidelity": fidelity_to_bell(s),
            "coherent_form_fidelity": fidelity(coherent, s),
        })
    run.diagnostics["pre_bank"] = records

    run.measure("Bank", "Hadamard-basis measurement of K", HADAMARD_POVM, ("K",))
    run.unitary(
        "Bob", "undo U_k sigma_z(B') U_k^dag when the Bank reports '-'",
        lambda outs, s: twists[outs[0][0]].conj().T if outs[-1] == "-" else None, BOB,
    )
    return run.finish()


def run_ghz_transfer(theta: float, alpha: float, probabilistic: bool = False) -> ProtocolTranscript:
    """The Bank hands K to Alice, who measures (A, A', K) jointly."""
    config = ProtocolConfig(theta, "ghz", (alpha,), "transfer", probabilistic)
    start = _ghz_start(theta, alpha)
    rest = restoration(
        start, ALICE_WITH_K, BOB, probabilistic=probabilistic,
        feasibility=_closed_form(ghz_feasible, theta, alpha),
    )
    run = _Run(config, start, BOB)
    run.note("Bank", "transfer K to Alice")
    _apply_restoration(run, rest, "(A, A', K)")
    return run.finish(failed=_failed)


# -- W ---------------------------------------------------------------------


def _w_start(theta, alpha, beta, gamma) -> PureState:
    return tensor(make_link_state(theta), make_w(alpha, beta, gamma))


def run_w_bank_measures(
    theta: float, alpha: float, beta: float, gamma: float, probabilistic: bool = False
) -> ProtocolTranscript:
    """Bank measures K in the Hadamard basis; each branch gets its own POVM."""
    config = ProtocolConfig(theta, "w", (alpha, beta, gamma), "bank_measures", probabilistic)
    closed = _closed_form(w_meas_feasible, theta, alpha, beta, gamma)
    run = _Run(config, _w_start(theta, alpha, beta, gamma), BOB)
    run.measure("Bank", "Hadamard-basis measurement of K", HADAMARD_POVM, ("K",))
    per_branch = {
        outs: restoration(s, ALICE, BOB, probabilistic=probabilistic, feasibility=closed)
        for _, s, outs in run.paths
    }
    _apply_restoration(run, lambda outs, s: per_branch[outs[:1]], "(A, A')")
    return run.finish(failed=_failed)


def run_w_transfer(
    theta: float, alpha: float, beta: float, gamma: float, probabilistic: bool = False
) -> ProtocolTranscript:
    config = ProtocolConfig(theta, "w", (alpha, beta, gamma), "transfer", probabilistic)
    start = _w_start(theta, alpha, beta, gamma)
    rest = restoration(
        start, ALICE_WITH_K, BOB, probabilistic=probabilistic,
        feasibility=_closed_form(w_trans_feasible, theta, beta),
    )
    run = _Run(config, start, BOB)
    run.note("Bank", "transfer K to Alice")
    _apply_restoration(run, rest, "(A, A', K)")
    return run.finish(failed=_failed)


# -- catalysis -------------------------------------------------------------


def make_catalyst(c1: float) -> PureState:
    """sqrt(c1)|00> + sqrt(1 - c1)|11> on (A', B')."""
    if not 0.5 <= c1 < 1:
        raise DomainError(f"catalyst weight c1 must lie in [1/2, 1), got {c1}")
    return PureState(("A'", "B'"), [math.sqrt(c1), 0, 0, math.sqrt(1 - c1)])


def catalysis_spectra(theta: float, c1: float) -> tuple[np.ndarray, np.ndarray]:
    """Sorted input and output spectra across AA'|BB' with the catalyst attached."""
    c2 = 1 - c1
    co, si = math.cos(theta) ** 2, math.sin(theta) ** 2
    lam_in = np.sort([co * c1, co * c2, si * c1, si * c2])[::-1]
    lam_out = np.sort([c1 / 2, c1 / 2, c2 / 2, c2 / 2])[::-1]
    return lam_in, lam_out


def check_catalysis_deterministic(theta: float, c1: float) -> bool:
    """Whether the catalyst makes |psi(theta)> -> |Phi+> deterministic (only at pi/4)."""
    if not 0 < theta <= math.pi / 4 + 1e-15:
        raise DomainError(f"theta must lie in (0, pi/4], got {theta}")
    make_catalyst(c1)
    lam_in, lam_out = catalysis_spectra(theta, c1)
    return majorized_by(lam_in, lam_out)


def catalysis_filter(theta: float) -> PovmEnsemble:
    """Two-outcome filter on A: ``diag(tan theta, 1)`` and its complement."""
    t = math.tan(theta)
    succ = np.diag([t, 1.0])
    fail = np.diag([math.sqrt(max(0.0, 1 - t * t)), 0.0])
    return PovmEnsemble((succ, fail), ("success", "failure"))


def run_catalysis(theta: float, c1: float) -> ProtocolTranscript:
    """Single-sided filter on A with the catalyst on (A', B') left untouched.

    ``diagnostics["catalyst_fidelity"]`` is the overlap of the success
    branch's (A', B') state with the original catalyst.
    """
    if not 0 < theta <= math.pi / 4 + 1e-15:
        raise DomainError(f"theta must lie in (0, pi/4], got {theta}")
    catalyst = make_catalyst(c1)
    config = ProtocolConfig(theta, "catalyst", (c1,), "filter", True)
    run = _Run(config, tensor(make_link_state(theta), catalyst), BOB)
    run.measure("Alice", "Procrustean filter on A", catalysis_filter(theta), ("A",))
    cat = catalyst.amplitudes
    for p, s, outs in run.paths:
        if outs == ("success",):
            rho = reduced_density_matrix(s, ("A'", "B'"))
            run.diagnostics["catalyst_fidelity"] = float(np.vdot(cat, rho @ cat).real)
    return run.finish(failed=lambda outs: outs[-1] == "failure")


# -- routing ---------------------------------------------------------------


def _complete_unitary(columns: Sequence[np.ndarray], dim: int = 4) -> np.ndarray:
    """Extend orthonormal columns to a unitary by Gram-Schmidt over e_0, e_1, ..."""
    cols = [np.asarray(c, dtype=complex) for c in columns]
    for i in range(dim):
        if len(cols) == dim:
            break
        v = np.eye(dim, dtype=complex)[:, i]
        for c in cols:
            v = v - np.vdot(c, v) * c
        n = np.linalg.norm(v)
        if n > 1e-8:
            cols.append(v / n)
    return np.column_stack(cols)


def routing_unitaries(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """``(U_KA, U_KB)`` in the bit orders (A, K) and (K, B).

    ``U_KA``: |00> -> |Phi+>, |10> -> |Psi+>; the inputs |01>, |11> go to
    the Gram-Schmidt completion. ``U_KB`` sends
    ``cos|00> + sin|11>`` to |00> and ``cos|10> + sin|01>`` to |01>.
    """
    c, s = math.cos(theta), math.sin(theta)
    r = 1 / math.sqrt(2)
    outs = _complete_unitary([np.array([r, 0, 0, r]), np.array([0, r, r, 0])])
    u_ka = np.zeros((4, 4), dtype=complex)
    for col, inp in enumerate([0b00, 0b10, 0b01, 0b11]):
        u_ka[:, inp] = outs[:, col]
    w = _complete_unitary([np.array([c, 0, 0, s]), np.array([0, s, c, 0])])
    return u_ka, w.conj().T


def run_routing(theta: float) -> ProtocolTranscript:
    """Bank ancilla K in |0> interacts with A, then travels to B.

    ``diagnostics`` records the overlap of the final state with
    ``|Phi+>_AB |0>_K`` and the population of |0> on K.
    """
    if not 0 < theta <= math.pi / 4 + 1e-15:
        raise DomainError(f"theta must lie in (0, pi/4], got {theta}")
    u_ka, u_kb = routing_unitaries(theta)
    config = ProtocolConfig(theta, "none", (), "routing")
    start = tensor(basis_state("0", ("K",)), make_link_state(theta))
    run = _Run(config, start, ("B",))
    run.unitary("Bank", "U_KA on (A, K)", u_ka, ("A", "K"))
    run.unitary("Bank", "U_KB on (K, B) after carrying K to Bob", u_kb, ("K", "B"), qubits_sent=1)
    final = run.paths[0][1]
    goal = tensor(bell_state(), basis_state("0", ("K",)))
    run.diagnostics["final_fidelity"] = fidelity(goal, final)
    run.diagnostics["k_zero_population"] = float(reduced_density_matrix(final, ("K",))[0, 0].real)
    return run.finish()


def check_single_sided_invariance(theta: float, unitary_on_ka, atol: float = 1e-10) -> bool:
    """A unitary on (K, A) alone leaves the (K A)|B spectrum at {cos^2, sin^2}."""
    u = np.asarray(unitary_on_ka, dtype=complex)
    if u.shape != (4, 4) or not np.allclose(u.conj().T @ u, np.eye(4), atol=1e-10):
        raise DomainError("expected a 4x4 unitary on (K, A)")
    start = tensor(basis_state("0", ("K",)), make_link_state(theta))
    after = apply_local(start, u, ("K", "A"))
    lam = schmidt(after, ("K", "A")).coefficients
    expect = np.sort([math.cos(theta) ** 2, math.sin(theta) ** 2])[::-1]
    lam = np.concatenate([lam, np.zeros(2 - lam.size)]) if lam.size < 2 else lam
    return bool(lam.size == 2 and np.allclose(lam, expect, atol=atol, rtol=0))


# -- entanglement accounting -----------------------------------------------


def entanglement_profile(transcript: ProtocolTranscript) -> list[float]:
    """Branch-weighted entanglement entropy across Bob's cut, one value per snapshot."""
    return [
        float(sum(p * entanglement_entropy(s, transcript.bob_side) for p, s in snap))
        for snap in transcript.snapshots
    ]


def audit_monotonicity(transcript: ProtocolTranscript, tol: float = MONOTONE_TOL) -> bool:
    """Average entanglement never grows in a round beyond the qubits it carries across."""
    profile = entanglement_profile(transcript)
    return all(
        after <= before + rnd.qubits_sent + tol
        for before, after, rnd in zip(profile, profile[1:], transcript.rounds)
    )


__all__ = [
    "Branch",
    "ProtocolConfig",
    "ProtocolTranscript",
    "Restoration",
    "Round",
    "audit_monotonicity",
    "catalysis_filter",
    "catalysis_spectra",
    "check_catalysis_deterministic",
    "check_single_sided_invariance",
    "entanglement_profile",
    "make_catalyst",
    "restoration",
    "routing_unitaries",
    "run_catalysis",
    "run_ghz_bank_measures",
    "run_ghz_deferred",
    "run_ghz_transfer",
    "run_routing",
    "run_w_bank_measures",
    "run_w_transfer",
]
