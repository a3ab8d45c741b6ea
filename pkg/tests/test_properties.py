"""Property-based checks of the structural invariants."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from assisted_teleport.channel import effective_contraction, simulate_teleport_channel
from assisted_teleport.feasibility import (
    ghz_feasible,
    ghz_pmax,
    symmetric_slice,
    w_meas_lambda_max,
    w_trans_interval,
)
from assisted_teleport.majorize import (
    bvn_decompose,
    majorized_by,
    nielsen_operators,
    solve_doubly_stochastic,
    vidal_pmax,
)
from assisted_teleport.protocols import (
    audit_monotonicity,
    check_single_sided_invariance,
    run_catalysis,
    run_ghz_bank_measures,
    run_routing,
)
from assisted_teleport.qstate import (
    HADAMARD_POVM,
    PureState,
    apply_local,
    entanglement_entropy,
    fidelity,
    make_ghz,
    make_link_state,
    make_w,
    measure_branches,
    schmidt,
    tensor,
)

SETTINGS = settings(max_examples=60, deadline=None)
seeds = st.integers(0, 2**32 - 1)
thetas = st.floats(0.01, math.pi / 4)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState(tuple(f"q{i}" for i in range(n)), v / np.linalg.norm(v))


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_spectrum(rng, d, zeros=True):
    lam = rng.dirichlet(np.ones(d) * rng.uniform(0.2, 2))
    if zeros and d > 1 and rng.random() < 0.3:
        lam[rng.integers(d)] = 0
        lam /= lam.sum()
    return np.sort(lam)[::-1]


@SETTINGS
@given(seeds, st.integers(2, 6))
def test_schmidt_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    state = random_state(rng, n)
    k = int(rng.integers(1, n))
    side = tuple(rng.choice(state.labels, size=k, replace=False))
    dec = schmidt(state, side)
    assert np.all(np.diff(dec.coefficients) <= 1e-15)
    assert abs(dec.coefficients.sum() - 1) < 1e-12
    assert fidelity(dec.reconstruct(), state) >= 1 - 1e-10


@SETTINGS
@given(seeds, st.integers(2, 6))
def test_entropy_bounds(seed, n):
    rng = np.random.default_rng(seed)
    state = random_state(rng, n)
    k = int(rng.integers(1, n))
    e = entanglement_entropy(state, state.labels[:k])
    assert -1e-12 <= e <= min(k, n - k) + 1e-12


@SETTINGS
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_norm_preservation(seed, n1, n2):
    rng = np.random.default_rng(seed)
    a = random_state(rng, n1)
    b = PureState(tuple(f"r{i}" for i in range(n2)), random_state(rng, n2).amplitudes)
    joint = tensor(a, b)
    assert abs(joint.norm() ** 2 - 1) < 1e-12
    k = min(2, joint.n_qubits)
    targets = joint.labels[-k:]
    moved = apply_local(joint, random_unitary(rng, 2**k), targets)
    assert abs(moved.norm() ** 2 - 1) < 1e-12
    for _, branch in measure_branches(moved, HADAMARD_POVM, targets[:1]):
        assert abs(branch.norm() ** 2 - 1) < 1e-12


@SETTINGS
@given(seeds)
def test_unentangled_label_moves_freely(seed):
    rng = np.random.default_rng(seed)
    core = random_state(rng, 4)
    ancilla = PureState(("K",), random_state(rng, 1).amplitudes)
    joint = tensor(core, ancilla)
    left = schmidt(joint, ("q0", "q1")).coefficients
    right = schmidt(joint, ("q0", "q1", "K")).coefficients
    np.testing.assert_allclose(left, right, atol=1e-12)


@SETTINGS
@given(thetas, st.floats(0.01, 0.99))
def test_bank_side_spectrum(theta, a2):
    state = tensor(make_link_state(theta), make_ghz(math.sqrt(a2)))
    lam = schmidt(state, ("A", "A'", "K")).coefficients
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    expect = np.sort([a2 * c2, (1 - a2) * c2, a2 * s2, (1 - a2) * s2])[::-1]
    np.testing.assert_allclose(lam, expect[expect > 1e-14], atol=1e-12)


@SETTINGS
@given(seeds, st.integers(1, 8))
def test_majorization_iff_certain(seed, d):
    rng = np.random.default_rng(seed)
    s, t = random_spectrum(rng, d), random_spectrum(rng, d)
    assert majorized_by(s, t) == (abs(vidal_pmax(s, t) - 1) <= 1e-12)


@SETTINGS
@given(seeds, st.integers(1, 6))
def test_bvn_reconstruction(seed, d):
    rng = np.random.default_rng(seed)
    s, t = random_spectrum(rng, d, zeros=False), random_spectrum(rng, d)
    assume(majorized_by(s, t))
    dmat = solve_doubly_stochastic(s, t)
    np.testing.assert_allclose(dmat @ t, s, atol=1e-12)
    dec = bvn_decompose(dmat)
    assert np.max(np.abs(dec.reconstruct() - dmat)) <= 1e-10
    assert len(dec) <= (d - 1) ** 2 + 1
    # each pass clears at least one positive entry and the last clears d
    assert len(dec) <= np.count_nonzero(dmat > 1e-12) - d + 1


@SETTINGS
@given(seeds, st.integers(2, 4))
def test_nielsen_completeness(seed, d):
    rng = np.random.default_rng(seed)
    s, t = random_spectrum(rng, d), random_spectrum(rng, d)
    if not majorized_by(s, t):
        s = np.full(d, 1 / d)
    weights, ops, perms = nielsen_operators(s, t)
    total = sum(m.conj().T @ m for m in ops)
    np.testing.assert_allclose(total, np.eye(d), atol=1e-10)
    assert abs(sum(weights) - 1) <= 1e-10
    for p in perms:
        np.testing.assert_allclose(p @ p.T, np.eye(d), atol=0)


@SETTINGS
@given(thetas, st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_channel_matches_contraction(theta, x, y, z):
    v = np.array([x, y, z])
    n = np.linalg.norm(v)
    if n > 1:
        v = v / n
    np.testing.assert_allclose(
        simulate_teleport_channel(theta, v), effective_contraction(theta) @ v, atol=1e-10
    )


@SETTINGS
@given(thetas, st.floats(0.01, 0.99))
def test_ghz_runs_match_closed_form(theta, a2):
    t = run_ghz_bank_measures(theta, math.sqrt(a2), probabilistic=True)
    assert abs(t.total_probability() - 1) < 1e-10
    assert abs(t.success_probability - ghz_pmax(theta, math.sqrt(a2))) < 1e-9
    assert t.deterministic == ghz_feasible(theta, math.sqrt(a2)).feasible or (
        abs(ghz_feasible(theta, math.sqrt(a2)).margin) < 1e-9
    )
    assert audit_monotonicity(t)


@SETTINGS
@given(thetas, st.floats(0.01, 0.98))
def test_w_hadamard_branch_spectrum(theta, b2):
    alpha, beta, gamma = symmetric_slice(b2)
    state = tensor(make_link_state(theta), make_w(alpha, beta, gamma))
    lam = w_meas_lambda_max(theta, beta, gamma)
    for _, branch in measure_branches(state, HADAMARD_POVM, ("K",)):
        assert abs(schmidt(branch, ("A", "A'")).lambda_max - lam) < 1e-12


@SETTINGS
@given(thetas)
def test_separation_interval_length(theta):
    lo, hi = w_trans_interval(theta)
    assert abs((hi - lo) - math.tan(theta) ** 2) < 1e-10


@SETTINGS
@given(st.floats(0.05, math.pi / 4), st.floats(0.5, 0.99))
def test_catalysis_invariants(theta, c1):
    t = run_catalysis(theta, c1)
    assert abs(t.success_probability - 2 * math.sin(theta) ** 2) < 1e-12
    assert t.diagnostics["catalyst_fidelity"] >= 1 - 1e-10
    assert audit_monotonicity(t)


@SETTINGS
@given(st.floats(0.01, math.pi / 4), seeds)
def test_routing_invariants(theta, seed):
    t = run_routing(theta)
    assert t.diagnostics["final_fidelity"] >= 1 - 1e-10
    assert audit_monotonicity(t)
    assert check_single_sided_invariance(theta, random_unitary(np.random.default_rng(seed), 4))
