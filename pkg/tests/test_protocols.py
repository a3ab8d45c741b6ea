import math
from dataclasses import replace

import numpy as np
import pytest

from assisted_teleport.errors import DomainError, InfeasibleError
from assisted_teleport.feasibility import (
    ghz_feasible,
    ghz_pmax,
    symmetric_slice,
    w_meas_feasible,
    w_meas_pmax,
    w_trans_feasible,
    w_trans_pmax,
)
from assisted_teleport.protocols import (
    ProtocolTranscript,
    audit_monotonicity,
    check_catalysis_deterministic,
    check_single_sided_invariance,
    entanglement_profile,
    make_catalyst,
    restoration,
    routing_unitaries,
    run_catalysis,
    run_ghz_bank_measures,
    run_ghz_deferred,
    run_ghz_transfer,
    run_routing,
    run_w_bank_measures,
    run_w_transfer,
)
from assisted_teleport.qstate import (
    HADAMARD_POVM,
    PHI_PLUS,
    Z,
    apply_local,
    bell_state,
    make_ghz,
    make_link_state,
    reduced_density_matrix,
    tensor,
)

PI8 = math.pi / 8


def check_transcript(tr: ProtocolTranscript):
    assert tr.total_probability() == pytest.approx(1, abs=1e-10)
    assert tr.deterministic == all(b.bell_fidelity >= 1 - 1e-9 for b in tr.branches)
    assert audit_monotonicity(tr)


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / abs(np.diag(r)))


def runs_deterministically(fn, *args):
    try:
        return fn(*args).deterministic
    except InfeasibleError:
        return False


class TestGhzBankMeasures:
    def test_saturating(self):
        tr = run_ghz_bank_measures(math.pi / 6, math.sqrt(2 / 3))
        check_transcript(tr)
        assert tr.deterministic
        assert tr.total_bank_bits == 1
        assert all(b.bell_fidelity == pytest.approx(1, abs=1e-12) for b in tr.branches)

    def test_maximal(self):
        tr = run_ghz_bank_measures(math.pi / 4, 1 / math.sqrt(2))
        check_transcript(tr)
        assert tr.deterministic

    def test_infeasible_carries_bound(self):
        with pytest.raises(InfeasibleError) as err:
            run_ghz_bank_measures(PI8, math.sqrt(0.9))
        assert err.value.result is not None
        assert err.value.result.bound == pytest.approx(0.585786, abs=1e-6)
        assert not err.value.result.feasible

    def test_round_structure(self):
        tr = run_ghz_bank_measures(0.5, math.sqrt(0.6))
        actors = [r.actor for r in tr.rounds]
        assert actors == ["Bank", "Bob", "Alice", "Bob"]
        n_outcomes = len({b.outcomes[1] for b in tr.branches})
        assert tr.rounds[2].bits == math.ceil(math.log2(n_outcomes))

    def test_probabilistic(self):
        tr = run_ghz_bank_measures(PI8, math.sqrt(0.9), probabilistic=True)
        check_transcript(tr)
        assert not tr.deterministic
        assert tr.success_probability == pytest.approx(0.463604, abs=1e-6)
        for b in tr.branches:
            assert b.success == (b.bell_fidelity >= 1 - 1e-9)

    def test_degenerate_bank(self):
        tr = run_ghz_bank_measures(PI8, 1.0, probabilistic=True)
        assert tr.success_probability == pytest.approx(2 * math.sin(PI8) ** 2, abs=1e-12)


def pre_bank_oracle(twist):
    """Bell fidelity on AB of (|T>|+> + Zt|T>|->)/sqrt(2) with K and A'B' traced out.

    ``|T> = |Phi+>_AB |00>_A'B'`` and ``twist`` acts on (B, B'). Tracing K
    leaves the equal mixture of |T> and Zt|T>.
    """
    t = np.zeros((2, 2, 2, 2), dtype=complex)  # A, B, A', B'
    t[0, 0, 0, 0] = t[1, 1, 0, 0] = 1 / math.sqrt(2)
    zt = np.einsum("bdjl,ijkl->ibkd", twist.reshape(2, 2, 2, 2), t)

    def fid(vec):
        m = vec.reshape(4, 4)
        rho = m @ m.conj().T
        return float(np.vdot(PHI_PLUS, rho @ PHI_PLUS).real)

    return 0.5 * (fid(t) + fid(zt))


class TestGhzDeferred:
    def test_saturating(self):
        tr = run_ghz_deferred(math.pi / 6, math.sqrt(2 / 3))
        check_transcript(tr)
        assert tr.deterministic
        assert tr.total_bank_bits == 1
        records = tr.diagnostics["pre_bank"]
        assert all(r["coherent_form_fidelity"] == pytest.approx(1, abs=1e-10) for r in records)
        avg = sum(r["probability"] * r["pre_bank_fidelity"] for r in records)
        assert avg < 1 - 1e-6

    def test_pre_bank_against_oracle(self):
        theta, alpha = math.pi / 6, math.sqrt(2 / 3)
        start = tensor(make_link_state(theta), make_ghz(alpha))
        plus = apply_local(start, HADAMARD_POVM.operators[0], ("K",)).normalized()
        rest = restoration(plus, ("A", "A'"), ("B", "B'"))
        tr = run_ghz_deferred(theta, alpha)
        z_b = np.kron(np.eye(2), Z)
        for rec in tr.diagnostics["pre_bank"]:
            u = rest.bob[rec["outcome"]]
            expect = pre_bank_oracle(u @ z_b @ u.conj().T)
            assert rec["pre_bank_fidelity"] == pytest.approx(expect, abs=1e-10)

    def test_maximal(self):
        tr = run_ghz_deferred(math.pi / 4, 1 / math.sqrt(2))
        check_transcript(tr)
        assert tr.deterministic and tr.total_bank_bits == 1

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            run_ghz_deferred(PI8, math.sqrt(0.9))


class TestGhzTransfer:
    def test_saturating(self):
        tr = run_ghz_transfer(math.pi / 6, math.sqrt(2 / 3))
        check_transcript(tr)
        assert tr.deterministic and tr.total_bank_bits == 0

    def test_maximal(self):
        assert run_ghz_transfer(math.pi / 4, 0.6).deterministic

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            run_ghz_transfer(PI8, math.sqrt(0.9))

    def test_probabilistic_matches_pmax(self):
        tr = run_ghz_transfer(0.3, math.sqrt(0.85), probabilistic=True)
        assert tr.success_probability == pytest.approx(ghz_pmax(0.3, math.sqrt(0.85)), abs=1e-9)


class TestW:
    def test_meas_feasible_example(self):
        a, b, g = math.sqrt(0.1), math.sqrt(0.45), math.sqrt(0.45)
        tr = run_w_bank_measures(0.7, a, b, g)
        check_transcript(tr)
        assert tr.deterministic and tr.total_bank_bits == 1

    def test_meas_maximal(self):
        a, b, g = symmetric_slice(0.2)
        assert run_w_bank_measures(math.pi / 4, a, b, g).deterministic

    @pytest.mark.parametrize("beta2", [0.2, 0.5, 0.8])
    def test_meas_slice_infeasible(self, beta2):
        with pytest.raises(InfeasibleError) as err:
            run_w_bank_measures(PI8, *symmetric_slice(beta2))
        assert err.value.result.bound == pytest.approx(1 - math.tan(PI8) ** 4)

    def test_transfer_witness(self):
        a, b, g = symmetric_slice(0.5)
        tr = run_w_transfer(PI8, a, b, g)
        check_transcript(tr)
        assert tr.deterministic and tr.total_bank_bits == 0

    def test_transfer_infeasible(self):
        with pytest.raises(InfeasibleError):
            run_w_transfer(PI8, *symmetric_slice(0.2))

    def test_transfer_maximal_link_edges(self):
        for b2 in (0.01, 0.99):
            assert run_w_transfer(math.pi / 4, *symmetric_slice(b2)).deterministic

    @pytest.mark.parametrize("beta2", [0.1, 0.3, 0.5, 0.9])
    def test_probabilistic_meas(self, beta2):
        a, b, g = symmetric_slice(beta2)
        tr = run_w_bank_measures(PI8, a, b, g, probabilistic=True)
        check_transcript(tr)
        assert tr.success_probability == pytest.approx(w_meas_pmax(PI8, b, g), abs=1e-9)

    @pytest.mark.parametrize("beta2", [0.1, 0.3, 0.9])
    def test_probabilistic_transfer(self, beta2):
        a, b, g = symmetric_slice(beta2)
        tr = run_w_transfer(PI8, a, b, g, probabilistic=True)
        assert tr.success_probability == pytest.approx(w_trans_pmax(PI8, b), abs=1e-9)

    def test_general_coefficients_meas(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            th = rng.uniform(0.3, math.pi / 4)
            a, b, g = np.sqrt(rng.dirichlet([1, 1, 1]))
            assert runs_deterministically(run_w_bank_measures, th, a, b, g) == (
                w_meas_feasible(th, a, b, g).feasible
            )


class TestCatalysis:
    @pytest.mark.parametrize(
        "theta, p", [(math.pi / 6, 0.5), (math.pi / 4, 1.0), (PI8, 0.292893)]
    )
    def test_success_probability(self, theta, p):
        tr = run_catalysis(theta, 0.8)
        check_transcript(tr)
        assert tr.success_probability == pytest.approx(p, abs=1e-6)
        assert tr.diagnostics["catalyst_fidelity"] >= 1 - 1e-10

    def test_not_deterministic_below_pi4(self):
        assert not run_catalysis(PI8, 0.6).deterministic
        assert run_catalysis(math.pi / 4, 0.6).deterministic

    def test_catalyst_independence(self):
        for c1 in (0.5, 0.6, 0.9, 0.999):
            tr = run_catalysis(PI8, c1)
            assert tr.success_probability == pytest.approx(2 * math.sin(PI8) ** 2, abs=1e-12)

    def test_deterministic_check(self):
        assert check_catalysis_deterministic(math.pi / 4, 0.9)
        assert not check_catalysis_deterministic(math.pi / 6, 0.5)
        assert not check_catalysis_deterministic(math.pi / 6, 0.999)

    def test_domain(self):
        with pytest.raises(DomainError):
            make_catalyst(0.3)
        with pytest.raises(DomainError):
            run_catalysis(1.0, 0.6)


class TestRouting:
    @pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 4, 0.1])
    def test_final_state(self, theta):
        tr = run_routing(theta)
        check_transcript(tr)
        assert tr.diagnostics["final_fidelity"] >= 1 - 1e-10
        assert tr.diagnostics["k_zero_population"] >= 1 - 1e-10
        assert tr.total_bits == 0 and len(tr.branches) == 1

    def test_unitaries(self):
        u_ka, u_kb = routing_unitaries(0.4)
        for u in (u_ka, u_kb):
            np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
        r = 1 / math.sqrt(2)
        np.testing.assert_allclose(u_ka[:, 0b00], [r, 0, 0, r], atol=1e-15)
        np.testing.assert_allclose(u_ka[:, 0b10], [0, r, r, 0], atol=1e-15)
        c, s = math.cos(0.4), math.sin(0.4)
        np.testing.assert_allclose(u_kb @ [c, 0, 0, s], [1, 0, 0, 0], atol=1e-15)
        np.testing.assert_allclose(u_kb @ [0, s, c, 0], [0, 1, 0, 0], atol=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            run_routing(1.0)

    def test_invariance(self):
        assert check_single_sided_invariance(math.pi / 6, np.eye(4))
        swap = np.eye(4)[[0, 2, 1, 3]]
        assert check_single_sided_invariance(math.pi / 6, swap)
        rng = np.random.default_rng(9)
        for _ in range(100):
            assert check_single_sided_invariance(math.pi / 6, random_unitary(rng, 4))

    def test_invariance_rejects_non_unitary(self):
        with pytest.raises(DomainError):
            check_single_sided_invariance(0.3, np.diag([1, 1, 1, 0.5]))


class TestAudit:
    def test_profile_length(self):
        tr = run_ghz_bank_measures(0.5, math.sqrt(0.6))
        prof = entanglement_profile(tr)
        assert len(prof) == len(tr.rounds) + 1
        assert prof[-1] == pytest.approx(1.0, abs=1e-9)

    def test_detects_unaccounted_increase(self):
        tr = run_routing(0.3)
        assert audit_monotonicity(tr)
        hidden = [replace(r, qubits_sent=0) for r in tr.rounds]
        forged = ProtocolTranscript(
            tr.config, hidden, tr.branches, tr.bob_side, tr.snapshots, tr.diagnostics
        )
        assert not audit_monotonicity(forged)

    def test_locc_rounds_never_increase(self):
        for tr in (
            run_ghz_bank_measures(PI8, math.sqrt(0.5)),
            run_w_transfer(PI8, *symmetric_slice(0.5)),
            run_catalysis(0.3, 0.7),
        ):
            prof = entanglement_profile(tr)
            assert all(b <= a + 1e-9 for a, b in zip(prof, prof[1:]))


class TestRestorationHelper:
    def test_bell_on_other_pair(self):
        s = tensor(make_link_state(0.7, ("X", "Y")), bell_state(("P", "Q")))
        rest = restoration(s, ("X", "P"), ("Y", "Q"), pair=("X", "Y"))
        assert rest.alice.is_complete(1e-10)

    def test_rejects_entangled_spectator(self):
        s = tensor(bell_state(("A", "P")), make_link_state(0.3, ("Q", "B")))
        with pytest.raises(DomainError):
            restoration(s, ("A",), ("B",))


class TestFeasibilityAgreement:
    """Simulation is deterministic exactly where the closed form says feasible."""

    thetas = np.linspace(0.02, math.pi / 4, 50)
    params = np.linspace(0.02, 0.98, 50)

    @pytest.mark.parametrize("runner", [run_ghz_bank_measures, run_ghz_transfer])
    def test_ghz(self, runner):
        bad = [
            (th, a2)
            for th in self.thetas
            for a2 in self.params
            if runs_deterministically(runner, th, math.sqrt(a2))
            != ghz_feasible(th, math.sqrt(a2)).feasible
        ]
        assert bad == []

    def test_w_meas(self):
        bad = []
        for th in self.thetas:
            for b2 in self.params:
                a, b, g = symmetric_slice(b2)
                if runs_deterministically(run_w_bank_measures, th, a, b, g) != (
                    w_meas_feasible(th, a, b, g).feasible
                ):
                    bad.append((th, b2))
        assert bad == []

    def test_w_transfer(self):
        bad = []
        for th in self.thetas:
            for b2 in self.params:
                a, b, g = symmetric_slice(b2)
                if runs_deterministically(run_w_transfer, th, a, b, g) != (
                    w_trans_feasible(th, b).feasible
                ):
                    bad.append((th, b2))
        assert bad == []


def test_reduced_state_after_restoration_is_bell():
    tr = run_w_transfer(PI8, *symmetric_slice(0.45))
    for b in tr.branches:
        rho = reduced_density_matrix(b.state, ("A", "B"))
        np.testing.assert_allclose(rho, np.outer(PHI_PLUS, PHI_PLUS.conj()), atol=1e-9)
