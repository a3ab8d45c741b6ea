"""Bloch-ball geometry of teleportation through a partially entangled pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .qstate import (
    I2,
    PAULIS,
    PureState,
    X,
    Z,
    apply_local,
    bloch_vector,
    make_link_state,
    measure_outcomes,
    projective_povm,
    reduced_density_matrix,
    schmidt,
    tensor,
)

SINGULAR_TOL = 1e-10

_s = 1 / np.sqrt(2)
BELL_BASIS = {
    "phi+": np.array([_s, 0, 0, _s], dtype=complex),
    "phi-": np.array([_s, 0, 0, -_s], dtype=complex),
    "psi+": np.array([0, _s, _s, 0], dtype=complex),
    "psi-": np.array([0, _s, -_s, 0], dtype=complex),
}
# Bob's correction per Bell outcome (X applied before Z for psi-). With the
# resource cos|00> + sin|11>, these corrections flip the sign of T_yy.
PAULI_CORRECTIONS = {
    "phi+": I2,
    "phi-": Z,
    "psi+": X,
    "psi-": Z @ X,
}
BELL_MEASUREMENT = projective_povm(list(BELL_BASIS.values()), list(BELL_BASIS))


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """Image of the Bloch ball; axes in [0, 1], centered at the origin for unital maps."""

    semi_axes: tuple[float, float, float]
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def volume(self) -> float:
        a, b, c = self.semi_axes
        return 4 * np.pi / 3 * a * b * c

    def is_ball(self, tol: float = 1e-12) -> bool:
        return all(abs(x - 1) <= tol for x in self.semi_axes)


def _check_theta(theta: float) -> None:
    if not 0 < theta < np.pi / 2:
        raise DomainError(f"theta must lie in (0, pi/2), got {theta}")


def correlation_matrix(resource: PureState) -> np.ndarray:
    """``T_ij = Tr(rho sigma_i (x) sigma_j)`` for a two-qubit pure resource."""
    if resource.n_qubits != 2:
        raise DomainError(f"correlation matrix needs a two-qubit state, got {resource.labels}")
    psi = resource.normalized().amplitudes
    return np.array(
        [[np.vdot(psi, np.kron(si, sj) @ psi).real for sj in PAULIS] for si in PAULIS]
    )


def effective_contraction(theta: float) -> np.ndarray:
    _check_theta(theta)
    s = np.sin(2 * theta)
    return np.diag([s, s, 1.0])


def image_ellipsoid(t: np.ndarray) -> Ellipsoid:
    """Semi-axes of ``T`` applied to the unit ball.

    Diagonal maps keep their axis order; otherwise the singular values are
    returned in descending order.
    """
    t = np.asarray(t, dtype=float)
    if np.allclose(t, np.diag(np.diag(t)), atol=0):
        axes = np.abs(np.diag(t))
    else:
        axes = np.linalg.svd(t, compute_uv=False)
    if np.any(axes > 1 + SINGULAR_TOL):
        raise DomainError(f"singular values {axes} exceed 1; not a channel contraction")
    return Ellipsoid(tuple(float(min(a, 1.0)) for a in axes))


def ellipsoid_volume(theta: float) -> float:
    """Volume of the image of the Bloch ball, ``(4 pi / 3) sin^2(2 theta)``."""
    return float(np.linalg.det(effective_contraction(theta)) * 4 * np.pi / 3)


def _bloch_to_pure_mixture(v: np.ndarray) -> list[tuple[float, np.ndarray]]:
    rho = 0.5 * (I2 + sum(c * s for c, s in zip(v, PAULIS)))
    w, vecs = np.linalg.eigh(rho)
    return [(float(p), vecs[:, i]) for i, p in enumerate(w) if p > 1e-15]


def simulate_teleport_channel(theta: float, input_bloch) -> np.ndarray:
    """Teleport a qubit with Bloch vector ``input_bloch`` through ``psi(theta)``.

    Runs the Bell measurement on (Q, A), applies the Pauli correction on B for
    each outcome and returns the Bloch vector of Bob's exact average output.
    Mixed inputs are handled by their eigen-decomposition.
    """
    v = np.asarray(input_bloch, dtype=float).reshape(3)
    if np.linalg.norm(v) > 1 + 1e-12:
        raise DomainError(f"Bloch vector {v} lies outside the unit ball")
    link = make_link_state(theta)
    rho_out = np.zeros((2, 2), dtype=complex)
    for weight, vec in _bloch_to_pure_mixture(v):
        state = tensor(PureState(("Q",), vec), link)
        for outcome, p, branch in measure_outcomes(state, BELL_MEASUREMENT, ("Q", "A")):
            fixed = apply_local(branch, PAULI_CORRECTIONS[outcome], ("B",))
            rho_out += weight * p * reduced_density_matrix(fixed, ("B",))
    return bloch_vector(rho_out)


def max_singlet_fraction(resource: PureState) -> float:
    """Largest overlap with |Phi+> reachable by local unitaries: ``(sum sqrt(lambda))^2 / 2``."""
    if resource.n_qubits != 2:
        raise DomainError("max singlet fraction is defined here for two-qubit states")
    lam = schmidt(resource, resource.labels[:1]).coefficients
    return float(np.sum(np.sqrt(lam)) ** 2 / 2)


def optimal_teleport_fidelity(singlet_fraction: float) -> float:
    return (2 * singlet_fraction + 1) / 3
