"""Closed-form feasibility regions, success probabilities and Bank costs.

Angles are the link parameter theta of ``cos(theta)|00> + sin(theta)|11>``
and are restricted to (0, pi/4], where the smaller Schmidt weight sits on
``|11>``. Resource parameters are amplitudes (not squares) unless the name
ends in ``2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LabelError
from .majorize import bell_pmax
from .qstate import PureState, entanglement_entropy, schmidt, tensor

MARGIN_TOL = 1e-12
MINIMAX_TOL = 1e-9

ALICE_BANK = ("A", "A'")
BOB = ("B", "B'")


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of a feasibility test.

    ``binding_value`` is the evaluated constraint quantity, ``bound`` the
    threshold it is compared with, and ``margin`` the signed slack
    (negative when violated).
    """

    feasible: bool
    binding_value: float
    bound: float
    margin: float

    @classmethod
    def from_margin(cls, binding_value: float, bound: float, margin: float) -> "FeasibilityResult":
        return cls(bool(margin >= -MARGIN_TOL), float(binding_value), float(bound), float(margin))


def _check_theta(theta: float) -> None:
    if not 0 < theta <= math.pi / 4 + 1e-15:
        raise DomainError(f"theta must lie in (0, pi/4], got {theta}")


def _check_unit(name: str, x: float) -> None:
    if not 0 < x < 1:
        raise DomainError(f"{name} must lie in (0, 1), got {x}")


def _check_w(alpha: float, beta: float, gamma: float) -> None:
    if min(alpha, beta, gamma) <= 0:
        raise DomainError("W coefficients must be positive")
    if abs(alpha**2 + beta**2 + gamma**2 - 1) > 1e-12:
        raise DomainError("W coefficients must satisfy alpha^2 + beta^2 + gamma^2 = 1")


def h2(p: float) -> float:
    """Binary entropy in bits."""
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


# -- GHZ -------------------------------------------------------------------


def ghz_feasible(theta: float, alpha: float) -> FeasibilityResult:
    """Deterministic restoration with ``alpha|000> + beta|111>``.

    Feasible iff the larger GHZ weight is at most ``1/(2 cos^2 theta)``;
    for ``alpha >= beta`` that is ``alpha^2 <= 1/(2 cos^2 theta)``. The
    condition is the same whether the Bank measures or transfers K.
    """
    _check_theta(theta)
    _check_unit("alpha", alpha)
    w = max(alpha**2, 1 - alpha**2)
    bound = 1 / (2 * math.cos(theta) ** 2)
    return FeasibilityResult.from_margin(w, bound, bound - w)


def ghz_pmax(theta: float, alpha: float) -> float:
    """``min(1, 2(1 - alpha^2 cos^2 theta))`` for the larger GHZ weight.

    ``alpha`` may reach 0 or 1, where the resource is a product state and
    the value falls back to the bare link's ``2 sin^2 theta``.
    """
    _check_theta(theta)
    if not 0 <= alpha <= 1:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    w = max(alpha**2, 1 - alpha**2)
    return bell_pmax(w * math.cos(theta) ** 2)


# -- W ---------------------------------------------------------------------


def w_meas_feasible(theta: float, alpha: float, beta: float, gamma: float) -> FeasibilityResult:
    """Bank-measures feasibility for ``alpha|001> + beta|010> + gamma|100>``.

    The Bank measures K in the Hadamard basis; feasible iff
    ``4 beta^2 gamma^2 >= 1 - tan^4 theta``.
    """
    _check_theta(theta)
    _check_w(alpha, beta, gamma)
    val = 4 * beta**2 * gamma**2
    bound = 1 - math.tan(theta) ** 4
    return FeasibilityResult.from_margin(val, bound, val - bound)


def w_meas_lambda_max(theta: float, beta: float, gamma: float) -> float:
    """Largest squared Schmidt coefficient of either Hadamard branch across AA'|BB'."""
    x = 4 * beta**2 * gamma**2
    if x > 1 + 1e-12:
        raise DomainError(f"4 beta^2 gamma^2 = {x} exceeds 1")
    delta = math.sqrt(max(0.0, 1 - x))
    return math.cos(theta) ** 2 * (1 + delta) / 2


def w_meas_pmax(theta: float, beta: float, gamma: float) -> float:
    """``min(1, 2 - cos^2 theta (1 + Delta))`` with ``Delta = sqrt(1 - 4 beta^2 gamma^2)``."""
    _check_theta(theta)
    if beta <= 0 or gamma <= 0:
        raise DomainError("beta and gamma must be positive")
    delta = math.sqrt(max(0.0, 1 - 4 * beta**2 * gamma**2))
    if 4 * beta**2 * gamma**2 > 1 + 1e-12:
        raise DomainError("4 beta^2 gamma^2 exceeds 1")
    return bell_pmax(math.cos(theta) ** 2 * (1 + delta) / 2)


def w_trans_interval(theta: float) -> tuple[float, float]:
    """Transfer-feasible range of ``beta^2``, clipped to [0, 1]."""
    _check_theta(theta)
    t2 = math.tan(theta) ** 2
    return max(0.0, (1 - t2) / 2), min(1.0, (1 + t2) / 2)


def w_trans_feasible(theta: float, beta: float) -> FeasibilityResult:
    """Transfer-model feasibility: ``(1 - tan^2)/2 <= beta^2 <= (1 + tan^2)/2``.

    ``bound`` reports the interval end nearest to ``beta^2``.
    """
    _check_unit("beta", beta)
    lo, hi = w_trans_interval(theta)
    b2 = beta**2
    margin = min(b2 - lo, hi - b2)
    bound = lo if b2 - lo <= hi - b2 else hi
    return FeasibilityResult.from_margin(b2, bound, margin)


def w_trans_pmax(theta: float, beta: float) -> float:
    _check_theta(theta)
    if not 0 <= beta <= 1:
        raise DomainError(f"beta must lie in [0, 1], got {beta}")
    b2 = beta**2
    return bell_pmax(math.cos(theta) ** 2 * max(b2, 1 - b2))


def symmetric_slice(beta2: float) -> tuple[float, float, float]:
    """W amplitudes with ``alpha = gamma`` and the given ``beta^2``."""
    if not 0 < beta2 < 1:
        raise DomainError(f"beta^2 must lie in (0, 1), got {beta2}")
    a = math.sqrt((1 - beta2) / 2)
    return a, math.sqrt(beta2), a


@dataclass(frozen=True)
class SeparationWitness:
    """Symmetric-slice (alpha = gamma) comparison of the two Bank roles at one theta.

    Intervals are closed ranges of ``beta^2``; ``separation`` lists the
    parts of the transfer interval where measuring K fails.
    """

    theta: float
    trans_interval: tuple[float, float]
    trans_length: float
    meas_interval: tuple[float, float] | None
    separation: tuple[tuple[float, float], ...]

    @property
    def meas_empty(self) -> bool:
        return self.meas_interval is None


def separation_witnesses(theta: float) -> SeparationWitness:
    _check_theta(theta)
    lo, hi = w_trans_interval(theta)
    t4 = math.tan(theta) ** 4
    # on the slice 4 beta^2 gamma^2 = 2 x (1 - x) with x = beta^2
    disc = 0.25 - (1 - t4) / 2
    if disc < -MARGIN_TOL:
        meas = None
        sep = ((lo, hi),)
    else:
        r = math.sqrt(max(0.0, disc))
        meas = (0.5 - r, 0.5 + r)
        sep = tuple(
            (a, b) for a, b in ((lo, min(hi, meas[0])), (max(lo, meas[1]), hi)) if b - a > MARGIN_TOL
        )
    return SeparationWitness(theta, (lo, hi), hi - lo, meas, sep)


# -- general resources -----------------------------------------------------


def _check_registers(link: PureState, bank_resource: PureState) -> None:
    if set(link.labels) != {"A", "B"}:
        raise LabelError(f"link must live on (A, B), got {link.labels}")
    if set(bank_resource.labels) != {"A'", "B'", "K"}:
        raise LabelError(f"Bank resource must live on (A', B', K), got {bank_resource.labels}")


def general_transfer_feasible(link: PureState, bank_resource: PureState) -> FeasibilityResult:
    """Transfer model for any pure resource: largest Schmidt weight across AA'K|BB' at most 1/2."""
    _check_registers(link, bank_resource)
    joint = tensor(link.normalized(), bank_resource.normalized())
    lam = schmidt(joint, BOB).coefficients
    lmax = float(lam[0])
    return FeasibilityResult.from_margin(lmax, 0.5, 0.5 - lmax)


def bank_cost(bank_resource: PureState) -> float:
    """Entanglement between K and A'B' in bits."""
    if "K" not in bank_resource.labels:
        raise LabelError(f"Bank resource has no K register: {bank_resource.labels}")
    if set(bank_resource.labels) != {"A'", "B'", "K"}:
        raise LabelError(f"Bank resource must live on (A', B', K), got {bank_resource.labels}")
    return entanglement_entropy(bank_resource.normalized(), ("K",))


@dataclass(frozen=True)
class CostMinimum:
    family: str
    model: str
    theta: float
    cost: float
    params: dict
    attained: bool


def min_bank_cost(theta: float, family: str, model: str) -> CostMinimum:
    """Least ``E_{K:A'B'}`` over feasible resources in one family.

    Both families reduce to one free weight ``a2 = alpha^2`` with cost
    ``h2(a2)``: GHZ has no other parameter, and for W the remaining weight
    is split so feasibility is easiest (``beta^2 = gamma^2`` when
    measuring, ``beta^2 = 1/2`` when transferring). The feasible set in
    ``a2`` is an interval and ``h2`` is concave, so the minimum sits at an
    endpoint. ``attained`` is False when that endpoint is excluded (W with
    ``alpha -> 0``, where K decouples).
    """
    _check_theta(theta)
    if family == "ghz":
        if model not in ("meas", "trans"):
            raise DomainError(f"unknown model {model!r}")
        b = min(1 / (2 * math.cos(theta) ** 2), 1.0)
        ends = [(1 - b, True), (b, True)]
    elif family == "w":
        if model == "meas":
            # 4 beta^2 gamma^2 peaks at (1 - a2)^2 and must reach 1 - tan^4
            hi = 1 - math.sqrt(max(0.0, 1 - math.tan(theta) ** 4))
        elif model == "trans":
            # beta^2 = 1/2 stays available while 1 - a2 >= lower interval end
            hi = 1 - w_trans_interval(theta)[0]
        else:
            raise DomainError(f"unknown model {model!r}")
        ends = [(0.0, False), (hi, True)]
    else:
        raise DomainError(f"unknown family {family!r}")
    a2, attained = min(ends, key=lambda e: h2(e[0]))
    return CostMinimum(family, model, theta, h2(a2), {"alpha2": a2}, attained)


# -- minimax over Bank measurements ----------------------------------------


@dataclass(frozen=True, eq=False)
class MinimaxResult:
    """Best worst-branch Schmidt weight found over projective qubit measurements on K.

    ``mu_star_upper`` is an upper bound on the infimum over all Bank
    POVMs. ``best_measurement`` holds the Bloch direction (polar, azimuth)
    of the first projector. ``grid_values`` is the coarse search surface.
    """

    mu_star_upper: float
    best_measurement: dict
    feasible: bool
    grid_values: np.ndarray = field(repr=False)
    polar_grid: np.ndarray = field(repr=False)
    azimuth_grid: np.ndarray = field(repr=False)


def _branch_matrix(link: PureState, bank_resource: PureState) -> np.ndarray:
    joint = tensor(link.normalized(), bank_resource.normalized())
    joint = joint.reorder(ALICE_BANK + BOB + ("K",))
    return joint.amplitudes.reshape(16, 2)


def _directions(polar, azimuth) -> np.ndarray:
    polar = np.asarray(polar, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    n0 = np.cos(polar / 2) + 0j
    n1 = np.exp(1j * azimuth) * np.sin(polar / 2)
    return np.stack([n0, n1], axis=-1)


def _worst_branch(mat: np.ndarray, polar, azimuth) -> np.ndarray:
    """Vectorized sup over the two outcomes of the largest branch Schmidt weight."""
    n = _directions(polar, azimuth).reshape(-1, 2)
    perp = np.stack([-np.conj(n[:, 1]), np.conj(n[:, 0])], axis=-1)
    worst = np.zeros(len(n))
    for vecs in (n, perp):
        branch = (mat @ np.conj(vecs).T).T.reshape(-1, 4, 4)
        sv = np.linalg.svd(branch, compute_uv=False) ** 2
        p = sv.sum(axis=1)
        live = p > 1e-14
        lam = np.where(live, sv[:, 0] / np.where(live, p, 1.0), 0.0)
        worst = np.maximum(worst, lam)
    return worst.reshape(np.shape(polar))


def worst_branch_lambda(
    link: PureState, bank_resource: PureState, polar: float, azimuth: float
) -> float:
    """Worst-branch largest Schmidt weight across AA'|BB' for one measurement direction.

    The Bank projects K onto the Bloch direction (polar, azimuth) and its
    antipode. Polar pi/2, azimuth 0 is the Hadamard basis.
    """
    _check_registers(link, bank_resource)
    return float(_worst_branch(_branch_matrix(link, bank_resource), polar, azimuth))


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Minimize a unimodal ``f`` on [lo, hi]; returns ``(x, f(x))``."""
    inv_phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    best = min((fa, x) for x, fa in ((a, f(a)), (b, f(b)), (c, fc), (d, fd)))
    return best[1], best[0]


def minimax_mu_star(
    link: PureState,
    bank_resource: PureState,
    polar_points: int = 64,
    azimuth_points: int = 128,
    refine: bool = True,
) -> MinimaxResult:
    """Grid search (polar x azimuth) with one golden-section pass per coordinate."""
    _check_registers(link, bank_resource)
    if polar_points < 2 or azimuth_points < 1:
        raise DomainError("grid needs at least 2 polar and 1 azimuthal point")
    mat = _branch_matrix(link, bank_resource)
    polar = np.linspace(0.0, np.pi, polar_points)
    azimuth = np.linspace(0.0, 2 * np.pi, azimuth_points, endpoint=False)
    pp, aa = np.meshgrid(polar, azimuth, indexing="ij")
    values = _worst_branch(mat, pp, aa)
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    best_p, best_a, best = float(polar[i]), float(azimuth[j]), float(values[i, j])

    if refine:
        def cost(p, a):
            return float(_worst_branch(mat, p, a))

        lo, hi = polar[max(i - 1, 0)], polar[min(i + 1, polar_points - 1)]
        x, fx = golden_section_min(lambda p: cost(p, best_a), lo, hi)
        if fx < best:
            best_p, best = x, fx
        if azimuth_points > 1:
            step = azimuth[1] - azimuth[0]
            x, fx = golden_section_min(lambda a: cost(best_p, a), best_a - step, best_a + step)
            if fx < best:
                best_a, best = x % (2 * np.pi), fx
    return MinimaxResult(
        mu_star_upper=best,
        best_measurement={"polar": float(best_p), "azimuth": float(best_a)},
        feasible=best <= 0.5 + MINIMAX_TOL,
        grid_values=values,
        polar_grid=polar,
        azimuth_grid=azimuth,
    )


# -- phase diagram ---------------------------------------------------------


@dataclass(frozen=True)
class PhaseCell:
    theta: float
    beta2: float
    meas_feasible: bool
    trans_feasible: bool
    pmax_meas: float
    pmax_trans: float

    @property
    def separation(self) -> bool:
        return self.trans_feasible and not self.meas_feasible


@dataclass(frozen=True, eq=False)
class PhaseDiagramGrid:
    """Cells ordered theta-major: ``cells[i * len(beta2s) + j]``."""

    thetas: np.ndarray
    beta2s: np.ndarray
    cells: tuple[PhaseCell, ...]

    def cell(self, i: int, j: int) -> PhaseCell:
        return self.cells[i * len(self.beta2s) + j]

    def mask(self, name: str) -> np.ndarray:
        return np.array([getattr(c, name) for c in self.cells]).reshape(
            len(self.thetas), len(self.beta2s)
        )


def phase_cell(theta: float, beta2: float) -> PhaseCell:
    """Evaluate one (theta, beta^2) point on the symmetric W slice."""
    alpha, beta, gamma = symmetric_slice(beta2)
    return PhaseCell(
        theta=theta,
        beta2=beta2,
        meas_feasible=w_meas_feasible(theta, alpha, beta, gamma).feasible,
        trans_feasible=w_trans_feasible(theta, beta).feasible,
        pmax_meas=w_meas_pmax(theta, beta, gamma),
        pmax_trans=w_trans_pmax(theta, beta),
    )


def scan_phase_diagram(thetas, beta2s, executor=None) -> PhaseDiagramGrid:
    """Evaluate the symmetric-slice W phase diagram on a theta x beta^2 grid.

    Args:
        thetas: link angles in (0, pi/4].
        beta2s: values in (0, 1).
        executor: optional ``concurrent.futures`` executor; cell order is
            preserved either way.
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    beta2s = np.atleast_1d(np.asarray(beta2s, dtype=float))
    if thetas.size == 0 or beta2s.size == 0:
        raise DomainError("phase diagram grid is empty")
    points = [(float(t), float(b)) for t in thetas for b in beta2s]
    if executor is None:
        cells = [phase_cell(t, b) for t, b in points]
    else:
        cells = list(executor.map(lambda tb: phase_cell(*tb), points))
    return PhaseDiagramGrid(thetas, beta2s, tuple(cells))
