"""Bank-assisted restoration of Bell pairs from partially entangled links.

Small-register state-vector simulation, majorization-based LOCC
conversion (Birkhoff-von Neumann POVMs), closed-form feasibility regions
for GHZ and W Bank resources, and executable protocols with exact
branch-by-branch transcripts.
"""

from .channel import (
    Ellipsoid,
    effective_contraction,
    ellipsoid_volume,
    image_ellipsoid,
    simulate_teleport_channel,
)
from .errors import (
    DomainError,
    IncompletePovmError,
    InfeasibleError,
    LabelError,
    MatchingError,
)
from .feasibility import (
    FeasibilityResult,
    ghz_feasible,
    ghz_pmax,
    min_bank_cost,
    minimax_mu_star,
    scan_phase_diagram,
    separation_witnesses,
    symmetric_slice,
    w_meas_feasible,
    w_meas_pmax,
    w_trans_feasible,
    w_trans_pmax,
)
from .majorize import (
    BvnDecomposition,
    bell_pmax,
    build_nielsen_povm,
    bvn_decompose,
    majorized_by,
    solve_doubly_stochastic,
    vidal_pmax,
)
from .protocols import (
    ProtocolTranscript,
    audit_monotonicity,
    check_catalysis_deterministic,
    check_single_sided_invariance,
    run_catalysis,
    run_ghz_bank_measures,
    run_ghz_deferred,
    run_ghz_transfer,
    run_routing,
    run_w_bank_measures,
    run_w_transfer,
)
from .qstate import (
    PovmEnsemble,
    PureState,
    make_ghz,
    make_link_state,
    make_w,
    schmidt,
)

__version__ = "0.1.0"

__all__ = [
    "audit_monotonicity",
    "bell_pmax",
    "build_nielsen_povm",
    "bvn_decompose",
    "BvnDecomposition",
    "check_catalysis_deterministic",
    "check_single_sided_invariance",
    "DomainError",
    "effective_contraction",
    "Ellipsoid",
    "ellipsoid_volume",
    "FeasibilityResult",
    "ghz_feasible",
    "ghz_pmax",
    "image_ellipsoid",
    "IncompletePovmError",
    "InfeasibleError",
    "LabelError",
    "majorized_by",
    "make_ghz",
    "make_link_state",
    "make_w",
    "MatchingError",
    "min_bank_cost",
    "minimax_mu_star",
    "PovmEnsemble",
    "ProtocolTranscript",
    "PureState",
    "run_catalysis",
    "run_ghz_bank_measures",
    "run_ghz_deferred",
    "run_ghz_transfer",
    "run_routing",
    "run_w_bank_measures",
    "run_w_transfer",
    "scan_phase_diagram",
    "schmidt",
    "separation_witnesses",
    "simulate_teleport_channel",
    "solve_doubly_stochastic",
    "symmetric_slice",
    "vidal_pmax",
    "w_meas_feasible",
    "w_meas_pmax",
    "w_trans_feasible",
    "w_trans_pmax",
]
