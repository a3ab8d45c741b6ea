"""Restore a Bell pair from a weak link with a GHZ Bank resource.

Walks through both Bank roles at one feasible point, prints every branch,
then shows what happens past the feasibility bound.
"""

import math

from assisted_teleport import (
    InfeasibleError,
    audit_monotonicity,
    ghz_feasible,
    ghz_pmax,
    run_ghz_bank_measures,
    run_ghz_transfer,
)
from assisted_teleport.protocols import entanglement_profile


def show(transcript):
    for rnd in transcript.rounds:
        extra = f" [{rnd.bits} bit]" if rnd.bits else ""
        print(f"  {rnd.actor:>5}: {rnd.operation}{extra}")
    for b in transcript.branches:
        print(f"  branch {b.outcomes}: p={b.probability:.4f} fidelity={b.bell_fidelity:.12f}")
    profile = ", ".join(f"{e:.4f}" for e in entanglement_profile(transcript))
    print(f"  entanglement across Bob's cut per round: {profile}")
    print(f"  audit ok: {audit_monotonicity(transcript)}")


def main():
    theta = math.pi / 6
    alpha = math.sqrt(2 / 3)  # exactly on the bound 1 / (2 cos^2 theta)
    res = ghz_feasible(theta, alpha)
    print(f"theta=pi/6, alpha^2=2/3: feasible={res.feasible}, margin={res.margin:.2e}")

    print("\nBank measures K in the Hadamard basis:")
    show(run_ghz_bank_measures(theta, alpha))
    print("\nBank hands K to Alice:")
    show(run_ghz_transfer(theta, alpha))

    theta, alpha = math.pi / 8, math.sqrt(0.9)
    print("\ntheta=pi/8, alpha^2=0.9:")
    try:
        run_ghz_bank_measures(theta, alpha)
    except InfeasibleError as exc:
        print(f"  deterministic run refused: {exc}")
    t = run_ghz_bank_measures(theta, alpha, probabilistic=True)
    print(f"  best-effort success {t.success_probability:.7f} vs closed form {ghz_pmax(theta, alpha):.7f}")


if __name__ == "__main__":
    main()
