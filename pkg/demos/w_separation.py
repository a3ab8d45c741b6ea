"""Where handing over K beats measuring it, for a W Bank resource.

On the alpha = gamma slice the Bank-measures model never reaches a Bell
pair for a weak link, while transferring K works on an interval of
width tan^2(theta) around beta^2 = 1/2.
"""

import math

import numpy as np

from assisted_teleport import separation_witnesses, symmetric_slice, w_meas_pmax, w_trans_pmax
from assisted_teleport.feasibility import minimax_mu_star
from assisted_teleport.qstate import make_link_state, make_w


def main():
    for w in map(separation_witnesses, [math.pi / 8, 0.6, 0.72, math.pi / 4]):
        lo, hi = w.trans_interval
        meas = "empty" if w.meas_empty else "[{:.4f}, {:.4f}]".format(*w.meas_interval)
        print(
            f"theta={w.theta:.4f}: transfer [{lo:.6f}, {hi:.6f}] (width {w.trans_length:.6f}, "
            f"tan^2={math.tan(w.theta) ** 2:.6f}); measure {meas}"
        )

    theta = math.pi / 8
    print("\nbeta^2   Pmax(measure)  Pmax(transfer)")
    for b2 in np.linspace(0.1, 0.9, 9):
        _, beta, gamma = symmetric_slice(b2)
        print(f"{b2:.2f}     {w_meas_pmax(theta, beta, gamma):.6f}       {w_trans_pmax(theta, beta):.6f}")

    # no projective measurement direction on K does better than Hadamard here
    res = minimax_mu_star(make_link_state(theta), make_w(*symmetric_slice(0.5)))
    print(f"\nbest worst-branch weight over K directions: {res.mu_star_upper:.6f} at {res.best_measurement}")


if __name__ == "__main__":
    main()
