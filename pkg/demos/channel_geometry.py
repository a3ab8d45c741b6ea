"""Teleporting through a weak link shrinks the Bloch ball to a spheroid."""

import math

import numpy as np

from assisted_teleport import ellipsoid_volume, simulate_teleport_channel
from assisted_teleport.channel import max_singlet_fraction, optimal_teleport_fidelity
from assisted_teleport.qstate import make_link_state


def main():
    rng = np.random.default_rng(3)
    for theta in (math.pi / 16, math.pi / 8, math.pi / 6, math.pi / 4):
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        out = simulate_teleport_channel(theta, v)
        f = max_singlet_fraction(make_link_state(theta))
        print(
            f"theta={theta:.4f}  in={np.round(v, 3)}  out={np.round(out, 3)}  "
            f"volume/ball={ellipsoid_volume(theta) / (4 * math.pi / 3):.4f}  "
            f"best fidelity={optimal_teleport_fidelity(f):.4f}"
        )


if __name__ == "__main__":
    main()
