"""From a majorization pair to a POVM via Birkhoff-von Neumann."""

import numpy as np

from assisted_teleport import build_nielsen_povm, bvn_decompose, majorized_by, solve_doubly_stochastic


def main():
    source = np.array([0.4, 0.3, 0.2, 0.1])
    target = np.array([0.5, 0.5, 0.0, 0.0])
    print("source majorized by target:", majorized_by(source, target))

    d = solve_doubly_stochastic(source, target)
    print("doubly stochastic D with D @ target = source:\n", np.round(d, 4))
    dec = bvn_decompose(d)
    for w, perm in dec.terms:
        print(f"  weight {w:.4f}  permutation {perm}")
    print("reconstruction error:", np.max(np.abs(dec.reconstruct() - d)))

    povm = build_nielsen_povm(source, target)
    print(f"{len(povm)} Kraus operators, completeness residual {povm.completeness_residual():.1e}")


if __name__ == "__main__":
    main()
