"""Print min gap, path length and its upper bound for Grover paths, without time evolution."""

import argparse
import math

from eigenpath.analysis import min_gap, path_length_upper_bound
from eigenpath.cli import extrapolated_limits, resolved_path_length
from eigenpath.paths import build_grover_path


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-max", type=int, default=8, help="largest N is 2**n_max")
    args = parser.parse_args()
    Ns = [2**n for n in range(1, args.n_max + 1)]
    lengths = []
    print(f"{'N':>5} {'min_gap':>14} {'L':>14} {'upper':>14}")
    for N in Ns:
        p = build_grover_path(N, 0)
        L = resolved_path_length(p).value
        lengths.append(L)
        print(f"{N:>5} {min_gap(p):14.10f} {L:14.10f} {path_length_upper_bound(p):14.6f}")
    print("limit estimates:", " ".join(f"{v:.6f}" for v in extrapolated_limits(Ns, lengths)), f"(pi/2 = {math.pi / 2:.6f})")


if __name__ == "__main__":
    main()
