"""Imaginary-axis stability scan with a bisection-refined k0 estimate."""

import argparse

from symglm import analysis as an
from symglm.tableau import SECTION6_METHODS, lookup


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--methods", nargs="+", default=list(SECTION6_METHODS))
    p.add_argument("--x-max", type=float, default=4.0)
    p.add_argument("--n", type=int, default=400)
    args = p.parse_args()
    for name in args.methods:
        m = lookup(name).tableau
        scan = an.imaginary_axis_scan(m, args.x_max, args.n)
        k0 = scan.k0_estimate
        if scan.stop_reason != "none":
            k0 = an.refine_k0(m, k0, k0 + args.x_max / args.n)
        print(f"{name:6s} k0={k0:.6f} stop={scan.stop_reason}")


if __name__ == "__main__":
    main()
