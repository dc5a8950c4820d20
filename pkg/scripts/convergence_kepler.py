"""Observed order of the order-4 methods on Kepler over one period."""

import argparse
import math
import time

from symglm import integrator as it
from symglm.problems import kepler
from symglm.tableau import lookup


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--methods", nargs="+", default=["4123A", "4223A", "4124B", "4124D"])
    p.add_argument("--h", nargs="+", type=float, default=[0.02, 0.01, 0.005])
    args = p.parse_args()
    prob = kepler().ode()
    T = 2 * math.pi
    n_max = it.commensurate_step(min(args.h), T)[1]
    t0 = time.perf_counter()
    ref = it.reference_solution(prob, T / (20 * n_max), T)
    print(f"reference: {time.perf_counter() - t0:.1f} s")
    for name in args.methods:
        for r in it.convergence_study(lookup(name), prob, args.h, T, reference=ref):
            order = "" if r.observed_order is None else f"{r.observed_order:.3f}"
            print(f"{name:8s} h={r.h:.6f} err={r.error:.4e} order={order}")


if __name__ == "__main__":
    main()
