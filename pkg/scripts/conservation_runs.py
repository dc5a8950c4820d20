"""Scaled-horizon invariant runs: CSV per run plus a summary of max errors and drift ratios."""

import argparse
from pathlib import Path

import numpy as np

from symglm import integrator as it
from symglm.problems import get_problem
from symglm.tableau import lookup

RUNS = [("4124B", "kepler", 0.01), ("4124D", "kepler", 0.01), ("4223A", "kepler", 0.01),
        ("suzuki4115", "kepler", 0.01), ("4124D", "tlv", 0.1), ("4124B", "tlv", 0.1),
        ("suzuki4115", "tlv", 0.1)]


def window_max(t, err, lo, hi):
    return float(np.max(err[(t > lo) & (t <= hi)]))


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--T", type=float, default=1e3)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--out-dir", default="runs")
    args = p.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    T = args.T
    for method, problem, h in RUNS:
        prob = get_problem(problem).ode()
        traj = it.run(lookup(method), prob, it.RunConfig(method, h, T, sample_stride=args.stride))
        traj.write_csv(out / f"{problem}_{method}.csv")
        t = np.asarray(traj.t)
        errs = np.abs(traj.errors())
        for k, name in enumerate(traj.invariant_names):
            e = errs[:, k]
            halves = window_max(t, e, T / 2, T) / window_max(t, e, 0, T / 2)
            tenths = window_max(t, e, 0.9 * T, T) / window_max(t, e, 0, 0.1 * T)
            print(f"{problem:7s} {method:11s} {name}: max={e.max():.4e} "
                  f"second/first half={halves:.3f} last/first tenth={tenths:.3f} "
                  f"({traj.wall_time:.1f} s)")


if __name__ == "__main__":
    main()
