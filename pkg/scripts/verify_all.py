"""Run every algebraic and spectral check on every registered method."""

import argparse

from symglm import analysis as an
from symglm.tableau import registry


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.parse_args()
    failures = 0
    for e in registry():
        for rep in an.run_checks(e):
            if not rep.applicable:
                status = "n/a"
            else:
                status = "pass" if rep.passed else "FAIL"
                failures += not rep.passed
            print(f"{e.name:12s} {rep.check:22s} {rep.residual:10.3e} {status}")
    print(f"{failures} failing checks")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
