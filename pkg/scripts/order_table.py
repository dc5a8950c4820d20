"""Print the rational B-series order table of a method (4123A by default)."""

import argparse

from symglm import bseries as bs
from symglm.tableau import lookup


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("method", nargs="?", default="4123A")
    args = p.parse_args()
    rows = bs.order_table(lookup(args.method))
    labels = [t.label for t in bs.trees_with_empty(4)]
    print("row    " + " ".join(f"{l:>8s}" for l in labels))
    for name, row in rows.items():
        print(f"{name:6s} " + " ".join(f"{str(row.get(l, '')):>8s}" for l in labels))


if __name__ == "__main__":
    main()
