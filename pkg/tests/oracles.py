"""Published reference values shared by several test modules."""

from fractions import Fraction as Q

# rows of the published 4123A order table, columns in the canonical tree order
LABELS = ("∅", "τ", "[τ]", "[τ²]", "[[τ]]", "[τ³]", "[τ[τ]]", "[[τ²]]", "[[[τ]]]")


def row(*vals):
    return [Q(v) for v in vals]


TABLE_4123A = {
    "xi1": row(1, 0, "1/48", 0, 0, 0, 0, 0, 0),
    "xi2": row(0, "1/2", 0, "-1/16", "-1/32", 0, 0, 0, 0),
    "eta1": row(1, 0, "1/48", "1/48", "1/72"),
    "eta1D": row(0, 1, 0, 0, "1/48", 0, 0, "1/48", "1/72"),
    "eta2": row(1, "1/2", "5/48", "1/48", "1/96"),
    "eta2D": row(0, 1, "1/2", "1/4", "5/48", "1/8", "5/96", "1/48", "1/96"),
    "eta3": row(1, 1, "25/48", "17/48", "25/144"),
    "eta3D": row(0, 1, 1, 1, "25/48", 1, "25/48", "17/48", "25/144"),
    "Exi1": row(1, 1, "25/48", "3/8", "3/16", "5/16", "5/32", "5/48", "5/96"),
    "Exi2": row(0, "1/2", "1/2", "7/16", "7/32", "5/16", "5/32", "5/48", "5/96"),
}

# printed starting-condition vectors x, in rational form
PRINTED_X = {
    "4123A": ("1/2", "1/48", "-1/16", "-1/32"),
    "4123B": (0, "-1/48", "1/16", "1/16"),
    "4123C": ("1/2", "-1/24", "-1/8", "-1/48"),
    "4223A": ("1/4", 0, "-1/48", "-1/96"),
    "4124A": (0, "-1/24", "-3/16", "-1/16"),
}
