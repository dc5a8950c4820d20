"""GLM and Runge--Kutta tableaux and the method registry.

Every symmetric method is stored with exact rational coefficients (numpy
object arrays of :class:`~fractions.Fraction`) and a binary64 mirror.  Starting
triples whose coefficients involve square roots are stored in floating point
with a ``symbolic`` tag describing the exact form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .exact import (
    inv,
    is_exact,
    is_lower_triangular,
    max_abs,
    qeye,
    qmat,
    qvec,
    reversal,
    to_float,
)

Scalar = Union[Fraction, float]

STARTING_VARIANTS = ("pair", "half-difference", "shift", "identity")
FINISHING_RULES = ("triple-inverse", "first-component")

# Table-1 column order; the B-series module maps these labels onto trees.
XI_TREE_LABELS = ("∅", "τ", "[τ]", "[τ²]", "[[τ]]", "[τ³]", "[τ[τ]]", "[[τ²]]", "[[[τ]]]")


class TableauError(ValueError):
    pass


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=a.dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RkTableau:
    """A Runge--Kutta tableau ``(A, b, c)``.

    ``c`` is kept as printed; everything downstream uses ``A @ 1`` as the
    abscissae, so a misprinted ``c`` only shows up in :attr:`row_sum_defect`.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""
    symbolic: Optional[str] = None

    def __post_init__(self):
        s = self.A.shape[0]
        if self.A.shape != (s, s) or self.b.shape != (s,) or self.c.shape != (s,):
            raise TableauError(f"inconsistent RK tableau shapes for {self.name!r}")
        for name in ("A", "b", "c"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def s(self) -> int:
        return self.A.shape[0]

    @property
    def is_exact(self) -> bool:
        return is_exact(self.A) and is_exact(self.b)

    @cached_property
    def Af(self) -> np.ndarray:
        return to_float(self.A)

    @cached_property
    def bf(self) -> np.ndarray:
        return to_float(self.b)

    @property
    def row_sum_defect(self) -> float:
        """``max |c - A 1|``; zero for every consistently printed tableau."""
        return max_abs(self.c - self.A.sum(axis=1))

    def inverse(self) -> "RkTableau":
        """The tableau of the inverse map ``R_h^{-1}`` in stage-reversed form."""
        if self.is_exact:
            P, A, b, c = reversal(self.s), self.A, self.b, self.c
            ones = qvec([1] * self.s)
        else:
            P, A, b, c = to_float(reversal(self.s)), self.Af, self.bf, to_float(self.c)
            ones = np.ones(self.s)
        bP = b @ P
        return RkTableau(
            A=P @ A @ P - np.outer(ones, bP),
            b=-bP,
            c=P @ c - ones * b.sum(),
            name=f"{self.name}^-1",
            symbolic=self.symbolic,
        )


@dataclass(frozen=True, eq=False)
class StartingTriple:
    """``[C, forward, inverse]`` with a variant tag selecting the starting formula.

    ``pair``:            y1 = (R_h + R_-h) y0 / 2,  y2 = C (R_h - R_-h) y0 / 2
    ``half-difference``: y1 = y0,                    y2 = C (R_h - R_-h) y0 / 2
    ``shift``:           y1 = y0,                    y2 = R_h y0 - y0
    ``identity``:        y1 = y0 (Runge--Kutta methods, r = 1)
    """

    C: Scalar
    forward: Optional[RkTableau]
    inverse: Optional[RkTableau]
    variant: str
    symbolic: Optional[str] = None
    verified: bool = True
    note: str = ""

    def __post_init__(self):
        if self.variant not in STARTING_VARIANTS:
            raise TableauError(f"unknown starting variant {self.variant!r}")
        if self.C == 0:
            raise TableauError("starting constant C must be nonzero")
        if self.variant != "identity" and self.forward is None:
            raise TableauError(f"variant {self.variant!r} needs a forward RK tableau")
        if self.variant == "pair" and self.inverse is None:
            raise TableauError("pair variant needs an inverse tableau for finishing")


@dataclass(frozen=True, eq=False)
class GlmTableau:
    """Coefficients ``(A, U, B, V)`` of a GLM together with its symmetry pair ``(L, P)``."""

    name: str
    A: np.ndarray
    U: np.ndarray
    B: np.ndarray
    V: np.ndarray
    L: np.ndarray
    P: np.ndarray
    declared_order: int = 0
    declared_stage_order: int = 0

    def __post_init__(self):
        s, r = self.A.shape[0], self.V.shape[0]
        shapes = {
            "A": (s, s), "U": (s, r), "B": (r, s), "V": (r, r), "L": (r, r), "P": (s, s),
        }
        for key, shape in shapes.items():
            if getattr(self, key).shape != shape:
                raise TableauError(
                    f"{self.name}: {key} has shape {getattr(self, key).shape}, expected {shape}"
                )
            object.__setattr__(self, key, _freeze(getattr(self, key)))
        tol = 0 if self.is_exact else 1e-15
        if max_abs(self.L @ self.L - self._eye(r)) > tol:
            raise TableauError(f"{self.name}: L is not an involution")
        if max_abs(self.P @ self.P - self._eye(s)) > tol:
            raise TableauError(f"{self.name}: P is not an involution")

    def _eye(self, n):
        return qeye(n) if self.is_exact else np.eye(n)

    @property
    def s(self) -> int:
        return self.A.shape[0]

    @property
    def r(self) -> int:
        return self.V.shape[0]

    @property
    def is_exact(self) -> bool:
        return all(is_exact(getattr(self, k)) for k in "AUBVLP")

    @cached_property
    def numeric(self) -> "FloatView":
        return FloatView(*(to_float(getattr(self, k)) for k in "AUBVLP"))

    @property
    def b(self) -> np.ndarray:
        return self.B[0]

    @property
    def lower_triangular(self) -> bool:
        return is_lower_triangular(self.A)

    @property
    def implicit_stages(self) -> int:
        return sum(1 for i in range(self.s) if self.A[i, i] != 0)

    def with_symmetry(self, L=None, P=None) -> "GlmTableau":
        return GlmTableau(
            self.name, self.A, self.U, self.B, self.V,
            self.L if L is None else L, self.P if P is None else P,
            self.declared_order, self.declared_stage_order,
        )


@dataclass(frozen=True)
class FloatView:
    A: np.ndarray
    U: np.ndarray
    B: np.ndarray
    V: np.ndarray
    L: np.ndarray
    P: np.ndarray


@dataclass(frozen=True, eq=False)
class MethodEntry:
    tableau: GlmTableau
    starting: StartingTriple
    finishing: str
    gsymplectic_data: Optional[tuple] = None  # (G, D)
    start_xi: Optional[tuple] = None  # (xi_1, ..., xi_r) in XI_TREE_LABELS order
    alternates: tuple = ()
    kind: str = "glm"  # "glm" or "rk"
    note: str = ""

    def __post_init__(self):
        if self.finishing not in FINISHING_RULES:
            raise TableauError(f"unknown finishing rule {self.finishing!r}")

    @property
    def name(self) -> str:
        return self.tableau.name

    @property
    def gsymplectic(self) -> bool:
        return self.gsymplectic_data is not None


def equivalence_transform(m: GlmTableau, T) -> GlmTableau:
    """Change of coordinates ``(A, UT, T^-1 B, T^-1 V T)``, with ``L -> T^-1 L T``."""
    T = np.asarray(T)
    if T.shape != (m.r, m.r):
        raise TableauError(f"T must be {m.r}x{m.r}")
    Tf = to_float(T)
    if not np.all(np.isfinite(Tf)) or np.linalg.cond(Tf) > 1e12:
        raise TableauError("singular (or numerically singular) transformation T")
    if is_exact(T) and m.is_exact:
        src = m
    else:
        f = m.numeric
        src = GlmTableau(m.name, f.A, f.U, f.B, f.V, f.L, f.P,
                         m.declared_order, m.declared_stage_order)
        T = Tf.astype(complex) if np.iscomplexobj(T) else Tf
    Ti = inv(T)
    return GlmTableau(
        name=m.name,
        A=src.A, U=src.U @ T, B=Ti @ src.B, V=Ti @ src.V @ T,
        L=Ti @ src.L @ T, P=src.P,
        declared_order=m.declared_order, declared_stage_order=m.declared_stage_order,
    )


# --------------------------------------------------------------------------
# registry data
# --------------------------------------------------------------------------

def _glm(name, A, U, B, V, L, p=4, q=1) -> GlmTableau:
    A = qmat(A)
    return GlmTableau(name, A, qmat(U), qmat(B), qmat(V), qmat(L),
                      reversal(A.shape[0]), p, q)


def _rk(A, b, c=None, name="", symbolic=None) -> RkTableau:
    A = qmat(A)
    c = A.sum(axis=1) if c is None else qvec(c)
    return RkTableau(A, qvec(b), c, name, symbolic)


def _rkf(A, b, c, name, symbolic) -> RkTableau:
    return RkTableau(np.asarray(A, float), np.asarray(b, float), np.asarray(c, float),
                     name, symbolic)


def _xi_from_x(x) -> tuple:
    x1, x2, x3, x4 = (Fraction(v) for v in x)
    z = Fraction(0)
    return ((Fraction(1), z, x2, z, z, z, z, z, z),
            (z, x1, z, x3, x4, z, z, z, z))


V2 = [[1, 0], [0, -1]]
L_MINUS = [[1, 0], [0, -1]]
L_PLUS = [[1, 0], [0, 1]]

_R38 = float(np.sqrt(38.0))
_R15 = float(np.sqrt(15.0))


def _suzuki_gammas() -> np.ndarray:
    g = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
    return np.array([g, g, 1.0 - 4.0 * g, g, g])


def _rk_as_glm(name, A, b, p, q, exact=True) -> GlmTableau:
    if exact:
        A = qmat(A)
        s = A.shape[0]
        return GlmTableau(name, A, qmat([[1]] * s), qmat([b]), qmat([[1]]), qmat([[1]]),
                          reversal(s), p, q)
    A = np.asarray(A, float)
    s = A.shape[0]
    return GlmTableau(name, A, np.ones((s, 1)), np.asarray([b], float), np.eye(1), np.eye(1),
                      to_float(reversal(s)), p, q)


def _build_entries() -> list:
    identity_start = StartingTriple(Fraction(1), None, None, "identity")
    entries = []

    # --- rs = 23, L = diag(1, -1) ------------------------------------------
    m = _glm("4123A",
             [["1/6", 0, 0], ["1/6", "1/6", 0], ["1/3", "2/3", "1/6"]],
             [[1, "-1/3"], [1, "1/3"], [1, "-1/3"]],
             [["1/4", "1/2", "1/4"], ["1/4", "1/2", "1/4"]], V2, L_MINUS)
    start = StartingTriple(
        Fraction(-12),
        _rk([["1/4", 0], ["1/12", "-1/12"]], ["1/12", "-1/8"], ["1/4", 0], "4123A-R"),
        _rk([["1/24", 0], ["1/8", "1/6"]], ["1/8", "-1/12"], ["1/24", "7/24"], "4123A-Rinv"),
        "pair",
    )
    alt_explicit = StartingTriple(
        Fraction(4, 7),
        _rk([[0, 0, 0], ["3/4", 0, 0], ["1/4", "25/28", 0]], ["3/4", "65/324", "-49/648"],
            [0, "3/4", "8/7"], "4123A-R-explicit"),
        _rk([["49/648", "433/567", 0], ["49/648", "-65/324", 0],
             ["49/648", "-65/324", "-3/4"]],
            ["49/648", "-65/324", "-3/4"], ["47/56", "-1/8", "-7/8"], "4123A-Rinv-implicit"),
        "pair", verified=False, note="alternate explicit start",
    )
    alt_sqrt15 = StartingTriple(
        2 * _R15 / 5,
        _rkf([[31 * _R15 / 180, -4 * _R15 / 45], [169 * _R15 / 720, -4 * _R15 / 45]],
             [31 * _R15 / 180, -4 * _R15 / 45], [_R15 / 12, 7 * _R15 / 12],
             "4123A-R-sqrt15", "entries are rationals times sqrt(15)"),
        _rkf([[0.0, 0.0], [_R15 / 16, 0.0]], [-31 * _R15 / 180, 4 * _R15 / 45],
             [0.0, _R15 / 16], "4123A-Rinv-sqrt15", "entries are rationals times sqrt(15)"),
        "pair", symbolic="C = 2 sqrt(15)/5", verified=False, note="alternate sqrt(15) start",
    )
    entries.append(MethodEntry(m, start, "triple-inverse",
                               start_xi=_xi_from_x(["1/2", "1/48", "-1/16", "-1/32"]),
                               alternates=(alt_explicit, alt_sqrt15)))

    m = _glm("4123B",
             [["1/4", 0, 0], ["1/2", 0, 0], ["1/2", 0, "1/4"]],
             [[1, "-1/6"], [1, "-1/6"], [1, "-1/6"]],
             [["1/3", "1/3", "1/3"], [1, -2, 1]], V2, L_MINUS)
    start = StartingTriple(
        Fraction(-12),
        _rk([[0, 0, 0], ["1/24", "23/24", 0], ["1/24", "1/24", "2/3"]],
            ["1/24", "1/24", "-1/12"], [0, 1, "3/4"], "4123B-R"),
        _rk([["3/4", 0, 0], ["1/12", "11/12", 0], ["1/12", "-1/24", "-1/24"]],
            ["1/12", "-1/24", "-1/24"], ["3/4", 1, 0], "4123B-Rinv"),
        "pair",
    )
    entries.append(MethodEntry(m, start, "triple-inverse",
                               start_xi=_xi_from_x([0, "-1/48", "1/16", "1/16"])))

    m = _glm("4223A",
             [["1/8", 0, 0], [0, "1/4", 0], ["1/4", "3/4", "1/8"]],
             [[1, "-1/2"], [1, 1], [1, "-1/2"]],
             [["1/6", "2/3", "1/6"], ["1/6", "1/6", "1/6"]], V2, L_MINUS, p=4, q=2)
    start = StartingTriple(
        Fraction(1),
        _rk([[0, 0, 0], ["1/4", 0, 0], [0, "1/4", 0]], ["7/12", "-1/6", "-1/6"],
            [0, "1/4", "1/4"], "4223A-R"),
        None, "half-difference",
    )
    entries.append(MethodEntry(m, start, "first-component",
                               start_xi=_xi_from_x(["1/4", 0, "-1/48", "-1/96"])))

    m = _glm("4123C",
             [[0, 0, 0], ["7/12", "5/12", 0], ["1/12", "-1/6", "1/12"]],
             [[1, 1], [1, -1], [1, 1]],
             [["1/3", "1/3", "1/3"], ["1/4", "1/2", "1/4"]], V2, L_MINUS)
    start = StartingTriple(
        Fraction(12),
        _rk([[0, 0], ["5/24", "1/24"]], ["5/24", "-1/6"], [0, "1/4"], "4123C-R"),
        _rk([["5/24", 0], ["1/6", "-5/24"]], ["1/6", "-5/24"], ["5/24", "-1/24"], "4123C-Rinv"),
        "pair",
    )
    entries.append(MethodEntry(m, start, "triple-inverse",
                               start_xi=_xi_from_x(["1/2", "-1/24", "-1/8", "-1/48"])))

    # --- rs = 24, L = diag(1, -1) ------------------------------------------
    m = _glm("4124A",
             [[0, 0, 0, 0], [0, "1/4", 0, 0], [0, "1/2", "1/4", 0], [0, "1/2", "1/2", 0]],
             [[1, "1/6"]] * 4,
             [["-1/6", "2/3", "2/3", "-1/6"], [-1, 1, 1, -1]], V2, L_MINUS)
    start = StartingTriple(
        Fraction(18),
        _rk([[0, 0], ["1/6", "1/12"]], ["1/6", "-1/6"], [0, "1/4"], "4124A-R"),
        _rk([["1/4", 0], ["1/6", "-1/6"]], ["1/6", "-1/6"], ["1/4", 0], "4124A-Rinv"),
        "pair",
    )
    entries.append(MethodEntry(m, start, "triple-inverse",
                               start_xi=_xi_from_x([0, "-1/24", "-3/16", "-1/16"])))

    m = _glm("4124B",
             [["1/6", 0, 0, 0], ["1/12", "1/12", 0, 0], ["1/12", "1/6", "1/12", 0],
              ["1/3", "-1/3", "-1/3", "1/6"]],
             [[1, 1], [1, "1/2"], [1, "1/2"], [1, 1]],
             [["-1/6", "2/3", "2/3", "-1/6"], ["-1/2", 1, 1, "-1/2"]], V2, L_MINUS)
    tag = "entries are rationals times sqrt(38)"
    start = StartingTriple(
        2 * _R38,
        _rkf([[0.0, 0.0], [5 * _R38 / 152, _R38 / 114]], [5 * _R38 / 152, -_R38 / 38],
             [0.0, _R38 / 24], "4124B-R", tag),
        _rkf([[2 * _R38 / 57, 0.0], [_R38 / 38, -5 * _R38 / 152]], [_R38 / 38, -_R38 / 152],
             [2 * _R38 / 57, -_R38 / 152], "4124B-Rinv", tag),
        "pair", symbolic="C = 2 sqrt(38)",
    )
    gdata = (qmat([[1, 0], [0, "-1/3"]]),
             qmat([["-1/6", 0, 0, 0], [0, "2/3", 0, 0], [0, 0, "2/3", 0], [0, 0, 0, "-1/6"]]))
    entries.append(MethodEntry(m, start, "triple-inverse", gsymplectic_data=gdata,
                               start_xi=_xi_from_x(["1/2", "-1/24", "-19/144", "-1/36"])))

    # --- rs = 24, L = diag(1, 1): one shared starting method -----------------
    shift = StartingTriple(
        Fraction(1),
        _rk([[0, 0, 0, 0], ["-1/2", 0, 0, 0], ["5/6", "-1/3", 0, 0], ["4/3", "-5/6", "1/2", 0]],
            ["1/4", 0, "-1/3", "1/12"], [0, "-1/2", "1/2", 1], "4124CDE-R"),
        None, "shift",
    )
    z = Fraction(0)
    xi_plus = ((Fraction(1),) + (z,) * 8,
               (z, z, Fraction(-1, 12), z, z, Fraction(1, 24), Fraction(1, 36),
                Fraction(1, 48), Fraction(1, 144)))
    b_plus = ["1/6", "1/3", "1/3", "1/6"]
    for name, A, u2, beta in (
        ("4124C",
         [[0, 0, 0, 0], ["1/2", 0, 0, 0], ["-1/6", "1/6", "1/2", 0], ["1/3", "5/12", "1/4", 0]],
         [1, -2, 2, -1], ["1/6", "1/12", "-1/12", "-1/6"]),
        ("4124D",
         [[0, 0, 0, 0], ["1/4", "1/4", 0, 0], ["1/12", "1/6", "1/4", 0], ["1/3", "2/3", 0, 0]],
         [1, "-1/2", "1/2", -1], ["1/6", "1/3", "-1/3", "-1/6"]),
        ("4124E",
         [[0, 0, 0, 0], [0, "1/2", 0, 0], ["1/3", "1/6", 0, 0], ["1/3", "1/6", "1/2", 0]],
         [1, 1, -1, -1], ["1/6", "-1/6", "1/6", "-1/6"]),
    ):
        m = _glm(name, A, [[1, u] for u in u2], [b_plus, beta], V2, L_PLUS)
        entries.append(MethodEntry(m, shift, "first-component", start_xi=xi_plus))

    # --- Runge--Kutta comparators (r = 1) ------------------------------------
    m = _rk_as_glm("midpoint", [["1/2"]], [1], p=2, q=1)
    entries.append(MethodEntry(m, identity_start, "first-component",
                               gsymplectic_data=(qmat([[1]]), qmat([[1]])), kind="rk",
                               note="implicit midpoint rule"))

    g = _suzuki_gammas()
    A = np.array([[g[j] if j < i else (g[i] / 2 if j == i else 0.0) for j in range(5)]
                  for i in range(5)])
    m = _rk_as_glm("suzuki4115", A, g, p=4, q=1, exact=False)
    entries.append(MethodEntry(m, identity_start, "first-component",
                               gsymplectic_data=(np.eye(1), np.diag(g)), kind="rk",
                               note="5-fold symmetric composition of the implicit midpoint rule"))

    m = _rk_as_glm("lobatto3b",
                   [["1/6", "-1/6", 0], ["1/6", "1/3", 0], ["1/6", "5/6", 0]],
                   ["1/6", "2/3", "1/6"], p=4, q=1)
    entries.append(MethodEntry(m, identity_start, "first-component", kind="rk",
                               note="comparator, standard coefficients (not a GLM of this package)"))
    return entries


def _register(entry: MethodEntry) -> MethodEntry:
    """Registration-time checks: method symmetry (searching P if needed) and start/finish shape."""
    from .analysis import symmetry_residual  # local import: analysis depends on this module

    m = entry.tableau
    tol = 0.0 if m.is_exact else 1e-13
    if symmetry_residual(m) > tol:
        P = find_symmetry_permutation(m, tol)
        if P is None:
            raise TableauError(f"{m.name}: no involutive stage permutation makes it symmetric")
        entry = MethodEntry(entry.tableau.with_symmetry(P=P), *[
            getattr(entry, k) for k in
            ("starting", "finishing", "gsymplectic_data", "start_xi", "alternates", "kind", "note")
        ])
    st = entry.starting
    if st.forward is not None and st.verified and st.forward.row_sum_defect > 1e-14:
        raise TableauError(f"{m.name}: starting tableau violates c = A 1")
    if entry.start_xi is not None and len(entry.start_xi) != m.r:
        raise TableauError(f"{m.name}: start_xi needs one row per value")
    return entry


def find_symmetry_permutation(m: GlmTableau, tol: float = 0.0):
    """Search all involutive stage permutations for one making ``m`` symmetric."""
    from .analysis import symmetry_residual

    if m.s > 6:
        return None
    for perm in itertools.permutations(range(m.s)):
        if any(perm[perm[i]] != i for i in range(m.s)):
            continue
        P = np.zeros((m.s, m.s), dtype=object if m.is_exact else float)
        P[:] = Fraction(0) if m.is_exact else 0.0
        for i, j in enumerate(perm):
            P[i, j] = Fraction(1) if m.is_exact else 1.0
        if symmetry_residual(m.with_symmetry(P=P)) <= tol:
            return P
    return None


@lru_cache(maxsize=1)
def _registry() -> tuple:
    return tuple(_register(e) for e in _build_entries())


def registry() -> list:
    """Every registered method, in catalogue order."""
    return list(_registry())


ALIASES = {
    "4223": "4223A",
    "4115": "suzuki4115",
    "suzuki": "suzuki4115",
    "dirk": "suzuki4115",
    "lobatto": "lobatto3b",
    "lobattoiiib": "lobatto3b",
    "imr": "midpoint",
}


def lookup(name: str) -> MethodEntry:
    key = ALIASES.get(name.lower(), name)
    for e in _registry():
        if e.name.lower() == key.lower():
            return e
    raise KeyError(f"unknown method {name!r}; known: {', '.join(method_names())}")


def method_names() -> list:
    return [e.name for e in _registry()]


SECTION6_METHODS = ("4123A", "4123B", "4123C", "4223A", "4124A", "4124B", "4124C", "4124D", "4124E")
