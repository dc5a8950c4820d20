"""Rooted trees to order 5 and exact B-series arithmetic for order verification.

Coefficients follow the normalisation ``y = sum_t h^|t| a(t) / sigma(t) F(t)``,
so the exact flow has ``a(t) = 1 / gamma(t)`` and the stage derivative of a
tree is the plain product of the stage coefficients of its children.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import factorial
from typing import Optional, Union

import numpy as np

from .exact import qvec, qzeros, to_float
from .tableau import XI_TREE_LABELS, GlmTableau, MethodEntry, RkTableau, StartingTriple

MAX_ORDER = 5

_SUP = {2: "²", 3: "³", 4: "⁴", 5: "⁵"}


@dataclass(frozen=True)
class RootedTree:
    """``[tau^m t_1 ... t_n]`` stored as a canonically sorted tuple of children.

    The empty tree is the instance with ``empty=True``; ``RootedTree()`` is the
    single vertex ``tau``.
    """

    children: tuple = ()
    empty: bool = False

    def __post_init__(self):
        if self.empty and self.children:
            raise ValueError("the empty tree has no children")
        object.__setattr__(self, "children", tuple(sorted(self.children, key=_key)))

    @cached_property
    def order(self) -> int:
        return 0 if self.empty else 1 + sum(c.order for c in self.children)

    @property
    def valency(self) -> int:
        return len(self.children)

    @cached_property
    def sigma(self) -> int:
        out = 1
        for child, k in self._groups():
            out *= child.sigma ** k * factorial(k)
        return out

    @cached_property
    def gamma(self) -> int:
        if self.empty:
            return 1
        out = self.order
        for c in self.children:
            out *= c.gamma
        return out

    def _groups(self):
        return [(c, len(list(g))) for c, g in itertools.groupby(self.children)]

    @cached_property
    def label(self) -> str:
        if self.empty:
            return "∅"
        if not self.children:
            return "τ"
        parts = []
        for child, k in self._groups():
            base = child.label
            parts.append(base + _SUP.get(k, "") if k > 1 else base)
        return "[" + "".join(parts) + "]"

    def __repr__(self) -> str:
        return f"RootedTree({self.label})"

    def __lt__(self, other: "RootedTree") -> bool:
        return _key(self) < _key(other)


def _key(t: RootedTree) -> tuple:
    """Sort key: order, then larger root valency first, then children keys."""
    if t.empty:
        return (0,)
    return (t.order, -t.valency, tuple(_key(c) for c in t.children))


EMPTY = RootedTree(empty=True)
TAU = RootedTree()


@lru_cache(maxsize=None)
def _trees_of_order(n: int) -> tuple:
    if n == 1:
        return (TAU,)
    found = set()
    # children form a multiset of trees whose orders sum to n - 1
    pool = [t for k in range(1, n) for t in _trees_of_order(k)]
    for size in range(1, n):
        for combo in itertools.combinations_with_replacement(pool, size):
            if sum(t.order for t in combo) == n - 1:
                found.add(RootedTree(tuple(combo)))
    return tuple(sorted(found))


def enumerate_trees(max_order: int) -> list:
    """All rooted trees with ``1 <= |t| <= max_order``, in canonical order."""
    if not 1 <= max_order <= MAX_ORDER:
        raise ValueError(f"max_order must be in 1..{MAX_ORDER}")
    return [t for n in range(1, max_order + 1) for t in _trees_of_order(n)]


def trees_with_empty(max_order: int) -> list:
    return [EMPTY] + enumerate_trees(max_order)


@lru_cache(maxsize=None)
def tree_by_label(label: str) -> RootedTree:
    for t in trees_with_empty(MAX_ORDER):
        if t.label == label:
            return t
    raise KeyError(label)


TABLE_TREES = tuple(tree_by_label(lbl) for lbl in XI_TREE_LABELS)


# --------------------------------------------------------------------------
# B-series containers
# --------------------------------------------------------------------------

Coefficient = Union[Fraction, np.ndarray]


@dataclass
class BSeries:
    """Map from trees (``EMPTY`` included) to a rational scalar or rational vector.

    Missing trees read as zero, so a series only needs its nonzero entries.
    """

    coeffs: dict = field(default_factory=dict)
    dim: Optional[int] = None  # None for scalar series
    max_order: int = MAX_ORDER

    def zero(self):
        return Fraction(0) if self.dim is None else qzeros(self.dim)

    def __getitem__(self, t: RootedTree):
        if t.order > self.max_order:
            raise KeyError(f"{t.label} is beyond order {self.max_order}")
        return self.coeffs.get(t, self.zero())

    def __setitem__(self, t: RootedTree, value):
        self.coeffs[t] = value

    def component(self, i: int) -> "BSeries":
        return BSeries({t: v[i] for t, v in self.coeffs.items()}, None, self.max_order)

    def trees(self) -> list:
        return trees_with_empty(self.max_order)

    def truncate(self, order: int) -> "BSeries":
        return BSeries({t: v for t, v in self.coeffs.items() if t.order <= order},
                       self.dim, min(order, self.max_order))

    @staticmethod
    def stack(parts: list) -> "BSeries":
        """Stack scalar series into one vector-valued series."""
        order = min(p.max_order for p in parts)
        out = BSeries({}, len(parts), order)
        for t in trees_with_empty(order):
            out[t] = qvec([p[t] for p in parts])
        return out


def exact_flow(max_order: int = MAX_ORDER) -> BSeries:
    return BSeries({t: Fraction(1, t.gamma) for t in trees_with_empty(max_order)}, None, max_order)


def identity_series(max_order: int = MAX_ORDER) -> BSeries:
    return BSeries({EMPTY: Fraction(1)}, None, max_order)


def _rooted_subtrees(t: RootedTree) -> list:
    """Root-containing, parent-closed vertex subsets of ``t`` as (subtree, pruned trees).

    Subsets are counted on the concrete (labelled) tree, so symmetric choices
    appear with their multiplicity.
    """
    options = [[(None, [c])] + [(s, p) for s, p in _rooted_subtrees(c)] for c in t.children]
    out = []
    for choice in itertools.product(*options):
        kept = tuple(s for s, _ in choice if s is not None)
        pruned = [x for _, p in choice for x in p]
        out.append((RootedTree(kept), pruned))
    return out


def compose(a: BSeries, b: BSeries) -> BSeries:
    """B-series of "apply ``a``, then ``b``"; ``a`` must be scalar with ``a(∅) = 1``."""
    if a.dim is not None:
        raise ValueError("the inner series must be scalar")
    if a[EMPTY] != 1:
        raise ValueError("the inner series must satisfy a(∅) = 1")
    order = min(a.max_order, b.max_order)
    out = BSeries({}, b.dim, order)
    out[EMPTY] = b[EMPTY]
    for t in enumerate_trees(order):
        acc = b[EMPTY] * a[t]
        for s, pruned in _rooted_subtrees(t):
            w = Fraction(1)
            for p in pruned:
                w *= a[p]
            acc = acc + b[s] * w
        out[t] = acc
    return out


def exact_shift(start: BSeries) -> BSeries:
    """Series of ``S_h`` applied to the exact solution one step ahead."""
    return compose(exact_flow(start.max_order), start)


# --------------------------------------------------------------------------
# GLM stage and output series
# --------------------------------------------------------------------------

def _require_exact(m: GlmTableau):
    if not m.is_exact:
        raise ValueError(f"{m.name}: B-series checks need exact rational coefficients")


def stage_series(m: GlmTableau, start: BSeries) -> tuple:
    """``(eta, etaD)`` as vector series over the ``s`` stages."""
    _require_exact(m)
    if start.dim != m.r:
        raise ValueError(f"start series has dim {start.dim}, method has r={m.r}")
    order = start.max_order
    ones = qvec([1] * m.s)
    eta = BSeries({}, m.s, order)
    eta_d = BSeries({}, m.s, order)
    eta_d[EMPTY] = qzeros(m.s)
    eta[EMPTY] = m.U @ start[EMPTY]
    for t in enumerate_trees(order):
        d = ones.copy()
        for c in t.children:
            d = d * eta[c]
        eta_d[t] = d
        eta[t] = m.A @ d + m.U @ start[t]
    return eta, eta_d


def output_series(m: GlmTableau, start: BSeries) -> BSeries:
    """Series of one GLM step applied to the starting values."""
    eta, eta_d = stage_series(m, start)
    out = BSeries({}, m.r, start.max_order)
    for t in start.trees():
        out[t] = m.B @ eta_d[t] + m.V @ start[t]
    return out


@dataclass
class OrderReport:
    method: str
    order: int
    defects: dict  # tree -> r-vector at order p + 1
    offending: Optional[RootedTree] = None
    completion: dict = field(default_factory=dict)  # order-(p+1) non-principal xi entries used

    @property
    def defect_in_principal_span(self) -> bool:
        return all(all(x == 0 for x in v[1:]) for v in self.defects.values())


def complete_start(m: GlmTableau, start: BSeries, order: int) -> tuple:
    """Fill the non-principal start entries at ``order`` so those output components match.

    Output and target at a tree of that order differ only through
    ``(V - I) xi(t)`` in the non-principal rows, which is invertible for the
    canonical ``V = diag(1, -1)``.  Trees where the entry is already nonzero
    are left alone.  Returns the completed series and the filled entries.
    """
    full = BSeries(dict(start.coeffs), start.dim, max(start.max_order, order))
    filled = {}
    probe = output_series(m, full)
    target = exact_shift(full)
    for t in _trees_of_order(order):
        if any(x != 0 for x in full[t][1:]):
            continue
        gap = probe[t] - target[t]
        xi = full[t].copy()
        for i in range(1, m.r):
            denom = 1 - m.V[i, i]
            if denom == 0:
                raise ValueError("non-principal V entry equal to 1")
            xi[i] = gap[i] / denom
        if any(x != 0 for x in xi[1:]):
            full[t] = xi
            filled[t] = xi
    return full, filled


def verify_order(entry: Union[MethodEntry, GlmTableau], start: BSeries, p: int = 4,
                 complete: bool = False) -> OrderReport:
    """Largest ``q <= p`` with output equal to the target on every tree of order ``<= q``.

    Defects are reported for order ``q + 1`` (at most 5).  With ``complete``,
    non-principal start entries at order ``q + 1`` are first fitted by
    :func:`complete_start`, which is the freedom left to the starting method.
    """
    m = entry.tableau if isinstance(entry, MethodEntry) else entry
    if p > MAX_ORDER - 1:
        raise ValueError(f"p must be at most {MAX_ORDER - 1}")
    if start.max_order < MAX_ORDER:
        start = BSeries(dict(start.coeffs), start.dim, MAX_ORDER)
    out, target = output_series(m, start), exact_shift(start)
    verified, offending = p, None
    for t in enumerate_trees(p):
        if any(x != 0 for x in out[t] - target[t]):
            verified, offending = t.order - 1, t
            break
    completion = {}
    if complete and verified + 1 <= MAX_ORDER:
        start, completion = complete_start(m, start, verified + 1)
        out, target = output_series(m, start), exact_shift(start)
    defects = {t: out[t] - target[t] for t in _trees_of_order(verified + 1)}
    return OrderReport(m.name, verified, defects, offending, completion)


# --------------------------------------------------------------------------
# starting methods
# --------------------------------------------------------------------------

def rk_weights(tab: RkTableau, max_order: int = MAX_ORDER) -> BSeries:
    """Scalar series of one step of an RK method, using ``A 1`` as abscissae."""
    if not tab.is_exact:
        A, b = tab.Af.astype(object), tab.bf.astype(object)
        ones = np.ones(tab.s).astype(object)
    else:
        A, b, ones = tab.A, tab.b, qvec([1] * tab.s)
    phi = {}
    out = BSeries({EMPTY: Fraction(1) if tab.is_exact else 1.0}, None, max_order)
    for t in enumerate_trees(max_order):
        v = ones.copy()
        for c in t.children:
            v = v * (A @ phi[c])
        phi[t] = v
        out[t] = b @ v
    return out


def start_series_from_triple(triple: StartingTriple, max_order: int = MAX_ORDER) -> BSeries:
    """Two-component series of the starting map defined by ``triple``."""
    if triple.variant == "identity":
        return BSeries.stack([identity_series(max_order)])
    a = rk_weights(triple.forward, max_order)
    one = a[EMPTY]
    xi1 = identity_series(max_order)
    xi1[EMPTY] = one
    xi2 = BSeries({}, None, max_order)
    C = triple.C
    for t in enumerate_trees(max_order):
        odd = t.order % 2 == 1
        if triple.variant == "pair":
            # (R_h + R_-h)/2 keeps even trees, C (R_h - R_-h)/2 keeps odd ones
            xi1[t] = a[t] * 0 if odd else a[t]
            xi2[t] = C * a[t] if odd else a[t] * 0
        elif triple.variant == "half-difference":
            xi2[t] = C * a[t] if odd else a[t] * 0
        elif triple.variant == "shift":
            xi2[t] = a[t]
    if triple.forward.is_exact:
        return BSeries.stack([xi1, xi2])
    out = BSeries({}, 2, max_order)
    for t in trees_with_empty(max_order):
        v = np.empty(2, dtype=object)
        v[0], v[1] = xi1[t], xi2[t]
        out[t] = v
    return out


def starting_conditions(triple: StartingTriple) -> np.ndarray:
    """``x = (xi_2(tau), xi_1([tau]), xi_2([tau^2]), xi_2([[tau]]))`` of the starting map.

    For the ``pair`` variant these are ``C b.1, b.c, C b.c^2, C b.Ac``.
    """
    xi = start_series_from_triple(triple, 3)
    labels = ("τ", "[τ]", "[τ²]", "[[τ]]")
    comps = (1, 0, 1, 1)
    vals = [xi[tree_by_label(lbl)][i] for lbl, i in zip(labels, comps)]
    if all(isinstance(v, Fraction) for v in vals):
        return qvec(vals)
    return np.array([float(v) for v in vals])


def registered_start(entry: MethodEntry) -> BSeries:
    """The starting series stored with the entry (Table-1 layout, through order 4)."""
    if entry.start_xi is None:
        raise ValueError(f"{entry.name} has no registered starting series")
    r = len(entry.start_xi)
    out = BSeries({}, r, MAX_ORDER)
    for j, t in enumerate(TABLE_TREES):
        out[t] = qvec([entry.start_xi[i][j] for i in range(r)])
    return out


def symmetric_start_check(start: BSeries, L) -> bool:
    """``(-1)^|t| xi(t) = L xi(t)`` on every stored tree."""
    Lm = np.asarray(L)
    for t, v in start.coeffs.items():
        sign = -1 if t.order % 2 else 1
        lhs = np.array([sign * x for x in v], dtype=object)
        rhs = Lm @ v
        if any(abs(to_float(np.array([x - y], dtype=object))[0]) > 1e-14 for x, y in zip(lhs, rhs)):
            return False
    return True


# --------------------------------------------------------------------------
# Table-1 style grid
# --------------------------------------------------------------------------

def order_table(entry: MethodEntry, start: Optional[BSeries] = None, max_order: int = 4) -> dict:
    """Rows ``xi_i``, ``eta_i``, ``(eta_i D)``, target ``(E xi_i)`` and output, keyed by row name.

    Each row maps tree label to a Fraction.  ``eta_i`` is omitted on the
    highest order, where it is never needed.
    """
    m = entry.tableau
    start = registered_start(entry) if start is None else start
    eta, eta_d = stage_series(m, start)
    target, out = exact_shift(start), output_series(m, start)
    trees = trees_with_empty(max_order)
    rows = {}
    for i in range(m.r):
        rows[f"xi{i + 1}"] = {t.label: start[t][i] for t in trees}
    for i in range(m.s):
        rows[f"eta{i + 1}"] = {t.label: eta[t][i] for t in trees if t.order < max_order}
        rows[f"eta{i + 1}D"] = {t.label: eta_d[t][i] for t in trees}
    for i in range(m.r):
        rows[f"Exi{i + 1}"] = {t.label: target[t][i] for t in trees}
    for i in range(m.r):
        rows[f"out{i + 1}"] = {t.label: out[t][i] for t in trees}
    return rows
