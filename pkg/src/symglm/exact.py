"""Small exact-arithmetic helpers for tableau matrices.

Exact matrices are numpy arrays of ``dtype=object`` holding
:class:`fractions.Fraction` entries, so ``+``, ``-``, ``*`` and ``@`` all work
unchanged; only inversion and solves need custom code.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

import numpy as np

Number = Union[int, float, Fraction, str]


def frac(x: Number) -> Fraction:
    """Parse ``"1/6"``, ints and Fractions; floats are rejected to avoid silent rounding."""
    if isinstance(x, float):
        raise TypeError(f"refusing to convert float {x!r} to an exact rational")
    return Fraction(x)


def qmat(rows: Iterable[Iterable[Number]]) -> np.ndarray:
    """Build an exact 2-D matrix from nested rows of rationals."""
    data = [[frac(v) for v in row] for row in rows]
    out = np.empty((len(data), len(data[0]) if data else 0), dtype=object)
    for i, row in enumerate(data):
        if len(row) != out.shape[1]:
            raise ValueError("ragged matrix rows")
        for j, v in enumerate(row):
            out[i, j] = v
    return out


def qvec(values: Iterable[Number]) -> np.ndarray:
    vals = [frac(v) for v in values]
    out = np.empty(len(vals), dtype=object)
    for i, v in enumerate(vals):
        out[i] = v
    return out


def qeye(n: int) -> np.ndarray:
    out = np.full((n, n), Fraction(0), dtype=object)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def qzeros(shape) -> np.ndarray:
    return np.full(shape, Fraction(0), dtype=object)


def is_exact(m: np.ndarray) -> bool:
    return m.dtype == object


def to_float(m: np.ndarray) -> np.ndarray:
    if m.dtype == object:
        return np.array(m.tolist(), dtype=float).reshape(m.shape)
    return np.asarray(m, dtype=float)


def max_abs(m) -> float:
    """Max-norm of an array of Fractions, floats or complex numbers, as a float."""
    arr = np.asarray(m)
    if arr.size == 0:
        return 0.0
    if arr.dtype == object:
        return float(max(abs(v) for v in arr.flat))
    return float(np.max(np.abs(arr)))


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` exactly (object arrays) or in binary64 otherwise.

    Raises :class:`numpy.linalg.LinAlgError` for singular ``a``.
    """
    if a.dtype != object and b.dtype != object:
        return np.linalg.solve(a, b)
    n = a.shape[0]
    vec = b.ndim == 1
    rhs = b.reshape(n, -1)
    aug = np.empty((n, n + rhs.shape[1]), dtype=object)
    aug[:, :n] = a
    aug[:, n:] = rhs
    aug = np.vectorize(Fraction, otypes=[object])(aug)
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r, col] != 0), None)
        if pivot is None:
            raise np.linalg.LinAlgError("singular matrix")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] = aug[col] / aug[col, col]
        for r in range(n):
            if r != col and aug[r, col] != 0:
                aug[r] = aug[r] - aug[r, col] * aug[col]
    x = aug[:, n:]
    return x.reshape(n) if vec else x


def inv(a: np.ndarray) -> np.ndarray:
    if a.dtype != object:
        return np.linalg.inv(a)
    return solve(a, qeye(a.shape[0]))


def is_lower_triangular(a: np.ndarray) -> bool:
    n = a.shape[0]
    return all(a[i, j] == 0 for i in range(n) for j in range(i + 1, n))


def reversal(n: int) -> np.ndarray:
    """The stage-reversing permutation matrix, exact."""
    out = qzeros((n, n))
    for i in range(n):
        out[i, n - 1 - i] = Fraction(1)
    return out
