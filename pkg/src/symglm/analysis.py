"""Algebraic and spectral checks on GLM tableaux.

Checks that only involve the coefficients run in exact rational arithmetic
whenever the tableau is exact, so a passing residual there is literally zero.
Spectral and transfer-function checks run in complex binary64 at points drawn
from a generator seeded with :data:`SEED`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import numpy as np

from .exact import inv, is_exact, max_abs, qeye, qvec, solve, to_float
from .tableau import GlmTableau, MethodEntry

SEED = 42

CHECKS = (
    "preconsistency", "consistency", "symmetry", "parasitism", "trace",
    "stability-inverse", "imag-scan", "transfer-symmetry",
    "gsymplectic-matrix", "gsymplectic-transfer", "gsym-thm-conditions",
)

IDENTITY_TOL = 1e-12
SPECTRAL_TOL = 1e-10
FLOAT_ALGEBRAIC_TOL = 1e-13


@dataclass
class CheckReport:
    method: str
    check: str
    residual: float
    tolerance: float
    details: dict = field(default_factory=dict)
    applicable: bool = True

    def __post_init__(self):
        if self.check not in CHECKS:
            raise ValueError(f"unknown check {self.check!r}")
        self.residual = float(self.residual)

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def as_json(self) -> dict:
        return {"method": self.method, "check": self.check,
                "residual": self.residual, "pass": self.passed}


@dataclass
class StabilityScan:
    method: str
    samples: list  # (x, eigenvalues, max_modulus_deviation)
    k0_estimate: float
    tolerance: float
    stop_reason: str  # "none", "modulus", "multiple-eigenvalue" or "singular"
    skipped: list = field(default_factory=list)


def _tol(m: GlmTableau, exact_tol: float = 0.0, float_tol: float = FLOAT_ALGEBRAIC_TOL) -> float:
    return exact_tol if m.is_exact else float_tol


def _eye(m: GlmTableau, n: int):
    return qeye(n) if m.is_exact else np.eye(n)


def _ones(m: GlmTableau, n: int):
    return qvec([1] * n) if m.is_exact else np.ones(n)


def _e1(m: GlmTableau):
    e = qvec([0] * m.r) if m.is_exact else np.zeros(m.r)
    e[0] = Fraction(1) if m.is_exact else 1.0
    return e


def _mats(m: GlmTableau):
    """Coefficient matrices in their most exact available form."""
    if m.is_exact:
        return m.A, m.U, m.B, m.V, m.L, m.P
    f = m.numeric
    return f.A, f.U, f.B, f.V, f.L, f.P


# --------------------------------------------------------------------------
# consistency, symmetry, parasitism
# --------------------------------------------------------------------------

def check_preconsistency(m: GlmTableau) -> CheckReport:
    """``V u = u``, ``w^H V = w^H`` and ``w^H u = 1`` with ``u = w = e1``."""
    A, U, B, V, L, P = _mats(m)
    u = w = _e1(m)
    parts = {
        "Vu=u": max_abs(V @ u - u),
        "wV=w": max_abs(w @ V - w),
        "wu=1": abs(float(w @ u - 1)),
    }
    return CheckReport(m.name, "preconsistency", max(parts.values()), _tol(m), {"parts": parts})


def check_consistency(m: GlmTableau) -> CheckReport:
    """Preconsistency plus ``U u = 1`` and a solvable ``B 1 + V v = u + v``.

    The principal row of that system reads ``(B 1)_1 = 1``; the non-principal
    block ``I - V`` is nonsingular for the canonical ``V`` used here, which
    fixes ``v`` up to its first entry (set to zero).
    """
    A, U, B, V, L, P = _mats(m)
    u = _e1(m)
    parts = dict(check_preconsistency(m).details["parts"])
    parts["Uu=1"] = max_abs(U @ u - _ones(m, m.s))
    B1 = B @ _ones(m, m.s)
    parts["(B1)_1=1"] = abs(float(B1[0] - 1))
    v = qvec([0] * m.r) if m.is_exact else np.zeros(m.r)
    if m.r > 1:
        K = (_eye(m, m.r) - V)[1:, 1:]
        try:
            v[1:] = solve(K, B1[1:] - u[1:])
            parts["v-solve"] = max_abs(B1 + V @ v - u - v)
        except np.linalg.LinAlgError:
            parts["v-solve"] = float("inf")
    residual = max(parts.values())
    return CheckReport(m.name, "consistency", residual, _tol(m),
                       {"parts": parts, "v": [_show(x) for x in v]})


def symmetry_blocks(m: GlmTableau) -> dict:
    A, U, B, V, L, P = _mats(m)
    Vi = inv(V)
    return {
        "A+PAP-UV^-1B": A + P @ A @ P - U @ Vi @ B,
        "PU-ULV": P @ U - U @ L @ V,
        "BP-VLB": B @ P - V @ L @ B,
        "L-VLV": L - V @ L @ V,
    }


def symmetry_residual(m: GlmTableau) -> float:
    return max(max_abs(b) for b in symmetry_blocks(m).values())


def check_symmetry(m: GlmTableau) -> CheckReport:
    """Residual of the four blocks of the ``(L, P)``-symmetry identity."""
    blocks = {k: max_abs(v) for k, v in symmetry_blocks(m).items()}
    return CheckReport(m.name, "symmetry", max(blocks.values()), _tol(m), {"blocks": blocks})


def _is_diagonal(M) -> bool:
    n = M.shape[0]
    return all(M[i, j] == 0 for i in range(n) for j in range(n) if i != j)


def parasitism_factors(m: GlmTableau) -> list:
    """Non-principal diagonal entries of ``BU``; all zero iff the method is parasitism-free.

    Requires canonical coordinates (diagonal ``V`` with ``V[0, 0] = 1``);
    transform first with :func:`symglm.tableau.equivalence_transform`.
    """
    A, U, B, V, L, P = _mats(m)
    if not _is_diagonal(V) or V[0, 0] != 1:
        raise ValueError(
            f"{m.name}: V is not in canonical diagonal form; apply equivalence_transform first"
        )
    BU = B @ U
    return [BU[i, i] for i in range(1, m.r)]


def check_parasitism(m: GlmTableau) -> CheckReport:
    factors = parasitism_factors(m)
    residual = max((abs(float(f)) for f in factors), default=0.0)
    growth = [_show(-f) for f in factors]
    return CheckReport(m.name, "parasitism", residual, _tol(m), {"growth_factors": growth})


def trace_identity(m: GlmTableau) -> CheckReport:
    """``|tr(A + PAP) - 1|``, plus the number of implicit stages."""
    A, U, B, V, L, P = _mats(m)
    tr = np.trace(A + P @ A @ P)
    return CheckReport(m.name, "trace", abs(float(tr - 1)), _tol(m),
                       {"trace": _show(tr), "implicit_stages": m.implicit_stages})


def _show(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return x
    return float(x)


# --------------------------------------------------------------------------
# linear stability
# --------------------------------------------------------------------------

def _diag(Z, s):
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim == 0:
        return np.full(s, complex(Z))
    if Z.ndim == 2:
        return np.diag(Z).copy()
    return Z


def stability_matrix(m: GlmTableau, Z) -> np.ndarray:
    """``M(Z) = V + B Z (I - A Z)^{-1} U`` for diagonal ``Z`` (matrix, vector or scalar)."""
    f = m.numeric
    z = _diag(Z, m.s)
    IAZ = np.eye(m.s) - f.A * z[None, :]
    if np.linalg.cond(IAZ) > 1e14:
        raise np.linalg.LinAlgError(f"I - AZ is singular for {m.name}")
    return f.V + (f.B * z[None, :]) @ np.linalg.solve(IAZ, f.U)


def small_eigenvalues(M: np.ndarray) -> np.ndarray:
    """Eigenvalues of a 1x1-4x4 matrix: closed form for r <= 2, characteristic polynomial otherwise."""
    r = M.shape[0]
    if r == 1:
        return np.array([M[0, 0]], dtype=complex)
    if r == 2:
        tr = M[0, 0] + M[1, 1]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        disc = np.sqrt(complex(tr * tr - 4 * det))
        # avoid cancellation in the smaller root
        big = (tr + disc) / 2 if abs(tr + disc) >= abs(tr - disc) else (tr - disc) / 2
        small = det / big if big != 0 else (tr - big)
        return np.array([big, small], dtype=complex)
    if r > 4:
        raise ValueError("eigenvalue helper supports r <= 4")
    # Faddeev--LeVerrier coefficients, then polynomial roots
    coeffs = [1.0 + 0j]
    Mk = np.zeros_like(M, dtype=complex)
    I = np.eye(r)
    for k in range(1, r + 1):
        Mk = M @ Mk + coeffs[-1] * I
        coeffs.append(-np.trace(M @ Mk) / k)
    return np.roots(coeffs)


def check_stability_inverse(m: GlmTableau, n: int = 100, seed: int = SEED,
                            tol: float = 1e-11) -> CheckReport:
    """``L M(-PZP) L M(Z) = I`` at ``n`` random diagonal ``Z`` with ``|Z| < 0.5 / |A|``."""
    rng = np.random.default_rng(seed)
    f = m.numeric
    radius = 0.5 / max(np.linalg.norm(f.A, 2), 1e-300)
    worst = 0.0
    for _ in range(n):
        rad = radius * np.sqrt(rng.uniform(0, 1, m.s))
        z = rad * np.exp(2j * np.pi * rng.uniform(0, 1, m.s))
        Z = np.diag(z)
        lhs = f.L @ stability_matrix(m, -f.P @ Z @ f.P) @ f.L @ stability_matrix(m, Z)
        worst = max(worst, float(np.max(np.abs(lhs - np.eye(m.r)))))
    return CheckReport(m.name, "stability-inverse", worst, tol, {"samples": n, "seed": seed})


def imaginary_axis_scan(m: GlmTableau, x_max: float, n_samples: int,
                        tol: float = SPECTRAL_TOL) -> StabilityScan:
    """Moduli of the eigenvalues of ``M(ixI)`` on a uniform grid in ``(0, x_max]``."""
    samples, skipped = [], []
    k0, stop, broken = 0.0, "none", False
    for k in range(1, n_samples + 1):
        x = x_max * k / n_samples
        try:
            eig = small_eigenvalues(stability_matrix(m, 1j * x))
        except np.linalg.LinAlgError:
            skipped.append(x)
            if not broken:
                broken, stop = True, "singular"
            continue
        dev = float(np.max(np.abs(np.abs(eig) - 1.0)))
        samples.append((x, eig, dev))
        if not broken:
            if dev < tol:
                k0 = x
            else:
                broken = True
                stop = "multiple-eigenvalue" if _near_collision(eig) else "modulus"
    return StabilityScan(m.name, samples, k0, tol, stop, skipped)


def _near_collision(eig) -> bool:
    if len(eig) < 2:
        return False
    gaps = [abs(a - b) for i, a in enumerate(eig) for b in eig[i + 1:]]
    # just past a collision the pair leaves the circle as (lam, 1/conj(lam))
    return min(gaps) < 0.2 or any(
        abs(a * np.conj(b) - 1) < 1e-8 for i, a in enumerate(eig) for b in eig[i + 1:]
    )


def refine_k0(m: GlmTableau, lo: float, hi: float, tol: float = SPECTRAL_TOL,
              iterations: int = 60) -> float:
    """Bisect between a stable ``lo`` and an unstable ``hi`` on the imaginary axis."""
    def stable(x):
        try:
            eig = small_eigenvalues(stability_matrix(m, 1j * x))
        except np.linalg.LinAlgError:
            return False
        return np.max(np.abs(np.abs(eig) - 1.0)) < tol

    if not stable(lo) or stable(hi):
        raise ValueError("refine_k0 needs a stable lo and an unstable hi")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return lo


def check_imag_scan(m: GlmTableau, x_max: float = 4.0, n: int = 400) -> CheckReport:
    scan = imaginary_axis_scan(m, x_max, n)
    # residual 0 when a nontrivial stable interval exists
    residual = 0.0 if scan.k0_estimate > 0 else 1.0
    return CheckReport(m.name, "imag-scan", residual, 0.0,
                       {"k0_estimate": scan.k0_estimate, "stop_reason": scan.stop_reason,
                        "x_max": x_max})


# --------------------------------------------------------------------------
# transfer function
# --------------------------------------------------------------------------

def transfer_function(m: GlmTableau, zeta: complex) -> np.ndarray:
    """``N(zeta) = A + U (zeta I - V)^{-1} B``."""
    f = m.numeric
    K = zeta * np.eye(m.r) - f.V
    if np.linalg.cond(K) > 1e14:
        raise np.linalg.LinAlgError(f"zeta={zeta} is an eigenvalue of V")
    return f.A + f.U @ np.linalg.solve(K, f.B)


def transfer_adjoint(m: GlmTableau, zeta: complex) -> np.ndarray:
    """``N^H`` evaluated at ``1/zeta``: ``A^H + B^H (zeta^{-1} I - V^H)^{-1} U^H``."""
    f = m.numeric
    K = np.eye(m.r) / zeta - f.V.conj().T
    return f.A.conj().T + f.B.conj().T @ np.linalg.solve(K, f.U.conj().T)


def random_off_circle(n: int, seed: int = SEED) -> np.ndarray:
    """Points with modulus in ``[0.3, 0.8] U [1.25, 3]`` and uniform argument."""
    rng = np.random.default_rng(seed)
    inside = rng.uniform(0, 1, n) < 0.5
    mod = np.where(inside, rng.uniform(0.3, 0.8, n), rng.uniform(1.25, 3.0, n))
    return mod * np.exp(2j * np.pi * rng.uniform(0, 1, n))


def check_transfer_symmetry(m: GlmTableau, zetas=None) -> CheckReport:
    """``N(zeta) + P N(1/zeta) P = 0`` at random points off the unit circle."""
    zetas = random_off_circle(20) if zetas is None else zetas
    P = m.numeric.P
    worst = 0.0
    for z in zetas:
        N = transfer_function(m, z)
        res = N + P @ transfer_function(m, 1 / z) @ P
        worst = max(worst, float(np.max(np.abs(res))) / max(1.0, float(np.max(np.abs(N)))))
    return CheckReport(m.name, "transfer-symmetry", worst, IDENTITY_TOL, {"points": len(zetas)})


def check_gsymplectic_transfer(m: GlmTableau, D, zetas=None) -> CheckReport:
    """``D N(zeta) + N^H(1/zeta) D = 0``."""
    zetas = random_off_circle(20) if zetas is None else zetas
    Df = to_float(np.asarray(D))
    worst = 0.0
    for z in zetas:
        N = transfer_function(m, z)
        res = Df @ N + transfer_adjoint(m, z) @ Df
        worst = max(worst, float(np.max(np.abs(res))) / max(1.0, float(np.max(np.abs(N)))))
    return CheckReport(m.name, "gsymplectic-transfer", worst, IDENTITY_TOL, {"points": len(zetas)})


def pdn_hermitian_residual(m: GlmTableau, D, zetas) -> float:
    """Worst ``|PDN(zeta) - (PDN(zeta))^H|`` (the third of the symmetric/G-symplectic trio)."""
    f = m.numeric
    Df = to_float(np.asarray(D))
    worst = 0.0
    for z in zetas:
        X = f.P @ Df @ transfer_function(m, z)
        worst = max(worst, float(np.max(np.abs(X - X.conj().T))))
    return worst


# --------------------------------------------------------------------------
# G-symplecticity
# --------------------------------------------------------------------------

def gsymplectic_blocks(m: GlmTableau, G, D):
    A, U, B, V, L, P = _mats(m)
    if not (is_exact(np.asarray(G)) and is_exact(np.asarray(D)) and m.is_exact):
        A, U, B, V = (to_float(x) for x in (A, U, B, V))
        G, D = to_float(np.asarray(G)), to_float(np.asarray(D))
    H = lambda X: X.conj().T if X.dtype != object else X.T
    return {
        "DA+AD-BGB": D @ A + H(A) @ D - H(B) @ G @ B,
        "DU-BGV": D @ U - H(B) @ G @ V,
        "UD-VGB": H(U) @ D - H(V) @ G @ B,
        "G-VGV": G - H(V) @ G @ V,
    }


def check_gsymplectic(m: GlmTableau, G, D) -> CheckReport:
    blocks = {k: max_abs(v) for k, v in gsymplectic_blocks(m, G, D).items()}
    exact = m.is_exact and is_exact(np.asarray(G)) and is_exact(np.asarray(D))
    return CheckReport(m.name, "gsymplectic-matrix", max(blocks.values()),
                       0.0 if exact else 1e-14, {"blocks": blocks})


def best_gsymplectic_G(m: GlmTableau, D) -> tuple:
    """Least-squares symmetric ``G`` for a fixed ``D``; returns ``(G, residual)``.

    The residual is the max-norm of the block matrix at the minimiser, so a
    positive value shows that *no* symmetric ``G`` works with this ``D``.
    """
    f = m.numeric
    Df = to_float(np.asarray(D))
    r = m.r
    basis = []
    for i in range(r):
        for j in range(i, r):
            E = np.zeros((r, r))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)

    def blocks(G):
        return np.concatenate([x.ravel() for x in gsymplectic_blocks(
            GlmTableau(m.name, f.A, f.U, f.B, f.V, f.L, f.P), G, Df).values()])

    b0 = blocks(np.zeros((r, r)))
    cols = np.stack([blocks(E) - b0 for E in basis], axis=1)
    coef, *_ = np.linalg.lstsq(cols, -b0, rcond=None)
    G = sum(c * E for c, E in zip(coef, basis))
    return G, float(np.max(np.abs(blocks(G))))


def check_gsym_structural(m: GlmTableau) -> CheckReport:
    """Sufficient (and, for distinct eigenvalues of V, necessary) coefficient conditions.

    With ``D = h1 diag(b)`` and ``h1 = 1``, look for real ``h_i`` with
    ``D U e_i = h_i zeta_i B^T e_i`` and require a palindromic diagonal of ``A``.
    """
    A, U, B, V, L, P = _mats(m)
    details = {}
    if not m.lower_triangular or not _is_diagonal(V):
        return CheckReport(m.name, "gsym-thm-conditions", 1.0, 0.0,
                           {"reason": "needs lower-triangular A and diagonal V"},
                           applicable=False)
    b = B[0]
    hs, res_h = [_show(b[0] * 0 + 1)], 0.0
    for i in range(1, m.r):
        x = b * U[:, i]
        y = V[i, i] * B[i]
        yy = sum(v * v for v in y)
        h = sum(a * c for a, c in zip(x, y)) / yy if yy != 0 else 0 * yy
        if h == 0:
            # h_i must be nonzero, so the best admissible fit leaves all of x
            res_h = max(res_h, max_abs(x))
            hs.append(None)
            continue
        res_h = max(res_h, max_abs(x - h * y))
        hs.append(_show(h))
    diag = [A[i, i] for i in range(m.s)]
    res_pal = max(abs(float(diag[i] - diag[-1 - i])) for i in range(m.s))
    details.update({"h": hs, "h_residual": res_h, "diag_A": [_show(d) for d in diag],
                    "palindromic_residual": res_pal,
                    "failed": [k for k, v in (("h", res_h), ("palindrome", res_pal)) if v > 0]})
    return CheckReport(m.name, "gsym-thm-conditions", max(res_h, res_pal), _tol(m), details)


# --------------------------------------------------------------------------
# batteries
# --------------------------------------------------------------------------

def run_checks(entry: MethodEntry) -> list:
    """Every applicable check for a registered method.

    G-symplectic checks are informative only (``applicable = False``) for
    methods without registered ``(G, D)`` data.
    """
    m = entry.tableau
    reports = [
        check_preconsistency(m),
        check_consistency(m),
        check_symmetry(m),
        check_parasitism(m),
        trace_identity(m),
        check_stability_inverse(m),
        check_imag_scan(m),
        check_transfer_symmetry(m),
    ]
    if entry.gsymplectic_data is not None:
        G, D = entry.gsymplectic_data
        reports.append(check_gsymplectic(m, G, D))
        reports.append(check_gsymplectic_transfer(m, D))
    structural = check_gsym_structural(m)
    if entry.gsymplectic_data is None:
        structural.applicable = False
    reports.append(structural)
    return reports
