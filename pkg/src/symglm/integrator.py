"""Fixed-step GLM integration: starting method, main loop, finishing method.

Implicit stages are solved by Newton iteration in stage index order.  The
update ``y[n] = h B F + V y[n-1]`` is accumulated with per-component Kahan
compensation; for a diagonal ``V`` entry of ``-1`` the value and its
compensation term flip sign together.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exact import to_float
from .tableau import MethodEntry, RkTableau, lookup

EPS = np.finfo(float).eps


class NewtonError(RuntimeError):
    def __init__(self, stage: int, residual: float, iterations: int):
        super().__init__(
            f"Newton iteration failed on stage {stage} after {iterations} iterations "
            f"(last increment {residual:.3e})"
        )
        self.stage, self.residual, self.iterations = stage, residual, iterations


class IntegrationError(RuntimeError):
    """Run aborted; ``trajectory`` holds every sample taken before the failure."""

    def __init__(self, message: str, step: int, trajectory: "Trajectory"):
        super().__init__(f"step {step}: {message}")
        self.step, self.trajectory = step, trajectory


# --------------------------------------------------------------------------
# problem and configuration types
# --------------------------------------------------------------------------

def fd_jacobian(f: Callable, y: np.ndarray) -> np.ndarray:
    """Central differences with step ``sqrt(eps) (1 + |y_j|)``."""
    n = y.size
    J = np.empty((n, n))
    for j in range(n):
        d = math.sqrt(EPS) * (1.0 + abs(y[j]))
        e = np.zeros(n)
        e[j] = d
        J[:, j] = (f(y + e) - f(y - e)) / (2 * d)
    return J


@dataclass
class OdeProblem:
    """Autonomous system ``y' = f(y)`` with optional Jacobian and named invariants."""

    name: str
    f: Callable
    y0: np.ndarray
    jacobian: Optional[Callable] = None
    invariants: dict = field(default_factory=dict)
    reversibility_R: tuple = ()
    check_jacobian: bool = True

    def __post_init__(self):
        self.y0 = np.asarray(self.y0, dtype=float)
        if self.jacobian is not None and self.check_jacobian:
            err = jacobian_error(self, self.y0)
            if err > 1e-6:
                raise ValueError(f"{self.name}: analytic Jacobian disagrees with f ({err:.2e})")

    @property
    def N(self) -> int:
        return self.y0.size

    def jac(self, y: np.ndarray) -> np.ndarray:
        if self.jacobian is not None:
            return self.jacobian(y)
        return fd_jacobian(self.f, y)

    def invariant_values(self, y: np.ndarray) -> np.ndarray:
        return np.array([g(y) for g in self.invariants.values()])


def jacobian_error(prob: OdeProblem, y: np.ndarray) -> float:
    """Relative max-norm gap between the analytic and finite-difference Jacobians."""
    Ja, Jf = prob.jacobian(y), fd_jacobian(prob.f, y)
    return float(np.max(np.abs(Ja - Jf)) / max(1.0, np.max(np.abs(Jf))))


@dataclass
class RunConfig:
    method: str
    h: float
    T: float
    sample_stride: int = 1
    newton_tol: float = 1e-13
    newton_max_iter: int = 50
    compensated: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.T >= self.h * (1 - 1e-12):
            raise ValueError("T must be at least h")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be at least 1")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.h + 1e-9))


@dataclass
class Trajectory:
    method: str
    problem: str
    h: float
    invariant_names: tuple
    t: list = field(default_factory=list)
    y: list = field(default_factory=list)
    invariant_errors: list = field(default_factory=list)
    wall_time: float = 0.0
    newton_total: int = 0
    newton_max: int = 0

    @property
    def newton_stats(self) -> tuple:
        return (self.newton_total, self.newton_max)

    @property
    def samples(self) -> list:
        return list(zip(self.t, self.y, self.invariant_errors))

    def errors(self) -> np.ndarray:
        return np.array(self.invariant_errors).reshape(len(self.t), len(self.invariant_names))

    def write_csv(self, path) -> None:
        write_csv(self, path)


class _Stats:
    __slots__ = ("total", "max", "solves")

    def __init__(self):
        self.total = 0
        self.max = 0
        self.solves = 0

    def add(self, k: int):
        self.total += k
        self.max = max(self.max, k)
        self.solves += 1


# --------------------------------------------------------------------------
# stage solver
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _StageScheme:
    A: np.ndarray
    lower: bool
    diag: np.ndarray
    nonzero_lower: tuple  # per stage, indices j < i with a_ij != 0

    @staticmethod
    def of(A: np.ndarray) -> "_StageScheme":
        A = np.asarray(A, dtype=float)
        s = A.shape[0]
        lower = bool(np.all(np.triu(A, 1) == 0))
        nz = tuple(tuple(j for j in range(i) if A[i, j] != 0) for i in range(s))
        return _StageScheme(A, lower, np.diag(A).copy(), nz)


def _maxabs(x) -> float:
    return float(np.abs(x).max())


def solve_stages(scheme: _StageScheme, base: np.ndarray, prob: OdeProblem, h: float,
                 tol: float, max_iter: int, stats: Optional[_Stats] = None) -> np.ndarray:
    """Stage derivatives ``F`` (``s x N``) for ``Y = h A F + base``.

    Each implicit stage uses a simplified Newton iteration with the Jacobian
    frozen at the predictor, stopped when ``|dY| <= tol (1 + |Y|)``.  A
    predictor whose residual already meets that bound is accepted as is.
    """
    if not scheme.lower:
        return _solve_coupled(scheme, base, prob, h, tol, max_iter, stats)
    s, n = base.shape
    F = np.empty_like(base)
    f = prob.f
    A = scheme.A
    eye = np.eye(n)
    for i in range(s):
        known = base[i].copy()
        for j in scheme.nonzero_lower[i]:
            known += (h * A[i, j]) * F[j]
        aii = scheme.diag[i]
        if aii == 0:
            F[i] = f(known)
            continue
        ha = h * aii
        # predictor: previous stage derivative, or f at the explicit part
        Y = known + ha * (F[i - 1] if i > 0 else f(known))
        fy = f(Y)
        G = Y - ha * fy - known
        it = 0
        if _maxabs(G) > tol * (1.0 + _maxabs(Y)):
            # frozen Jacobian: one small inverse, then matrix-vector products
            Minv = np.linalg.inv(eye - ha * prob.jac(Y))
            for it in range(1, max_iter + 1):
                dY = Minv @ G
                Y = Y - dY
                fy = f(Y)
                d = _maxabs(dY)
                if d != d or not math.isfinite(fy[0]):
                    raise NewtonError(i, float("nan"), it)
                if d <= tol * (1.0 + _maxabs(Y)):
                    break
                G = Y - ha * fy - known
            else:
                raise NewtonError(i, d, max_iter)
        if stats is not None:
            stats.add(it)
        F[i] = fy
    return F


def _solve_coupled(scheme, base, prob, h, tol, max_iter, stats):
    """Full Newton on all stages when ``A`` is not lower triangular."""
    s, n = base.shape
    A = scheme.A
    Y = base.copy()
    for it in range(1, max_iter + 1):
        Fy = np.array([prob.f(y) for y in Y])
        G = (Y - h * A @ Fy - base).ravel()
        J = np.eye(s * n)
        for i in range(s):
            for j in range(s):
                if A[i, j] != 0:
                    J[i * n:(i + 1) * n, j * n:(j + 1) * n] -= h * A[i, j] * prob.jac(Y[j])
        dY = np.linalg.solve(J, -G).reshape(s, n)
        Y = Y + dY
        if not np.all(np.isfinite(Y)):
            raise NewtonError(-1, float("nan"), it)
        if _maxabs(dY) <= tol * (1.0 + _maxabs(Y)):
            break
    else:
        raise NewtonError(-1, float(np.max(np.abs(dY))), max_iter)
    if stats is not None:
        stats.add(it)
    return np.array([prob.f(y) for y in Y])


# --------------------------------------------------------------------------
# Runge--Kutta steps and starting/finishing
# --------------------------------------------------------------------------

def rk_step(tab: RkTableau, prob: OdeProblem, y: np.ndarray, h: float,
            tol: float = 1e-13, max_iter: int = 50, stats: Optional[_Stats] = None) -> np.ndarray:
    """One step of ``tab`` with signed step ``h``."""
    scheme = _StageScheme.of(tab.Af)
    base = np.repeat(np.asarray(y, float)[None, :], tab.s, axis=0)
    F = solve_stages(scheme, base, prob, h, tol, max_iter, stats)
    return y + h * (tab.bf @ F)


def _config_kw(cfg: Optional[RunConfig]) -> dict:
    if cfg is None:
        return {"tol": 1e-13, "max_iter": 50}
    return {"tol": cfg.newton_tol, "max_iter": cfg.newton_max_iter}


def start(entry: MethodEntry, prob: OdeProblem, h: float, y0=None,
          cfg: Optional[RunConfig] = None, stats: Optional[_Stats] = None,
          symmetrize: bool = False) -> np.ndarray:
    """Starting values ``y[0]`` as an ``r x N`` array.

    With ``symmetrize`` the map is replaced by ``(S_h + L S_-h) / 2``, which
    satisfies ``S_-h = L S_h`` exactly and keeps the order of a start that is
    already symmetric to that order.
    """
    if symmetrize:
        L = entry.tableau.numeric.L
        plus = start(entry, prob, h, y0, cfg, stats)
        minus = start(entry, prob, -h, y0, cfg, stats)
        return 0.5 * (plus + L @ minus)
    y0 = prob.y0 if y0 is None else np.asarray(y0, float)
    st = entry.starting
    kw = _config_kw(cfg)
    r = entry.tableau.r
    out = np.zeros((r, y0.size))
    if st.variant == "identity":
        out[0] = y0
        return out
    C = float(st.C)
    fwd = rk_step(st.forward, prob, y0, h, stats=stats, **kw)
    if st.variant == "shift":
        out[0], out[1] = y0, fwd - y0
        return out
    back = rk_step(st.forward, prob, y0, -h, stats=stats, **kw)
    if st.variant == "pair":
        out[0] = 0.5 * (fwd + back)
    else:
        out[0] = y0
    out[1] = 0.5 * C * (fwd - back)
    return out


def finish(entry: MethodEntry, y_state: np.ndarray, h: float, prob: Optional[OdeProblem] = None,
           cfg: Optional[RunConfig] = None, stats: Optional[_Stats] = None) -> np.ndarray:
    """Output approximation from the ``r`` values."""
    if entry.finishing == "first-component":
        return np.array(y_state[0], copy=True)
    if prob is None:
        raise ValueError("the triple-inverse rule needs the problem to evaluate f")
    st = entry.starting
    kw = _config_kw(cfg)
    C = float(st.C)
    plus = rk_step(st.inverse, prob, y_state[0] + y_state[1] / C, h, stats=stats, **kw)
    minus = rk_step(st.inverse, prob, y_state[0] - y_state[1] / C, -h, stats=stats, **kw)
    return 0.5 * (plus + minus)


# --------------------------------------------------------------------------
# main GLM step
# --------------------------------------------------------------------------

class GlmStepper:
    """Precomputed coefficients and compensated accumulators for one method."""

    def __init__(self, entry: MethodEntry, prob: OdeProblem, cfg: Optional[RunConfig] = None):
        f = entry.tableau.numeric
        self.entry, self.prob = entry, prob
        self.A, self.U, self.B, self.V = f.A, f.U, f.B, f.V
        self.scheme = _StageScheme.of(f.A)
        self.kw = _config_kw(cfg)
        self.compensated = True if cfg is None else cfg.compensated
        self.stats = _Stats()
        r = self.V.shape[0]
        self.vdiag = np.diag(self.V).copy()
        self.v_offdiag = self.V - np.diag(self.vdiag)
        self.has_offdiag = bool(np.any(self.v_offdiag != 0))
        self.comp = None
        self._r = r

    def reset(self, y: np.ndarray):
        self.comp = np.zeros_like(y)

    def stages(self, y: np.ndarray, h: float) -> np.ndarray:
        base = self.U @ y
        return solve_stages(self.scheme, base, self.prob, h, self.kw["tol"],
                            self.kw["max_iter"], self.stats)

    def step(self, y: np.ndarray, h: float) -> np.ndarray:
        F = self.stages(y, h)
        inc = h * (self.B @ F)
        if self.has_offdiag:
            inc = inc + self.v_offdiag @ y
        if not self.compensated:
            return self.vdiag[:, None] * y + inc
        if self.comp is None or self.comp.shape != y.shape:
            self.reset(y)
        out = np.empty_like(y)
        for k in range(self._r):
            v = self.vdiag[k]
            if v == 1.0:
                s, c = y[k], self.comp[k]
            elif v == -1.0:
                s, c = -y[k], -self.comp[k]
            else:
                # compensation only makes sense for unimodular real scalings
                out[k] = v * y[k] + inc[k]
                self.comp[k] = 0.0
                continue
            yk = inc[k] - c
            t = s + yk
            self.comp[k] = (t - s) - yk
            out[k] = t
        return out


def glm_step(entry: MethodEntry, prob: OdeProblem, y_in: np.ndarray, h: float,
             cfg: Optional[RunConfig] = None) -> np.ndarray:
    """One uncompensated-history step (a fresh accumulator each call)."""
    return GlmStepper(entry, prob, cfg).step(np.asarray(y_in, float), h)


# --------------------------------------------------------------------------
# runs, output and convergence
# --------------------------------------------------------------------------

def run(entry: MethodEntry, prob: OdeProblem, cfg: RunConfig) -> Trajectory:
    """Start, take ``floor(T/h)`` steps, and finish at every ``sample_stride``-th step."""
    traj = Trajectory(entry.name, prob.name, cfg.h, tuple(prob.invariants))
    t0 = time.perf_counter()
    stepper = GlmStepper(entry, prob, cfg)
    inv0 = prob.invariant_values(prob.y0)
    h = cfg.h
    try:
        y = start(entry, prob, h, cfg=cfg, stats=stepper.stats)
    except NewtonError as exc:
        raise IntegrationError(str(exc), 0, traj) from exc
    stepper.reset(y)
    for n in range(1, cfg.n_steps + 1):
        try:
            y = stepper.step(y, h)
            if not np.all(np.isfinite(y)):
                raise FloatingPointError("non-finite value in the numerical solution")
            if n % cfg.sample_stride == 0:
                out = finish(entry, y, h, prob, cfg, stepper.stats)
                traj.t.append(n * h)
                traj.y.append(out)
                traj.invariant_errors.append(prob.invariant_values(out) - inv0)
        except (NewtonError, FloatingPointError, ValueError) as exc:
            _close(traj, stepper, t0)
            raise IntegrationError(str(exc), n, traj) from exc
    _close(traj, stepper, t0)
    return traj


def _close(traj, stepper, t0):
    traj.wall_time = time.perf_counter() - t0
    traj.newton_total, traj.newton_max = stepper.stats.total, stepper.stats.max


def final_state(entry: MethodEntry, prob: OdeProblem, h: float, T: float, **kw) -> np.ndarray:
    """Finished output at ``T``; ``T/h`` must be a whole number of steps."""
    cfg = RunConfig(entry.name, h, T, sample_stride=max(1, int(round(T / h))), **kw)
    traj = run(entry, prob, cfg)
    return traj.y[-1]


def commensurate_step(h: float, T: float) -> tuple:
    """Nearest step that divides ``T`` exactly, and the number of steps."""
    n = max(1, int(round(T / h)))
    return T / n, n


@dataclass
class ConvergenceRow:
    h: float
    error: float
    observed_order: Optional[float]


_REFERENCE_CACHE: dict = {}


def reference_solution(prob: OdeProblem, h: float, T: float, method: str = "suzuki4115") -> np.ndarray:
    key = (prob.name, tuple(prob.y0), h, T, method)
    if key not in _REFERENCE_CACHE:
        _REFERENCE_CACHE[key] = final_state(lookup(method), prob, h, T)
    return _REFERENCE_CACHE[key]


def convergence_study(entry: MethodEntry, prob: OdeProblem, h_list: Sequence[float], T: float,
                      reference: Optional[np.ndarray] = None, ref_factor: int = 20) -> list:
    """Global error at ``T`` for each step size against a fine Suzuki DIRK run.

    Steps are snapped to the nearest value dividing ``T``; the reported ``h``
    is the step actually used.  ``observed_order`` compares consecutive rows.
    """
    steps = [commensurate_step(h, T) for h in h_list]
    if reference is None:
        n_max = max(n for _, n in steps)
        reference = reference_solution(prob, T / (n_max * ref_factor), T)
    rows = []
    for (h, _), raw in zip(steps, h_list):
        err = float(np.max(np.abs(final_state(entry, prob, h, T) - reference)))
        order = None
        if rows and err > 0 and rows[-1].error > 0:
            order = math.log(rows[-1].error / err) / math.log(rows[-1].h / h)
        rows.append(ConvergenceRow(h, err, order))
    return rows


def format_float(x: float) -> str:
    return repr(float(x)) if not math.isfinite(x) else f"{x:.17g}"


def write_csv(traj: Trajectory, path) -> None:
    """``t,<name>_err,...`` with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"{name}_err" for name in traj.invariant_names])
        for t, errs in zip(traj.t, traj.invariant_errors):
            w.writerow([format_float(t)] + [format_float(e) for e in errs])
