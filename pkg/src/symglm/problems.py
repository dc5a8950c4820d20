"""Hamiltonian benchmark problems with analytic gradients and Hessians.

States are flat vectors ``y = [p; q]``.  With ``J = [[0, I], [-I, 0]]`` the
vector field is ``f = J^{-1} grad H = (-H_q, H_p)``, and its Jacobian is
``J^{-1}`` times the Hessian of ``H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .integrator import OdeProblem


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    name: str
    H: Callable
    gradH: Callable
    hessH: Callable
    y0: np.ndarray
    h_original: float
    T_original: float
    extra_invariants: dict = field(default_factory=dict)
    R: tuple = ()
    description: str = ""

    @property
    def N(self) -> int:
        return self.y0.size

    @property
    def J(self) -> np.ndarray:
        d = self.N // 2
        I = np.eye(d)
        Z = np.zeros((d, d))
        return np.block([[Z, I], [-I, Z]])

    def f(self, y: np.ndarray) -> np.ndarray:
        g = self.gradH(y)
        d = self.N // 2
        return np.concatenate((-g[d:], g[:d]))

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        Hs = self.hessH(y)
        d = self.N // 2
        return np.vstack((-Hs[d:], Hs[:d]))

    @property
    def invariants(self) -> dict:
        return {"H": self.H, **self.extra_invariants}

    def ode(self, y0=None) -> OdeProblem:
        return OdeProblem(self.name, self.f, self.y0 if y0 is None else y0, self.jacobian,
                          self.invariants, self.R)


def _split(y):
    d = y.size // 2
    return y[:d], y[d:]


# --------------------------------------------------------------------------
# Henon--Heiles
# --------------------------------------------------------------------------

def _hh_H(y):
    p1, p2, q1, q2 = y
    return 0.5 * (p1 * p1 + p2 * p2) + 0.5 * (q1 * q1 + q2 * q2) + q1 * q2 * q2 - q2 ** 3 / 3.0


def _hh_grad(y):
    p1, p2, q1, q2 = y
    return np.array([p1, p2, q1 + q2 * q2, q2 + 2.0 * q1 * q2 - q2 * q2])


def _hh_hess(y):
    p1, p2, q1, q2 = y
    Hs = np.zeros((4, 4))
    Hs[0, 0] = Hs[1, 1] = 1.0
    Hs[2, 2] = 1.0
    Hs[2, 3] = Hs[3, 2] = 2.0 * q2
    Hs[3, 3] = 1.0 + 2.0 * q1 - 2.0 * q2
    return Hs


def henon_heiles() -> HamiltonianSpec:
    y0 = np.array([math.sqrt(152.0 / 875.0), 0.2, 0.0, 0.3])
    return HamiltonianSpec("hh", _hh_H, _hh_grad, _hh_hess, y0, 0.25, 1e6,
                           description="Henon-Heiles, chaotic, H = 1/7")


# --------------------------------------------------------------------------
# double pendulum
# --------------------------------------------------------------------------

def _dp_parts(y):
    p1, p2, q1, q2 = y
    d = q1 - q2
    s, c = math.sin(d), math.cos(d)
    den = 1.0 + s * s
    W = 0.5 / den
    Wd = -s * c / den ** 2
    Wdd = -math.cos(2 * d) / den ** 2 + 4 * s * s * c * c / den ** 3
    num = p1 * p1 + 2 * p2 * p2 - 2 * p1 * p2 * c
    return p1, p2, q1, q2, s, c, W, Wd, Wdd, num


def _dp_H(y):
    p1, p2, q1, q2, s, c, W, Wd, Wdd, num = _dp_parts(y)
    return num * W - math.cos(q2) - 2.0 * math.cos(q1)


def _dp_grad(y):
    p1, p2, q1, q2, s, c, W, Wd, Wdd, num = _dp_parts(y)
    Td = 2 * p1 * p2 * s * W + num * Wd
    return np.array([
        (2 * p1 - 2 * p2 * c) * W,
        (4 * p2 - 2 * p1 * c) * W,
        Td + 2.0 * math.sin(q1),
        -Td + math.sin(q2),
    ])


def _dp_hess(y):
    p1, p2, q1, q2, s, c, W, Wd, Wdd, num = _dp_parts(y)
    Tdd = 2 * p1 * p2 * c * W + 2 * (2 * p1 * p2 * s) * Wd + num * Wdd
    h1d = 2 * p2 * s * W + (2 * p1 - 2 * p2 * c) * Wd
    h2d = 2 * p1 * s * W + (4 * p2 - 2 * p1 * c) * Wd
    return np.array([
        [2 * W, -2 * c * W, h1d, -h1d],
        [-2 * c * W, 4 * W, h2d, -h2d],
        [h1d, h2d, Tdd + 2.0 * math.cos(q1), -Tdd],
        [-h1d, -h2d, -Tdd, Tdd + math.cos(q2)],
    ])


def double_pendulum() -> HamiltonianSpec:
    # initial angles are the literal decimals 3.14 and -3.1, not multiples of pi
    y0 = np.array([0.0, 0.0, 3.14, -3.1])
    R = (np.diag([-1.0, -1.0, 1.0, 1.0]), np.diag([1.0, 1.0, -1.0, -1.0]))
    return HamiltonianSpec("dp", _dp_H, _dp_grad, _dp_hess, y0, 0.01, 1e4, R=R,
                           description="double pendulum, non-separable, chaotic")


# --------------------------------------------------------------------------
# Kepler
# --------------------------------------------------------------------------

KEPLER_MIN_RADIUS = 1e-8


def _radius(q):
    r = math.hypot(q[0], q[1])
    if r < KEPLER_MIN_RADIUS:
        raise ValueError(f"Kepler potential is singular at |q| = {r:.3e}")
    return r


def _kep_H(y):
    p, q = _split(y)
    return 0.5 * (p[0] ** 2 + p[1] ** 2) - 1.0 / _radius(q)


def _kep_grad(y):
    p, q = _split(y)
    r = _radius(q)
    return np.concatenate((p, q / r ** 3))


def _kep_hess(y):
    p, q = _split(y)
    r = _radius(q)
    Hs = np.zeros((4, 4))
    Hs[0, 0] = Hs[1, 1] = 1.0
    Hs[2:, 2:] = np.eye(2) / r ** 3 - 3.0 * np.outer(q, q) / r ** 5
    return Hs


def angular_momentum(y):
    p1, p2, q1, q2 = y
    return q1 * p2 - q2 * p1


def kepler(e: float = 0.6) -> HamiltonianSpec:
    y0 = np.array([0.0, math.sqrt((1 + e) / (1 - e)), 1 - e, 0.0])
    R = tuple(np.diag(d) for d in ([-1.0, -1, 1, 1], [1.0, 1, -1, -1],
                                    [1.0, -1, -1, 1], [-1.0, 1, 1, -1]))
    return HamiltonianSpec("kepler", _kep_H, _kep_grad, _kep_hess, y0, 0.01, 1e4,
                           extra_invariants={"L": angular_momentum}, R=R,
                           description=f"Kepler two-body, eccentricity {e}")


# --------------------------------------------------------------------------
# transformed Lotka--Volterra
# --------------------------------------------------------------------------

def _tlv_H(y):
    p, q = y
    return p - math.exp(p) + 2.0 * q - math.exp(q)


def _tlv_grad(y):
    p, q = y
    return np.array([1.0 - math.exp(p), 2.0 - math.exp(q)])


def _tlv_hess(y):
    p, q = y
    return np.diag([-math.exp(p), -math.exp(q)])


def lotka_volterra() -> HamiltonianSpec:
    y0 = np.array([math.log(2.0), math.log(3.0)])
    return HamiltonianSpec("tlv", _tlv_H, _tlv_grad, _tlv_hess, y0, 0.1, 1e3,
                           description="transformed Lotka-Volterra, no reversing symmetry")


# --------------------------------------------------------------------------
# auxiliary linear problem
# --------------------------------------------------------------------------

def harmonic_oscillator() -> HamiltonianSpec:
    """``H = (p^2 + q^2) / 2``; the exact flow is a rotation."""
    return HamiltonianSpec(
        "harmonic",
        lambda y: 0.5 * (y[0] ** 2 + y[1] ** 2),
        lambda y: np.array([y[0], y[1]]),
        lambda y: np.eye(2),
        np.array([0.0, 1.0]), 0.1, 100.0,
        R=(np.diag([-1.0, 1.0]),),
        description="linear oscillator",
    )


PROBLEMS = {
    "hh": henon_heiles,
    "dp": double_pendulum,
    "kepler": kepler,
    "tlv": lotka_volterra,
    "harmonic": harmonic_oscillator,
}


def get_problem(name: str) -> HamiltonianSpec:
    try:
        return PROBLEMS[name.lower()]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(PROBLEMS)}") from None


def zero_field(N: int = 4, y0=None) -> OdeProblem:
    """``f = 0`` with a zero Jacobian; every invariant is trivially conserved."""
    y0 = np.linspace(0.1, 0.9, N) if y0 is None else np.asarray(y0, float)
    return OdeProblem("zero", lambda y: np.zeros_like(y), y0,
                      lambda y: np.zeros((y.size, y.size)), {"norm2": lambda y: float(y @ y)})
