import math

import numpy as np
import pytest

from symglm.integrator import fd_jacobian, jacobian_error
from symglm.problems import (
    PROBLEMS,
    double_pendulum,
    get_problem,
    henon_heiles,
    kepler,
    lotka_volterra,
)

NAMES = ("hh", "dp", "kepler", "tlv", "harmonic")


def random_states(spec, rng, n):
    out = []
    while len(out) < n:
        y = spec.y0 + 0.5 * rng.standard_normal(spec.N)
        if spec.name == "kepler" and np.hypot(y[2], y[3]) < 0.1:
            continue
        out.append(y)
    return out


@pytest.mark.parametrize("name", NAMES)
def test_energy_is_conserved_by_field(name, rng):
    spec = get_problem(name)
    for y in random_states(spec, rng, 100):
        g = spec.gradH(y)
        assert abs(g @ spec.f(y)) <= 1e-12 * max(1.0, np.linalg.norm(g) ** 2)


@pytest.mark.parametrize("name", NAMES)
def test_gradient_matches_finite_differences(name, rng):
    spec = get_problem(name)
    for y in random_states(spec, rng, 10):
        fd = np.array([(spec.H(y + e) - spec.H(y - e)) / 2e-6 for e in 1e-6 * np.eye(spec.N)])
        assert np.max(np.abs(fd - spec.gradH(y))) < 1e-6 * max(1.0, np.max(np.abs(fd)))


@pytest.mark.parametrize("name", NAMES)
def test_jacobian_matches_finite_differences(name, rng):
    spec = get_problem(name)
    prob = spec.ode()
    for y in random_states(spec, rng, 20):
        assert jacobian_error(prob, y) < 1e-6


def test_field_is_J_inverse_gradient(rng):
    spec = double_pendulum()
    y = spec.y0 + rng.standard_normal(4)
    assert np.allclose(spec.f(y), np.linalg.solve(spec.J, spec.gradH(y)))


def test_henon_heiles_data():
    spec = henon_heiles()
    assert abs(spec.H(spec.y0) - 1 / 7) < 1e-15
    assert np.all(spec.gradH(np.zeros(4)) == 0)
    assert (spec.h_original, spec.T_original) == (0.25, 1e6)
    p1, p2, q1, q2 = spec.y0
    assert np.allclose(spec.f(spec.y0)[:2], [-(q1 + q2 ** 2), -(q2 + 2 * q1 * q2 - q2 ** 2)])


def test_double_pendulum_data(rng):
    spec = double_pendulum()
    assert list(spec.y0) == [0.0, 0.0, 3.14, -3.1]
    assert spec.H(np.zeros(4)) == -3.0
    # regression constant evaluated once at the literal initial angles
    assert abs(spec.H(spec.y0) - (-math.cos(-3.1) - 2 * math.cos(3.14))) < 1e-15
    assert len(spec.R) == 2
    for R in spec.R:
        for _ in range(100):
            y = 3 * rng.standard_normal(4)
            assert np.max(np.abs(spec.f(R @ y) + R @ spec.f(y))) < 1e-12


def test_kepler_data(rng):
    spec = kepler()
    assert abs(spec.H(spec.y0) + 0.5) < 1e-15
    assert abs(spec.invariants["L"](spec.y0) - 0.8) < 1e-15
    assert len(spec.R) == 4
    for R in spec.R:
        for _ in range(100):
            y = rng.standard_normal(4)
            assert np.max(np.abs(spec.f(R @ y) + R @ spec.f(y))) < 1e-12


def test_kepler_domain_guard():
    with pytest.raises(ValueError, match="singular"):
        kepler().f(np.array([1.0, 0.0, 0.0, 1e-9]))


def test_lotka_volterra_data():
    spec = lotka_volterra()
    assert spec.N == 2
    assert np.array_equal(spec.J, [[0, 1], [-1, 0]])
    assert abs(spec.H(spec.y0) - (math.log(2) - 2 + 2 * math.log(3) - 3)) < 1e-15
    assert np.allclose(spec.gradH(np.array([0.0, math.log(2)])), 0)
    assert spec.R == ()


def test_unknown_problem():
    with pytest.raises(KeyError):
        get_problem("nbody")
    assert set(("hh", "dp", "kepler", "tlv")) <= set(PROBLEMS)


def test_bad_jacobian_rejected():
    from symglm.integrator import OdeProblem

    with pytest.raises(ValueError, match="Jacobian"):
        OdeProblem("bad", lambda y: y ** 2, np.ones(2), lambda y: np.eye(2))
