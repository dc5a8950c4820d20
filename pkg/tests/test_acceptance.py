"""End-to-end acceptance checks, one test per criterion.

Each test is tagged with ``@pytest.mark.criterion(<id>)``; the conftest hook
prints a pass/fail line per criterion at the end of the session.
"""

import math
import time
from fractions import Fraction as Q

import numpy as np
import pytest

from symglm import analysis as an
from symglm import bseries as bs
from symglm import integrator as it
from symglm.cli import main
from symglm.exact import qmat, to_float
from symglm.problems import get_problem, zero_field
from symglm.tableau import SECTION6_METHODS, equivalence_transform, lookup, registry

from oracles import LABELS, PRINTED_X, TABLE_4123A

# max |H_err| of the first Kepler runs at h = 0.01, T = 1e3; bounds carry a 2x margin
FROZEN_KEPLER_H = {"4124B": 3.1833e-7, "4124D": 8.6838e-8, "4223A": 6.0956e-8}

_RUNS: dict = {}


def trajectory(method: str, problem: str, h: float, T: float = 1e3, stride: int = 10):
    key = (method, problem, h, T, stride)
    if key not in _RUNS:
        prob = get_problem(problem).ode()
        _RUNS[key] = it.run(lookup(method), prob, it.RunConfig(method, h, T, sample_stride=stride))
    return _RUNS[key]


def invariant_error(traj, name: str) -> np.ndarray:
    return np.abs(traj.errors()[:, traj.invariant_names.index(name)])


def window_max(traj, name: str, lo: float, hi: float) -> float:
    t = np.asarray(traj.t)
    err = invariant_error(traj, name)
    return float(np.max(err[(t > lo) & (t <= hi)]))


@pytest.mark.criterion(1)
def test_algebraic_identities():
    t0 = time.perf_counter()
    for name in SECTION6_METHODS:
        m = lookup(name).tableau
        assert m.is_exact, name
        assert an.check_consistency(m).passed, name
        sym = an.check_symmetry(m)
        assert sym.residual == 0, name
        assert an.parasitism_factors(m) == [0], name
        assert an.trace_identity(m).details["trace"] == "1", name
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(2)
def test_gsymplecticity():
    e = lookup("4124B")
    G = qmat([[1, 0], [0, "-1/3"]])
    D = qmat(np.diag([Q(-1, 6), Q(2, 3), Q(2, 3), Q(-1, 6)]))
    rep = an.check_gsymplectic(e.tableau, G, D)
    assert rep.residual == 0 and rep.passed
    for name in ("4123A", "4123B", "4123C"):
        m = lookup(name).tableau
        assert not an.check_gsym_structural(m).passed, name
        _, res = an.best_gsymplectic_G(m, np.diag(to_float(m.B[0])))
        assert res > 1e-3, name


@pytest.mark.criterion(3)
def test_order_table_oracle():
    rows = bs.order_table(lookup("4123A"))
    mismatches = []
    for name, expected in TABLE_4123A.items():
        for lbl, want in zip(LABELS, expected):
            if rows[name][lbl] != want:
                mismatches.append((name, lbl, rows[name][lbl], want))
    assert not mismatches


@pytest.mark.criterion(4)
def test_order_four_and_starting_vectors():
    for name in SECTION6_METHODS:
        e = lookup(name)
        assert bs.verify_order(e, bs.registered_start(e), 4).order == 4, name
    for name, printed in PRINTED_X.items():
        x = bs.starting_conditions(lookup(name).starting)
        assert list(x) == [Q(v) for v in printed], name
    x = bs.starting_conditions(lookup("4124B").starting)
    assert np.max(np.abs(x - np.array([0.5, -1 / 24, -19 / 144, -1 / 36]))) < 1e-13


@pytest.mark.criterion(5)
def test_transfer_and_stability_properties():
    rng = np.random.default_rng(an.SEED)
    for name in SECTION6_METHODS:
        m = lookup(name).tableau
        rep = an.check_stability_inverse(m, n=100, seed=an.SEED)
        assert rep.residual <= 1e-11, name
        zetas = an.random_off_circle(20, seed=an.SEED)
        assert an.check_transfer_symmetry(m, zetas).residual <= 1e-12, name
        T = np.eye(m.r) + 0.3 * rng.standard_normal((m.r, m.r))
        mt = equivalence_transform(m, T)
        for z in zetas:
            N0 = an.transfer_function(m, z)
            N1 = an.transfer_function(mt, z)
            assert np.max(np.abs(N1 - N0)) <= 1e-12 * max(1.0, np.max(np.abs(N0))), name


@pytest.mark.criterion(6)
def test_step_inversion_kepler():
    prob = get_problem("kepler").ode()
    h = 0.01
    t0 = time.perf_counter()
    worst = 0.0
    for e in registry():
        L = e.tableau.numeric.L
        y = it.start(e, prob, h)
        back = L @ it.glm_step(e, prob, L @ it.glm_step(e, prob, y, h), -h)
        worst = max(worst, float(np.max(np.abs(back - y))))
    assert worst <= 1e-10
    assert time.perf_counter() - t0 < 1.0


@pytest.mark.criterion(7)
@pytest.mark.slow
def test_convergence_kepler():
    prob = get_problem("kepler").ode()
    T = 2 * math.pi
    hs = [0.02, 0.01, 0.005]
    t0 = time.perf_counter()
    n_max = it.commensurate_step(hs[-1], T)[1]
    h_ref = T / (20 * n_max)
    assert abs(h_ref - 2.5e-4) < 1e-5
    ref = it.reference_solution(prob, h_ref, T)
    for name in ("4123A", "4223A", "4124B", "4124D"):
        rows = it.convergence_study(lookup(name), prob, hs, T, reference=ref)
        for r in rows[1:]:
            assert 3.7 <= r.observed_order <= 4.3, (name, r)
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.criterion("8a")
@pytest.mark.slow
def test_conservation_kepler_gsymplectic():
    traj = trajectory("4124B", "kepler", 0.01)
    H = invariant_error(traj, "H")
    assert H.max() <= 2 * FROZEN_KEPLER_H["4124B"]
    assert window_max(traj, "H", 500, 1000) <= 2 * window_max(traj, "H", 0, 500)


@pytest.mark.criterion("8b")
@pytest.mark.slow
@pytest.mark.parametrize("name", ["4124D", "4223A"])
def test_conservation_kepler_symmetric(name):
    traj = trajectory(name, "kepler", 0.01)
    H = invariant_error(traj, "H")
    assert H.max() <= 2 * FROZEN_KEPLER_H[name]
    assert window_max(traj, "H", 500, 1000) <= 2 * window_max(traj, "H", 0, 500)


@pytest.mark.criterion("8c")
@pytest.mark.slow
def test_angular_momentum_suzuki():
    traj = trajectory("suzuki4115", "kepler", 0.01)
    assert np.max(invariant_error(traj, "L")) < 1e-10


@pytest.mark.criterion("8d")
@pytest.mark.slow
def test_lotka_volterra_drift():
    ref = trajectory("suzuki4115", "tlv", 0.1)
    assert window_max(ref, "H", 500, 1000) <= 2 * window_max(ref, "H", 0, 500)
    traj = trajectory("4124D", "tlv", 0.1)
    first, last = window_max(traj, "H", 0, 100), window_max(traj, "H", 900, 1000)
    assert last >= 5 * first, f"final/first tenth ratio {last / first:.3f}"


@pytest.mark.criterion(9)
@pytest.mark.slow
def test_compensated_bits_and_determinism(tmp_path):
    z = zero_field()
    e = lookup("4123A")
    assert np.array_equal(e.tableau.numeric.V, np.diag([1.0, -1.0]))
    y0 = np.array([z.y0, 0.3 * z.y0 + 1e-3])
    stepper = it.GlmStepper(e, z)
    stepper.reset(y0)
    y = y0
    for _ in range(10 ** 6):
        y = stepper.step(y, 0.1)
    assert np.array_equal(y[0], y0[0]) and np.array_equal(y[1], y0[1])

    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["run", "--method", "4124D", "--problem", "kepler", "--h", "0.01",
                     "--T", "20", "--seed", "42", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
