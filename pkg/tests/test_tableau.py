from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symglm.analysis import transfer_function
from symglm.bseries import starting_conditions
from symglm.exact import max_abs, qeye, qmat, reversal
from symglm.tableau import (
    SECTION6_METHODS,
    GlmTableau,
    MethodEntry,
    StartingTriple,
    TableauError,
    _register,
    equivalence_transform,
    lookup,
    method_names,
    registry,
)

Q = Fraction


def test_registry_contents():
    names = method_names()
    for n in SECTION6_METHODS + ("midpoint", "suzuki4115", "lobatto3b"):
        assert n in names
    assert len(names) == len(set(names))


def test_4123A_coefficients():
    m = lookup("4123A").tableau
    assert m.A[1, 1] == Q(1, 6)
    assert (m.V == qmat([[1, 0], [0, -1]])).all()
    assert (m.L == qmat([[1, 0], [0, -1]])).all()
    assert m.is_exact


def test_4124B_gsymplectic_data():
    G, D = lookup("4124B").gsymplectic_data
    assert (G == qmat([[1, 0], [0, "-1/3"]])).all()
    assert [D[i, i] for i in range(4)] == [Q(-1, 6), Q(2, 3), Q(2, 3), Q(-1, 6)]


def test_4124D_L_is_identity():
    assert (lookup("4124D").tableau.L == qeye(2)).all()


def test_aliases_and_unknown():
    assert lookup("4223").name == "4223A"
    assert lookup("suzuki").name == "suzuki4115"
    assert lookup("LOBATTO").name == "lobatto3b"
    with pytest.raises(KeyError):
        lookup("nosuch")


@pytest.mark.parametrize("name", SECTION6_METHODS)
def test_section6_invariants(name):
    m = lookup(name).tableau
    r, s = m.r, m.s
    assert (m.L @ m.L == qeye(r)).all() and (m.P @ m.P == qeye(s)).all()
    assert all(m.U[i, 0] == 1 for i in range(s))
    assert all(m.V[i, 0] == (1 if i == 0 else 0) for i in range(r))
    assert np.allclose(np.abs(np.linalg.eigvals(m.numeric.V)), 1.0)
    assert sum(m.B[0]) == 1
    assert (m.P == reversal(s)).all()


def test_registered_starting_tableaux_use_row_sums():
    for e in registry():
        st_ = e.starting
        if st_.forward is not None and st_.verified:
            assert st_.forward.row_sum_defect < 1e-14
            if st_.inverse is not None:
                assert st_.inverse.row_sum_defect < 1e-14


def test_inverse_tableau_formula_matches_printed_inverse():
    for name in ("4123A", "4123B", "4123C", "4124A"):
        st_ = lookup(name).starting
        inv = st_.forward.inverse()
        assert (inv.A == st_.inverse.A).all() and (inv.b == st_.inverse.b).all()
    # irrational 4124B triple: float comparison
    st_ = lookup("4124B").starting
    inv = st_.forward.inverse()
    assert np.max(np.abs(inv.A - st_.inverse.Af)) < 1e-14


def test_alternate_triples_flagged():
    alts = lookup("4123A").alternates
    assert len(alts) == 2
    assert all(not a.verified for a in alts)
    # the printed sqrt(15) abscissa disagrees with the row sum of A
    assert alts[1].forward.row_sum_defect > 1.0
    # the explicit alternate misses x2 = 1/48
    assert starting_conditions(alts[0])[1] != Q(1, 48)


def test_identity_transform():
    m = lookup("4123A").tableau
    t = equivalence_transform(m, qeye(2))
    for k in "AUBVL":
        assert (getattr(t, k) == getattr(m, k)).all()


def test_diagonal_scaling_transform():
    m = lookup("4123A").tableau
    t = equivalence_transform(m, qmat([[1, 0], [0, 2]]))
    assert (t.U[:, 1] == 2 * m.U[:, 1]).all()
    assert (t.B[1] == m.B[1] / 2).all()
    assert (t.V == m.V).all()


def test_transform_preserves_transfer_function():
    m = lookup("4123A").tableau
    t = equivalence_transform(m, np.array([[1.0, 0.3], [-0.2, 1.5]]))
    z = 2 + 1j
    assert np.max(np.abs(transfer_function(t, z) - transfer_function(m, z))) < 1e-13


def test_singular_transform_rejected():
    with pytest.raises(TableauError):
        equivalence_transform(lookup("4123A").tableau, np.array([[1.0, 1.0], [1.0, 1.0]]))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4),
       st.sampled_from(SECTION6_METHODS))
def test_transform_invariance_random(entries, name):
    T = np.eye(2) * 2.5 + np.array(entries).reshape(2, 2)
    m = lookup(name).tableau
    t = equivalence_transform(m, T)
    for z in (0.5 + 0.2j, 2.0 - 1.0j, -1.7j):
        N = transfer_function(m, z)
        assert np.max(np.abs(transfer_function(t, z) - N)) <= 1e-12 * max(1, np.max(np.abs(N)))


def test_non_involution_rejected():
    m = lookup("4123A").tableau
    with pytest.raises(TableauError):
        GlmTableau("bad", m.A, m.U, m.B, m.V, qmat([[1, 1], [0, 1]]), m.P)


def test_shape_mismatch_rejected():
    m = lookup("4123A").tableau
    with pytest.raises(TableauError):
        GlmTableau("bad", m.A, m.U[:2], m.B, m.V, m.L, m.P)


def test_registration_searches_permutation():
    e = lookup("4123A")
    wrong = MethodEntry(e.tableau.with_symmetry(P=qeye(3)), e.starting, e.finishing,
                        start_xi=e.start_xi)
    fixed = _register(wrong)
    assert (fixed.tableau.P == reversal(3)).all()


def test_registration_rejects_unsymmetric():
    A = qmat([[0]])
    one = qmat([[1]])
    euler = GlmTableau("euler", A, one, one, one, one, one)
    with pytest.raises(TableauError):
        _register(MethodEntry(euler, StartingTriple(Q(1), None, None, "identity"),
                              "first-component"))


def test_starting_triple_validation():
    with pytest.raises(TableauError):
        StartingTriple(Q(0), None, None, "identity")
    with pytest.raises(TableauError):
        StartingTriple(Q(1), None, None, "pair")
    with pytest.raises(TableauError):
        StartingTriple(Q(1), None, None, "bogus")
