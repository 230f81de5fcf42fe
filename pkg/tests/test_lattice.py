import warnings
from fractions import Fraction

import numpy as np
import pytest

from kmtheta.lattice import (IncompleteSearchWarning, MajorantError, OLattice, box_scan, dual_lattice,
                             e8_lattice, enumerate_majorant, exact_pairings, exact_q_values, fibers_with_T,
                             lattice_from_json, same_lattice, total_majorant, write_enumeration_csv)
from kmtheta.perioddomain import random_period_point
from kmtheta.quadspace import QuadraticSpace


def _as_set(a):
    return {tuple(int(t) for t in v) for v in a}


def test_enumeration_matches_box_scan(rng):
    for _ in range(10):
        k = int(rng.integers(2, 5))
        A = rng.normal(size=(k, k))
        M = A @ A.T + 0.3 * np.eye(k)
        c = rng.uniform(-0.5, 0.5, k)
        B = float(rng.uniform(1, 6))
        assert _as_set(enumerate_majorant(M, B, c).coords) == _as_set(box_scan(M, B, c))


def test_enumeration_order_and_shells():
    M = np.eye(2)
    enum = enumerate_majorant(M, 2.0)
    assert len(enum) == 9
    assert np.all(np.diff(enum.qmaj) >= -1e-12)
    assert [(q, len(c)) for q, c in enum.shells()] == [(0.0, 1), (1.0, 4), (2.0, 4)]
    assert len(enumerate_majorant(M, -1.0)) == 0


def test_enumeration_limit():
    with pytest.raises(OverflowError):
        enumerate_majorant(np.eye(3), 50.0, limit=10)


def test_e8_counts():
    L = e8_lattice()
    M = total_majorant(L)
    enum = enumerate_majorant(M, 3.0)
    assert len(enum) == 9121
    qs = exact_q_values(L, enum.coords)
    assert sum(q == L.field(1) for q in qs) == 240


def test_e8_fiber_and_self_duality():
    L = e8_lattice()
    roots, complete = fibers_with_T(L, [[1]])
    assert complete and len(roots) == 240
    assert same_lattice(dual_lattice(L), L)


def test_fiber_rank_two():
    L = e8_lattice()
    pairs, complete = fibers_with_T(L, [[1, 0], [0, 1]])
    # each root is orthogonal to 126 other roots
    assert complete and len(pairs) == 240 * 126
    assert fibers_with_T(L, [[1, 2], [2, 1]]) == ([], True)
    with pytest.raises(ValueError):
        fibers_with_T(L, [[1, 0], [1, 1]])


def test_indefinite_fiber_is_flagged(Z3, tau0):
    with pytest.raises(ValueError):
        fibers_with_T(Z3, [[1]], (tau0,))
    with pytest.warns(IncompleteSearchWarning):
        tuples, complete = fibers_with_T(Z3, [[1]], (tau0,), bound=10)
    assert not complete
    assert all(exact_q_values(Z3, t)[0] == Z3.field(1) for t in tuples)


def test_dual_of_scaled_lattice(Q):
    space = QuadraticSpace.from_entries(Q, [[4, 0], [0, 6]], 0)
    L = OLattice.standard(space)
    D = dual_lattice(L)
    assert D.zbasis[0][0] == Q(Fraction(1, 4)) and D.zbasis[1][1] == Q(Fraction(1, 6))
    assert same_lattice(dual_lattice(D), L)


def test_dual_over_quadratic_field(mixed5):
    L = OLattice.standard(mixed5)
    D = dual_lattice(L)
    assert same_lattice(dual_lattice(D), L)
    G = D.trace_gram  # noqa: F841  (dual pairs to Z with L)
    for a in L.zbasis:
        for b in D.zbasis:
            v = mixed5.inner_product(a, b)
            assert (v.a * 2).denominator == 1


def test_total_majorant_errors(Z3, tau0):
    with pytest.raises(MajorantError):
        total_majorant(Z3, ())
    M = total_majorant(Z3, (tau0,))
    assert np.allclose(M, np.eye(3))


def test_total_majorant_quadratic_field(mixed5, rng):
    L = OLattice.standard(mixed5)
    t = random_period_point(mixed5, 1, rng)
    M = total_majorant(L, (t,))
    np.linalg.cholesky(M)
    assert M.shape == (6, 6)


def test_exact_pairings(Z3):
    T = exact_pairings(Z3, np.array([[1, 0, 0], [1, 1, 0]]))
    F = Z3.field
    assert T == [[F(1), F(1)], [F(1), F(0)]]


def test_json_roundtrip(mixed5):
    L = OLattice.standard(mixed5)
    assert same_lattice(lattice_from_json(L.to_json()), L)


def test_bad_basis(Q, sig12):
    with pytest.raises(ValueError):
        OLattice(sig12, ((Q(1), Q(0), Q(0)), (Q(2), Q(0), Q(0)), (Q(0), Q(0), Q(1))))


def test_enumeration_csv(tmp_path, Z3, tau0):
    enum = enumerate_majorant(total_majorant(Z3, (tau0,)), 1.0)
    p = tmp_path / "e.csv"
    write_enumeration_csv(p, Z3, enum)
    lines = p.read_text().splitlines()
    assert lines[0] == "y1,y2,y3,Q_maj,q_1"
    assert len(lines) == 1 + 7
