import numpy as np
import pytest

from kmtheta.clifford import exact_vector_action, orthogonalize, random_gspin
from kmtheta.quadspace import ProfileError, QuadraticSpace, rref, reflect, vec


def E(space, k):
    return space.basis_vector(k)


def test_inner_products_on_diag(sig12, Q):
    e1, e2 = E(sig12, 1), E(sig12, 2)
    assert sig12.quad_value(e1) == 1
    assert sig12.quad_value(vec(Q, [1, 1, 0])) == 0
    assert sig12.inner_product(e1, e2) == 0


def test_dimension_mismatch(sig12, Q):
    with pytest.raises(ValueError):
        sig12.inner_product(vec(Q, [1, 0]), vec(Q, [1, 0, 0]))


def test_intersection_matrix(Q):
    space = QuadraticSpace.from_entries(Q, [[2, 0, 0], [0, 6, 0], [0, 0, -2]], 0)
    e1, e2 = space.basis_vector(1), space.basis_vector(2)
    assert space.intersection_matrix([e1]) == ((Q(1),),)
    assert space.intersection_matrix([e1, e2]) == ((Q(1), Q(0)), (Q(0), Q(3)))
    v = vec(Q, [1, 0, 0])
    sp2 = QuadraticSpace.from_entries(Q, [[4, 0, 0], [0, 2, 0], [0, 0, -2]], 0)
    T = sp2.intersection_matrix([v, v])
    assert T == ((Q(2), Q(2)), (Q(2), Q(2)))


def test_intersection_diagonal_is_q(mixed5, K5, rng):
    for _ in range(30):
        xs = [tuple(K5(int(a), int(b)) for a, b in rng.integers(-3, 4, (3, 2))) for _ in range(3)]
        T = mixed5.intersection_matrix(xs)
        for i, x in enumerate(xs):
            assert T[i][i] == mixed5.quad_value(x)


def test_signatures(sig12, mixed5):
    assert sig12.signature_at(1) == (1, 2)
    assert mixed5.signature_at(1) == (1, 2)
    assert mixed5.signature_at(2) == (3, 0)
    for space in (sig12, mixed5):
        assert all(sum(s) == space.dim for s in space.signature_profile())
    mixed5.check_profile()


def test_profile_violation(Q):
    space = QuadraticSpace.from_entries(Q, [[2, 0, 0], [0, 2, 0], [0, 0, 2]], 1)
    with pytest.raises(ProfileError):
        space.check_profile()


def test_singular_gram_rejected(Q):
    space = QuadraticSpace.from_entries(Q, [[2, 0], [0, 0]], 0)
    with pytest.raises(np.linalg.LinAlgError):
        space.signature_at(1)


def test_non_symmetric_gram_rejected(Q):
    with pytest.raises(ValueError):
        QuadraticSpace.from_entries(Q, [[2, 1], [0, 2]], 0)


def test_totally_positive_subspace(sig12, mixed5):
    assert sig12.is_totally_positive_subspace([E(sig12, 1)])
    assert not sig12.is_totally_positive_subspace([E(sig12, 2)])
    assert mixed5.is_totally_positive_subspace([E(mixed5, 1)])
    assert sig12.is_totally_positive_subspace([sig12.zero_vector()])


def test_totally_positive_subspace_row_invariance(mixed5, K5, rng):
    for _ in range(20):
        xs = [tuple(K5(int(a), int(b)) for a, b in rng.integers(-2, 3, (3, 2))) for _ in range(2)]
        c = K5(int(rng.integers(1, 4)), int(rng.integers(-2, 3)))
        ys = [xs[0], tuple(a + c * b for a, b in zip(xs[1], xs[0]))]
        assert mixed5.is_totally_positive_subspace(xs) == mixed5.is_totally_positive_subspace(ys)


def test_canonical_subtuple(sig12, Q):
    v, w = vec(Q, [1, 2, 0]), vec(Q, [0, 1, 1])
    two_v = tuple(2 * a for a in v)
    assert sig12.canonical_subtuple([v, two_v, w])[0] == (1, 3)
    assert sig12.canonical_subtuple([sig12.zero_vector(), v])[0] == (2,)
    vw = tuple(a + b for a, b in zip(v, w))
    assert sig12.canonical_subtuple([v, w, vw])[0] == (1, 2)
    assert sig12.canonical_subtuple([sig12.zero_vector()]) == ((), ())


def test_orthogonal_complement(sig12):
    comp = sig12.orthogonal_complement([E(sig12, 1)])
    assert len(comp) == 2
    for c in comp:
        assert sig12.inner_product(c, E(sig12, 1)) == 0
        assert c[0] == 0
    assert len(sig12.orthogonal_complement([])) == 3
    full = [E(sig12, k) for k in (1, 2, 3)]
    assert sig12.orthogonal_complement(full) == []


def test_rref_exact(K5):
    rows = [[K5(1), K5(2)], [K5(2), K5(4)]]
    R, piv = rref(rows)
    assert piv == [0]


def test_reflection_is_isometry(mixed5, K5, rng):
    for _ in range(20):
        v = tuple(K5(int(a), int(b)) for a, b in rng.integers(-2, 3, (3, 2)))
        if not mixed5.quad_value(v):
            continue
        x = tuple(K5(int(a), int(b)) for a, b in rng.integers(-3, 4, (3, 2)))
        assert mixed5.quad_value(reflect(mixed5, v, x)) == mixed5.quad_value(x)


@pytest.mark.parametrize("which", ["sig12", "sig22"])
def test_T_invariant_under_gspin_exactly(which, request, rng):
    space = request.getfixturevalue(which)
    frame = orthogonalize(space, 1)
    for g in random_gspin(frame, seed=3, count=200):
        xs = [tuple(space.field(int(a)) for a in rng.integers(-3, 4, space.dim)) for _ in range(2)]
        gx = [exact_vector_action(g, x) for x in xs]
        assert space.intersection_matrix(gx) == space.intersection_matrix(xs)
