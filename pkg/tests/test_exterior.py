import numpy as np
import pytest

from kmtheta.exterior import (ExteriorFormValue, PlacesFormValue, key_of, mask_of_key, mask_to_sets,
                              ordered_mask, sets_to_mask)


def test_mask_roundtrip():
    n = 3
    for mask in range(1 << (2 * n)):
        s1, s2 = mask_to_sets(n, mask)
        assert sets_to_mask(n, s1, s2) == mask
        assert mask_of_key(n, key_of(n, mask)) == mask


def test_ordered_mask_signs():
    m, s = ordered_mask(2, [(1, 1), (2, 1)])
    m2, s2 = ordered_mask(2, [(2, 1), (1, 1)])
    assert m == m2 and s == -s2
    assert ordered_mask(2, [(1, 1), (1, 1)])[1] == 0


def test_wedge_anticommutes_on_one_forms():
    a = ExteriorFormValue.monomial(2, [(1, 1)])
    b = ExteriorFormValue.monomial(2, [(2, 2)])
    assert np.array_equal((a ^ b).coeffs, -(b ^ a).coeffs)
    assert (a ^ a).max_abs() == 0


def test_wedge_associative_and_unit(rng):
    n = 2
    f = [ExteriorFormValue(n, rng.normal(size=16)) for _ in range(3)]
    left = (f[0] ^ f[1]) ^ f[2]
    right = f[0] ^ (f[1] ^ f[2])
    assert np.allclose(left.coeffs, right.coeffs)
    one = ExteriorFormValue.scalar(n)
    assert np.allclose((one ^ f[0]).coeffs, f[0].coeffs)


def test_coefficient_access_and_degrees():
    f = ExteriorFormValue.monomial(2, [(2, 1), (1, 2)], 3.0)
    assert f.coefficient_of([(1, 2), (2, 1)]) == -3.0
    assert f.degrees() == {(1, 1)}
    assert f.restrict([1]).max_abs() == 0
    assert f.restrict([1, 2]).max_abs() == 3.0


def test_bad_length():
    with pytest.raises(ValueError):
        ExteriorFormValue(2, np.zeros(5))


def test_json_keys():
    f = ExteriorFormValue.monomial(1, [(1, 1), (2, 1)], 0.5)
    assert list(f.to_json().values()) == [0.5]


def test_places_tensor_product():
    a = ExteriorFormValue.monomial(1, [(1, 1), (2, 1)], 2.0)
    b = ExteriorFormValue.scalar(1, 3.0)
    P = PlacesFormValue.from_places([a, b])
    assert P.places == 2
    assert P.max_abs() == 6.0
    assert np.allclose(P.place_factor(1).coeffs, (a * 3.0).coeffs)
    assert P.tensor.shape == (4, 4)
