import numpy as np
import pytest

from kmtheta.exterior import ExteriorFormValue
from kmtheta.kmform import (LITERAL, STANDARD, KMFrame, closedness_defect, evaluate_at, km_phi1, km_phi_circ,
                            km_phi_m, km_zero_form, omega2, omega2_batch, restriction_splitting_check)
from kmtheta.perioddomain import make_period_point, random_period_point

TWO_PI = 2 * np.pi


def _vec(F, *cs):
    return tuple(c if hasattr(c, "embed") else F(c) for c in cs)


def test_phi1_positive_vector(sig12, tau0):
    # e1 has frame coordinates (sqrt2, 0, 0), R = 0
    f = evaluate_at(np.array([1.0, 0, 0]), tau0, KMFrame.at(tau0))
    assert f.coefficient([1], [1]) == pytest.approx(4 - 1 / TWO_PI, rel=1e-14)
    assert f.degrees() == {(1, 1)}


def test_phi1_negative_vector(tau0):
    f = evaluate_at(np.array([0.0, 1, 0]), tau0, KMFrame.at(tau0))
    assert f.coefficient([1], [1]) == pytest.approx(-np.exp(-4 * np.pi) / TWO_PI, rel=1e-12)


def test_gaussian_factor(rng):
    n = 2
    for _ in range(20):
        xc = rng.normal(size=n + 2)
        pos = xc.copy()
        pos[n:] = 0
        R = xc[n] ** 2 + xc[n + 1] ** 2
        assert np.allclose(km_phi1(xc, n).coeffs, np.exp(-TWO_PI * R) * km_phi1(pos, n).coeffs, rtol=1e-13)


def test_tuple_is_wedge_and_symmetric(rng):
    n = 2
    x, y = rng.normal(size=(2, n + 2))
    xy = km_phi_m([x, y], n)
    assert np.allclose(xy.coeffs, (km_phi1(x, n) ^ km_phi1(y, n)).coeffs)
    assert np.allclose(xy.coeffs, km_phi_m([y, x], n).coeffs)
    assert xy.degrees() <= {(2, 2)}


def test_zero_form():
    z = km_zero_form(1, 1)
    assert z.coefficient([1], [1]) == pytest.approx(1 / TWO_PI)
    z2 = km_zero_form(2, 2)
    # (1/2pi)^2 (w11 w21 + w12 w22)^2 = 2 (1/2pi)^2 w11 w21 w12 w22
    assert z2.coefficient_of([(1, 1), (2, 1), (1, 2), (2, 2)]) == pytest.approx(2 / TWO_PI ** 2)
    with pytest.raises(ValueError):
        km_zero_form(0, 1)


def test_circ_normalizations(rng):
    n = 1
    xc = rng.normal(size=3)
    base = km_phi1(xc, n)
    lit = km_phi_circ([xc], n, LITERAL)
    std = km_phi_circ([xc], n, STANDARD)
    qz = 0.5 * np.sum(xc ** 2)
    q = 0.5 * (xc[0] ** 2 - xc[1] ** 2 - xc[2] ** 2)
    assert np.allclose(lit.coeffs, base.coeffs * np.exp(-TWO_PI * qz))
    assert np.allclose(std.coeffs, base.coeffs * np.exp(-TWO_PI * q))
    # standard: total Gaussian exp(-pi sum x^2)
    assert np.allclose(std.coeffs, np.exp(-np.pi * np.sum(xc ** 2)) * km_phi1(np.r_[xc[:1], 0, 0], n).coeffs)


def test_restriction_splitting(sig22):
    F = sig22.field
    tau_U = make_period_point(sig22, 1, [0, 0.3, 1, 0], [0, -0.2, 0, 1])
    U = [_vec(F, 1, 0, 0, 0)]
    for x in ([_vec(F, 1, 0, 0, 0)], [_vec(F, 3, 0, 0, 0)], [_vec(F, -2, 0, 0, 0)]):
        for norm in (LITERAL, STANDARD):
            assert restriction_splitting_check(U, x, tau_U, norm) <= 1e-9


def test_closedness(sig22):
    tau = make_period_point(sig22, 1, [0, 0, 1, 0], [0, 0, 0, 1])
    fr = KMFrame.at(tau)
    w = np.array([0.1 + 0.05j, -0.1 + 0.02j])
    x = np.array([1.0, 0, 0, 0])
    d1 = closedness_defect(x, fr, w, 1e-3)
    d2 = closedness_defect(x, fr, w, 5e-4)
    assert d1 < 1e-5
    assert d2 < d1


def test_omega2_zero_tuple_uses_signed_zero_form(sig12, tau0):
    fr = KMFrame.at(tau0)
    F = sig12.field
    z = omega2([_vec(F, 0, 0, 0)], (tau0,), (fr,))
    assert np.allclose(z.place_factor(1).coeffs, km_zero_form(1, 1).coeffs)


def test_omega2_on_quadratic_field(mixed5, rng):
    F = mixed5.field
    t = random_period_point(mixed5, 1, rng)
    fr = KMFrame.at(t)
    x = _vec(F, 1, F.sqrt_d, 2)
    w = omega2([x], (t,), (fr,))
    assert w.places == 1
    direct = evaluate_at(x, t, fr)
    assert np.allclose(w.place_factor(1).coeffs, direct.coeffs)
    with pytest.raises(ValueError):
        omega2([x], (t,), ())


def test_omega2_batch_matches_loop(sig22, rng):
    t = random_period_point(sig22, 1, rng)
    fr = KMFrame.at(t)
    X = rng.integers(-2, 3, size=(6, 2, 4)).astype(float)
    X[0] = 0
    batch = omega2_batch(X[None], (t,), (fr,))
    for k in range(6):
        ref = omega2([X[k, 0], X[k, 1]], (t,), (fr,))
        assert np.allclose(batch[k], ref.tensor, atol=1e-15)
