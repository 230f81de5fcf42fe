import numpy as np
import pytest

from kmtheta.clifford import orthogonalize, random_gspin, scalar, vector_action
from kmtheta.kmform import KMFrame
from kmtheta.perioddomain import (PlaneError, PolyPeriodPoint, act, chart, comparability_constants,
                                  majorant_R, majorant_form, make_period_point, negative_projection,
                                  random_period_point, section_norm_sq)

E1, E2, E3 = np.eye(3)


def test_make_period_point_keeps_orthonormal_input(sig12, tau0):
    assert np.allclose(tau0.alpha, E2) and np.allclose(tau0.beta, E3)


def test_make_period_point_gram_schmidt(sig12):
    t = make_period_point(sig12, 1, E2, E2 + E3)
    assert np.allclose(t.alpha, E2) and np.allclose(t.beta, E3)


def test_make_period_point_errors(sig12):
    with pytest.raises(PlaneError):
        make_period_point(sig12, 1, E1, E2)
    with pytest.raises(PlaneError):
        make_period_point(sig12, 1, E2, 2 * E2)
    with pytest.raises(PlaneError):
        make_period_point(sig12, 2, E2, E3)


def test_period_point_invariants(sig22, rng):
    for _ in range(50):
        t = random_period_point(sig22, 1, rng)
        G = t.gram
        aa, ab, bb = t.alpha @ G @ t.alpha, t.alpha @ G @ t.beta, t.beta @ G @ t.beta
        assert aa < 0
        assert abs(ab) <= 1e-10 * abs(aa)
        assert abs(aa - bb) <= 1e-10 * abs(aa)


def test_poly_period_point_places(mixed5, rng):
    t = random_period_point(mixed5, 1, rng)
    P = PolyPeriodPoint((t,))
    assert P.at(1) is t and len(P) == 1


def test_negative_projection(tau0):
    assert np.allclose(negative_projection(E1, tau0), 0)
    assert np.allclose(negative_projection(E2, tau0), E2)
    assert np.allclose(negative_projection(E1 + E2, tau0), E2)


def test_negative_projection_complement_is_orthogonal(sig22, rng):
    for _ in range(50):
        t = random_period_point(sig22, 1, rng)
        x = rng.normal(size=4)
        r = x - negative_projection(x, t)
        G = t.gram
        assert abs(r @ G @ t.alpha) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(t.alpha) * 2
        assert abs(r @ G @ t.beta) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(t.beta) * 2


def test_R_examples(tau0):
    # R = -<x_tau, x_tau>: for x = e2, <e2, e2> = -2, so R = 2 (= 2 |s|^2 with |s|^2 = 1)
    assert majorant_R(E1, tau0) == 0.0
    assert majorant_R(E2, tau0) == pytest.approx(2.0)
    assert majorant_R(2 * E2, tau0) == pytest.approx(8.0)


def test_R_formulas_agree(sig12, sig22, rng):
    for space in (sig12, sig22):
        for _ in range(500):
            t = random_period_point(space, 1, rng)
            x = rng.normal(size=space.dim) * rng.uniform(0.1, 10)
            a, b = majorant_R(x, t), majorant_R(x, t, "explicit")
            assert a >= 0
            assert abs(a - b) <= 1e-12 * max(a, 1e-300) or abs(a - b) < 1e-15
            assert abs(a - 2 * section_norm_sq(x, t)) <= 1e-12 * max(a, 1e-300) or a < 1e-15


def test_unknown_method(tau0):
    with pytest.raises(ValueError):
        majorant_R(E1, tau0, "other")


def test_majorant_form_examples(tau0, sig12, rng):
    assert np.allclose(majorant_form(tau0), np.eye(3))
    G = sig12.embedded_gram(1)
    for _ in range(100):
        t = random_period_point(sig12, 1, rng)
        A = majorant_form(t)
        np.linalg.cholesky(A)
        x = rng.normal(size=3)
        assert x @ A @ x >= 0.5 * x @ G @ x - 1e-12
    x = E1
    assert E1 @ majorant_form(tau0) @ E1 == pytest.approx(0.5 * x @ G @ x)


def test_section_norm(tau0):
    assert section_norm_sq(E1, tau0) == 0.0
    assert section_norm_sq(E2, tau0) == pytest.approx(1.0)


def test_section_norm_projective_invariance(sig12, rng):
    t = random_period_point(sig12, 1, rng)
    x = rng.normal(size=3)
    t2 = make_period_point(sig12, 1, 3 * t.alpha, 3 * t.beta)
    assert section_norm_sq(x, t2) == pytest.approx(section_norm_sq(x, t), rel=1e-12)


def test_act_identity_and_invariance(sig22, rng):
    fr = orthogonalize(sig22, 1)
    t = random_period_point(sig22, 1, rng)
    same = act(scalar(fr), t)
    assert np.allclose(same.alpha, t.alpha) and np.allclose(same.beta, t.beta)
    for g in random_gspin(fr, seed=1, count=200):
        x = rng.integers(-3, 4, 4).astype(float)
        a = majorant_R(x, t)
        b = majorant_R(vector_action(g, x), act(g, t))
        assert abs(a - b) <= 1e-9 * max(a, 1.0)


def test_chart_basepoint_and_conjugate(tau0):
    fr = KMFrame.at(tau0)
    p = chart(fr, np.array([0.0]))
    assert np.allclose(majorant_form(p), majorant_form(tau0))
    w = np.array([0.1 + 0.05j])
    up, down = chart(fr, w, 1), chart(fr, np.conj(w), -1)
    # conjugate branches give the same oriented-up-to-sign plane
    assert np.allclose(majorant_form(up), majorant_form(down))


def test_chart_domain_errors(tau0):
    fr = KMFrame.at(tau0)
    with pytest.raises(PlaneError):
        chart(fr, np.array([1.0 + 0j]))
    with pytest.raises(ValueError):
        chart(fr, np.array([0.1, 0.1]))


def test_R_continuous_on_chart_grid(tau0):
    fr = KMFrame.at(tau0)
    x = np.array([2.0, 1.0, 0.3])
    ticks = np.linspace(-0.2, 0.2, 10)
    vals = np.array([[majorant_R(x, chart(fr, np.array([u + 1j * v]))) for v in ticks] for u in ticks])
    assert np.max(np.abs(np.diff(vals, axis=0))) < 2.0
    fine = np.array([majorant_R(x, chart(fr, np.array([0.05 + 1j * v]))) for v in (0.0, 1e-6)])
    assert abs(fine[1] - fine[0]) < 1e-4


def test_comparability_constants_stable(tau0):
    fr = KMFrame.at(tau0)

    def sample(k):
        ticks = np.linspace(-0.3, 0.3, k)
        return [chart(fr, np.array([u + 1j * v])) for u in ticks for v in ticks]

    c1, d1 = comparability_constants(tau0, sample(11))
    c2, d2 = comparability_constants(tau0, sample(21))
    assert 0 < c1 <= 1 <= d1
    assert abs(c2 - c1) <= 0.05 * c1 and abs(d2 - d1) <= 0.05 * d1
