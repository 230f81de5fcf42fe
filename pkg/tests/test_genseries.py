import io
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.special import gamma

from kmtheta.diagnostics import is_even_for, translation_unit
from kmtheta.genseries import (BudgetExceeded, DivergentSeries, GeneratingSeriesSpec, coefficient_of_T,
                               km_theta, modularity_check_inversion, modularity_check_translation,
                               q_expansion, t_key, tail_model, theta_coefficients, theta_scalar, translate,
                               weight_factor)
from kmtheta.lattice import OLattice, e8_lattice
from kmtheta.perioddomain import make_period_point
from kmtheta.quadspace import QuadraticSpace
from kmtheta.whittaker import SymplecticElement, compact, levi, random_compact, rotation, unipotent


@pytest.fixture(scope="module")
def tau12(sig12):
    return make_period_point(sig12, 1, [0.1, 1, 0.2], [0.05, -0.1, 1.1])


@pytest.fixture(scope="module")
def spec12(Z3, tau12):
    return GeneratingSeriesSpec(Z3, 1, (tau12,), epsilon=1e-8)


def _g(x, y, theta=0.0):
    return unipotent([[x]]) @ levi([[math.sqrt(y)]]) @ rotation(theta)


def test_e8_theta_at_i():
    # theta_E8 = E_4 and E_4(i) = 3 Gamma(1/4)^8 / (2 pi)^6
    ref = 3 * gamma(0.25) ** 8 / (2 * math.pi) ** 6
    val, info = theta_scalar(e8_lattice(), 1j, 1e-12, return_info=True)
    assert abs(val - ref) < 1e-12 * ref
    assert info["tail_bound"] <= 1e-12


def test_theta_scalar_guard():
    with pytest.raises(ValueError):
        theta_scalar(e8_lattice(), 0.05j)


def test_e8_theta_coefficients():
    c = theta_coefficients(e8_lattice(), 4)
    F = e8_lattice().field
    assert [c[F(m)] for m in range(5)] == [1, 240, 2160, 6720, 17520]


def test_theta_coefficients_over_quadratic_field(K5):
    space = QuadraticSpace.from_entries(K5, [[2, 0], [0, 2]], 0)
    c = theta_coefficients(OLattice.standard(space), 3.0)
    assert c[K5(0)] == 1
    assert c[K5(1)] == 4  # units of trace-1 norm: +-e1, +-e2
    assert all(sum(q.embeddings()) <= 3.0 + 1e-9 for q in c)


def test_inversion_e8_and_odd():
    pts = [0.3 + 0.9j, -0.2 + 1.4j, 0.45 + 0.6j]
    assert modularity_check_inversion(e8_lattice(), pts) < 1e-10
    Q = e8_lattice().field
    A2 = OLattice.standard(QuadraticSpace.from_entries(Q, [[2, -1], [-1, 2]], 0))
    assert modularity_check_inversion(A2, pts) < 1e-10


def test_spec_validation(Z3, tau12):
    with pytest.raises(ValueError):
        GeneratingSeriesSpec(Z3, 1, ())
    with pytest.raises(ValueError):
        GeneratingSeriesSpec(Z3, 0, (tau12,))
    with pytest.raises(ValueError):
        GeneratingSeriesSpec(Z3, 1, (tau12,), epsilon=0)
    with pytest.raises(ValueError):
        GeneratingSeriesSpec(Z3, 1, (tau12,), coset=("1/3", 0, 0))
    ok = GeneratingSeriesSpec(Z3, 1, (tau12,), coset=("1/2", 0, 0))
    assert ok.coset == (Fraction(1, 2), 0, 0)
    assert GeneratingSeriesSpec(Z3, 1, (tau12,), coset=(0, 0, 0)).coset is None


def test_tail_bound_is_conservative(spec12):
    g = [_g(0.1, 1.3)]
    ref = km_theta(GeneratingSeriesSpec(spec12.lattice, 1, spec12.tau, epsilon=1e-13), g)
    val = km_theta(spec12, g)
    assert val.tail_bound <= 1e-8
    assert np.max(np.abs(val.value - ref.value)) <= val.tail_bound


def test_weight_covariance(spec12, rng):
    g = [_g(0.2, 1.1)]
    base = km_theta(spec12, g)
    for _ in range(5):
        k = random_compact(1, rng)
        moved = km_theta(spec12, [g[0] @ k], radius=base.radius)
        assert np.allclose(moved.value, weight_factor([k], 3) * base.value, rtol=1e-12, atol=1e-15)


def test_reassembly(spec12, rng):
    qexp = q_expansion(spec12)
    assert qexp.tail_bound <= 1e-8
    for _ in range(10):
        g = [_g(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.8), rng.uniform(0, 2 * np.pi))]
        direct = km_theta(spec12, g, v_scale=None, radius=qexp.radius)
        again = qexp.reassemble(g, 3)
        assert np.max(np.abs(direct.value - again)) <= 1e-12 * max(1.0, np.max(np.abs(direct.value)))


def test_translation_even_lattice(spec12):
    assert is_even_for(spec12.lattice, 1)
    dev = modularity_check_translation(spec12, 1, [_g(0.13, 1.2, 0.4)])
    assert dev <= 1e-12


def test_translation_quadratic_field(mixed5, rng):
    from kmtheta.perioddomain import random_period_point
    L = OLattice.standard(mixed5)
    t = random_period_point(mixed5, 1, rng, spread=0.2)
    spec = GeneratingSeriesSpec(L, 1, (t,), epsilon=1e-8)
    mu = translation_unit(L)
    assert is_even_for(L, mu)
    g = [_g(0.1, 1.1), _g(-0.2, 1.3)]
    assert modularity_check_translation(spec, mu, g) <= 1e-8


def test_translation_odd_control(Q):
    L = OLattice.standard(QuadraticSpace.from_entries(Q, [[1]], 0))
    assert not is_even_for(L, 1)
    spec = GeneratingSeriesSpec(L, 1, (), epsilon=1e-10)
    assert modularity_check_translation(spec, 1, [_g(0.1, 1.0)]) > 0.1


def test_translate_moves_tau_prime():
    g = translate([SymplecticElement.identity(1)], Fraction(1, 2))[0]
    assert g.act(np.array([[1j]]))[0, 0] == pytest.approx(0.5 + 1j)


def test_coefficient_of_T_definite():
    spec = GeneratingSeriesSpec(e8_lattice(), 1, ())
    c, complete = coefficient_of_T(spec, [[1]])
    assert complete and c[0] == 240
    c, complete = coefficient_of_T(spec, [[-1]])
    assert complete and c[0] == 0


def test_coefficient_of_T_matches_q_expansion(spec12):
    qexp = q_expansion(spec12, radius=12.0)
    F = spec12.lattice.field
    for T in ([[F(1)]], [[F(0)]], [[F(2)]]):
        with pytest.warns(UserWarning):
            c, complete = coefficient_of_T(spec12, T, bound=12.0)
        assert not complete
        assert np.allclose(c, qexp[t_key(T)], atol=1e-14)


def test_rank_two_theta(sig22):
    tau = make_period_point(sig22, 1, [0.1, 0, 1, 0.1], [0, 0.2, 0, 1])
    spec = GeneratingSeriesSpec(OLattice.standard(sig22), 2, (tau,), epsilon=1e-6)
    g = [SymplecticElement(np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]]))]
    val = km_theta(spec, g)
    assert val.tensor().shape == (16,) and val.count > 0
    assert np.max(np.abs(val.value)) > 1e-6
    k = random_compact(2, np.random.default_rng(3))
    moved = km_theta(spec, [g[0] @ k], radius=val.radius)
    assert np.allclose(moved.value, weight_factor([k], 4) * val.value, rtol=1e-10, atol=1e-14)


def test_budget_and_divergence(Z3, tau12):
    tiny = GeneratingSeriesSpec(Z3, 1, (tau12,), epsilon=1e-8, budget=10)
    with pytest.raises(BudgetExceeded):
        km_theta(tiny, [_g(0, 1.0)])
    spec = GeneratingSeriesSpec(Z3, 1, (tau12,))
    with pytest.raises(DivergentSeries):
        tail_model(spec, [levi([[2.0]])], scaled=False)


def test_csv_format_and_determinism(spec12):
    a, b = io.StringIO(), io.StringIO()
    q_expansion(spec12).write_csv(a)
    q_expansion(spec12).write_csv(b)
    assert a.getvalue() == b.getvalue()
    lines = a.getvalue().splitlines()
    assert lines[0] == "T_key,component,re,im"
    assert lines[-1].startswith("#radius,")
    assert lines[1].split(",")[0] == "0"
