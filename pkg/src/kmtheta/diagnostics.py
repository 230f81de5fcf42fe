"""Named numeric checks shared by `kmtheta check` and `kmtheta selftest`.

Each check returns a Record; `passed` compares `value` with `tolerance`
(or a range) as stated in the record.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .clifford import exact_vector_action, orthogonalize, random_gspin, vector_action
from .genseries import (GeneratingSeriesSpec, modularity_check_inversion, modularity_check_translation,
                        theta_coefficients)
from .greens import (EULER_GAMMA, count_bounded_R, ddc_check, exp_integral_f, star_expansion,
                     star_expansion_recursive)
from .kmform import KMFrame
from .lattice import OLattice, box_scan, e8_lattice, enumerate_majorant, total_majorant
from .perioddomain import act, majorant_R, random_period_point, section_norm_sq
from .whittaker import (SymplecticElement, compact, det_half, levi, random_compact, random_symplectic, unipotent,
                        whittaker_W)


@dataclass
class Record:
    name: str
    value: float
    tolerance: float | None = None
    passed: bool = True
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _upper(name, value, tol, **detail) -> Record:
    return Record(name, float(value), tol, bool(value <= tol), detail)


# majorant and GSpin --------------------------------------------------------

def check_majorant_identities(space, seed: int = 0, samples: int = 200) -> Record:
    rng = np.random.default_rng(seed)
    worst_formula = worst_section = 0.0
    for _ in range(samples):
        tau = random_period_point(space, 1, rng)
        x = rng.normal(size=space.dim)
        a = majorant_R(x, tau, "projection")
        b = majorant_R(x, tau, "explicit")
        s = 2 * section_norm_sq(x, tau)
        worst_formula = max(worst_formula, abs(a - b) / max(abs(a), 1e-300))
        worst_section = max(worst_section, abs(a - s) / max(abs(a), 1e-300))
    return _upper("majorant_identities", max(worst_formula, worst_section), 1e-12,
                  formula=worst_formula, section_norm=worst_section)


def check_gspin_invariance(space, seed: int = 0, count: int = 20) -> Record:
    rng = np.random.default_rng(seed)
    frame = orthogonalize(space, 1)
    worst = 0.0
    exact = True
    for g in random_gspin(frame, seed, count):
        tau = random_period_point(space, 1, rng)
        x = tuple(space.field(int(v)) for v in rng.integers(-3, 4, space.dim))
        xr = np.array([c.embed(1) for c in x])
        a = majorant_R(xr, tau)
        b = majorant_R(vector_action(g, xr), act(g, tau))
        worst = max(worst, abs(a - b) / max(abs(a), 1.0))
        gx = exact_vector_action(g, x)
        exact &= space.quad_value(gx) == space.quad_value(x)
    rec = _upper("gspin_invariance", worst, 1e-9, exact_T=exact)
    rec.passed = rec.passed and exact
    return rec


# Green function ------------------------------------------------------------

def check_exp_integral() -> Record:
    oracle, _ = integrate.quad(lambda u: math.exp(-u) / u, 1.0, np.inf, epsabs=0, epsrel=1e-13)
    err1 = abs(exp_integral_f(1.0) - oracle)
    t = 1e-8
    gap = exp_integral_f(t) + math.log(t) + EULER_GAMMA
    # the gap itself is t - t^2/4 + ..., so compare against that series
    err_small = abs(gap - (t - t * t / 4))
    rec = _upper("exp_integral", err1, 1e-12, small_t=err_small, raw_gap=gap)
    rec.passed = rec.passed and err_small <= 1e-10
    return rec


def check_star_expansion(max_n: int = 6) -> Record:
    bad = [N for N in range(1, max_n + 1) if star_expansion(N) != star_expansion_recursive(N)]
    return Record("star_expansion", float(len(bad)), 0.0, not bad, {"mismatched_N": bad})


def check_counting_exponent(lattice: OLattice, tau, N_max: float | None = None, points: int = 8) -> Record:
    """Log-log slope of the majorant-ball count against rank/2 (= (n+2)/2 over Q)."""
    k = lattice.rank
    if N_max is None:
        N_max = 400.0 if k <= 4 else 2e5 ** (2 / k)
    Ns = list(np.geomspace(N_max / 16, N_max, points))
    res = count_bounded_R(lattice, tau, Ns)
    target = k / 2
    lo, hi = target - 0.3, target + 0.3
    val = res["exponent"]
    return Record("counting_exponent", val, None, bool(lo <= val <= hi),
                  {"range": [lo, hi], "N": Ns, "counts": res["counts"]})


def _ddc_vector(lattice: OLattice, frame: KMFrame, grid, radius: float = 12.0):
    """A short positive lattice vector keeping R >= 0.5 on the whole grid, or None."""
    from .perioddomain import chart
    M = total_majorant(lattice, (frame.tau,))
    enum = enumerate_majorant(M, radius)
    B = lattice.basis_at(1)
    G = lattice.space.embedded_gram(1)
    for y in enum.coords[1:]:
        x = B @ y
        if 0.5 * x @ G @ x <= 0:
            continue
        if min(majorant_R(x, chart(frame, np.array([w]))) for w in grid) >= 0.5:
            return x
    return None


def check_ddc(lattice: OLattice, tau, grid_size: int = 10, h: float = 1e-3) -> Record | None:
    space = lattice.space
    if space.n != 1 or space.e < 1:
        return None
    frame = KMFrame.at(tau)
    ticks = np.linspace(-0.2, 0.2, grid_size)
    grid = [complex(u, v) for u in ticks for v in ticks]
    x = _ddc_vector(lattice, frame, grid)
    if x is None:
        return Record("ddc", math.nan, 1e-3, False, {"reason": "no lattice vector with R >= 0.5 on the grid"})
    dev = ddc_check(x, frame, grid, h)
    dev_half = ddc_check(x, frame, grid, h / 2)
    rec = _upper("ddc", dev, 1e-3, halved=dev_half, x=[float(v) for v in x])
    rec.passed = rec.passed and dev_half < dev
    return rec


# Whittaker -----------------------------------------------------------------

def check_whittaker_covariance(seed: int = 0, trials: int = 20) -> Record:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        r = int(rng.integers(1, 3))
        m = int(rng.integers(3, 6))
        A = rng.normal(size=(r, r))
        beta = A @ A.T
        g = random_symplectic(r, rng)
        k0 = random_compact(r, rng)
        lhs = whittaker_W(beta, g @ k0, m)
        rhs = det_half(k0) ** m * whittaker_W(beta, g, m)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    gate = whittaker_W(np.array([[-0.5]]), SymplecticElement.identity(1), 3) == 0
    rec = _upper("whittaker_covariance", worst, 1e-12, psd_gate=bool(gate))
    rec.passed = rec.passed and gate
    return rec


# theta functions -----------------------------------------------------------

def translation_unit(lattice: OLattice):
    F = lattice.field
    return F(1) if F.degree == 1 else F.codifferent_generator()


def is_even_for(lattice: OLattice, mu) -> bool:
    """tr(mu q(x)) is integral on the lattice, so translation by mu is exact."""
    A, B, den = lattice.exact_gram_parts()
    F = lattice.field
    k = lattice.rank
    for a in range(k):
        for b in range(a, k):
            c = F(Fraction(int(A[a, b]), den), Fraction(int(B[a, b]), den))
            if a == b:
                c = c * Fraction(1, 2)
            if ((mu * c).a * F.degree).denominator != 1:
                return False
    return True


def check_translation(lattice: OLattice, tau, seed: int = 0) -> Record:
    mu = translation_unit(lattice)
    even = is_even_for(lattice, mu)
    spec = GeneratingSeriesSpec(lattice, 1, tuple(tau), epsilon=1e-10)
    rng = np.random.default_rng(seed)
    g = [unipotent(np.array([[rng.uniform(-0.5, 0.5)]])) @ levi(np.array([[rng.uniform(0.8, 1.2)]]))
         @ compact(np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]])) for _ in range(lattice.space.d)]
    dev = modularity_check_translation(spec, mu, g)
    tol = 1e-12 if lattice.field.degree == 1 else 1e-8
    rec = _upper("translation", dev, tol, mu=repr(mu), even=even)
    if not even:
        rec.passed = True
        rec.detail["note"] = "odd lattice: deviation is expected and not gated"
    return rec


def check_inversion(lattice: OLattice, seed: int = 0, points: int = 20) -> Record | None:
    if lattice.space.d != 1 or lattice.space.e != 0:
        return None
    rng = np.random.default_rng(seed)
    pts = [complex(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 2.0)) for _ in range(points)]
    return _upper("inversion", modularity_check_inversion(lattice, pts), 1e-8)


def check_e8_coefficients() -> Record:
    coeffs = theta_coefficients(e8_lattice(), 3)
    got = [coeffs.get(e8_lattice().field(m), 0) for m in range(4)]
    want = [1, 240, 2160, 6720]
    return Record("e8_coefficients", float(got != want), 0.0, got == want, {"counts": got})


def check_enumeration_kernel(seed: int = 0) -> Record:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(5):
        A = rng.normal(size=(3, 3))
        M = A @ A.T + 0.5 * np.eye(3)
        c = rng.uniform(-0.5, 0.5, 3)
        a = {tuple(v) for v in enumerate_majorant(M, 6.0, c).coords.tolist()}
        b = {tuple(v) for v in box_scan(M, 6.0, c).tolist()}
        bad += a != b
    return Record("enumeration_vs_box_scan", float(bad), 0.0, bad == 0)


def suite(lattice: OLattice, tau, seed: int = 0, grid: int = 10) -> list[Record]:
    out = [check_exp_integral(), check_star_expansion(), check_whittaker_covariance(seed)]
    space = lattice.space
    if space.e >= 1:
        out += [check_majorant_identities(space, seed), check_gspin_invariance(space, seed),
                check_counting_exponent(lattice, tau)]
        rec = check_ddc(lattice, tau[0], grid)
        if rec is not None:
            out.append(rec)
    out.append(check_translation(lattice, tau, seed))
    rec = check_inversion(lattice, seed)
    if rec is not None:
        out.append(rec)
    return out


def selftest(seed: int = 0) -> list[Record]:
    from .numberfield import TotallyRealField
    from .quadspace import QuadraticSpace
    Q = TotallyRealField.rationals()
    space = QuadraticSpace.from_entries(Q, [[2, 0, 0], [0, -2, 0], [0, 0, -2]], 1)
    return [check_exp_integral(), check_star_expansion(), check_whittaker_covariance(seed),
            check_majorant_identities(space, seed, 100), check_gspin_invariance(space, seed, 10),
            check_enumeration_kernel(seed), check_e8_coefficients(), check_inversion(e8_lattice(), seed, 5)]


def check_eigenphase(normalization: str | None = None, points: int = 61, half_width: float = 4.0,
                     thetas=(0.2, 0.5, 0.9, 1.3)) -> Record:
    """Weil-action eigenphase of the phi-circ coefficient on a 3-d grid (signature (1,2), n = 1).

    The coefficient is sampled in frame coordinates and rotated by the
    fractional Fourier oracle; an eigenfunction gives the same fitted phase
    c for every angle and a small residual.
    """
    from .kmform import circ_factor_grid, phi1_matrix
    from .whittaker import eigenphase
    x = np.linspace(-half_width, half_width, points)
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), -1)
    f = phi1_matrix(X, 1)[..., 0, 0] * circ_factor_grid(X, 1, normalization)
    fit = eigenphase(f, x, thetas, (1, 2))
    spread = float(np.ptp(fit[:, 0]))
    resid = float(np.max(fit[:, 1]))
    value = max(spread, resid)
    return Record("eigenphase", value, 1e-2, bool(value <= 1e-2),
                  {"normalization": normalization, "phases": fit[:, 0].tolist(), "residuals": fit[:, 1].tolist()})
