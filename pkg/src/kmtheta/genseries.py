"""The generating-series theta function and its numeric modularity checks.

The lattice sum

    Theta(g) = sum_{x in (L + c)^r} W_{T(x)}(g) omega_2(x v, tau)

is truncated at total majorant sum_k Q_maj(x_k) <= B, with B chosen from a
rigorous tail bound (Gaussian decay of each term, a polynomial bound on the
form coefficients and a covering-radius bound on lattice point counts).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .kmform import KMFrame, omega2_batch
from .lattice import (OLattice, dual_lattice, enumerate_majorant, exact_pairings, fibers_with_T,
                      total_majorant)
from .numberfield import FieldElement, parse_element
from .whittaker import (SymplecticElement, embed_matrix, is_psd, iwasawa, unipotent, whittaker_hilbert)

TWO_PI = 2.0 * math.pi
DEFAULT_BUDGET = 4_000_000


class BudgetExceeded(RuntimeError):
    """The requested tail bound needs more lattice points than the budget allows."""


class DivergentSeries(ValueError):
    """The archimedean data gives no Gaussian decay, so no tail bound exists."""


@dataclass
class GeneratingSeriesSpec:
    lattice: OLattice
    r: int = 1
    tau: tuple = ()
    frames: tuple = ()
    epsilon: float = 1e-8
    coset: tuple | None = None
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        self.tau = tuple(self.tau)
        if len(self.tau) != self.lattice.space.e:
            raise ValueError("one period point per indefinite place is required")
        if not self.frames:
            self.frames = tuple(KMFrame.at(t) for t in self.tau)
        self.frames = tuple(self.frames)
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.r < 1:
            raise ValueError("r must be positive")
        if self.coset is not None:
            c = tuple(Fraction(v) for v in self.coset)
            if len(c) != self.lattice.rank:
                raise ValueError("coset offset needs one coordinate per Z-basis vector")
            G = self.lattice.trace_gram()
            for b in range(len(c)):
                if sum(c[a] * G[a][b] for a in range(len(c))).denominator != 1:
                    raise ValueError("coset offset does not lie in the dual lattice")
            self.coset = c if any(c) else None

    @property
    def n(self) -> int:
        return self.lattice.space.n

    @property
    def weight_dim(self) -> int:
        return self.lattice.space.dim

    def offset(self) -> np.ndarray | None:
        return None if self.coset is None else np.array([float(v) for v in self.coset])


# tail bounds ---------------------------------------------------------------

@dataclass
class TailModel:
    """|term(x)| <= h(S) with S = sum_k Q_maj(x_k); count(S) <= N(S)^r."""
    decay: float          # c in e^{-2 pi c S}
    poly_scale: float     # lambda in (1 + 4 lambda S)^{r e}
    poly_degree: int      # r e
    prefactor: float      # P * K
    rank: int
    r: int
    log_ball: float       # log(V_rank / sqrt(det M))
    covering: float       # covering-radius bound in the majorant metric

    def h(self, S):
        return self.prefactor * (1 + 4 * self.poly_scale * S) ** self.poly_degree * np.exp(-TWO_PI * self.decay * S)

    def dh(self, S):
        rate = 4 * self.poly_scale * self.poly_degree / (1 + 4 * self.poly_scale * S) - TWO_PI * self.decay
        return self.h(S) * rate

    def monotone_from(self) -> float:
        if self.poly_degree == 0:
            return 0.0
        return max(0.0, self.poly_degree / (TWO_PI * self.decay) - 1 / (4 * self.poly_scale))

    def log_count(self, S):
        return self.log_ball + self.rank * np.log(np.sqrt(S) + self.covering)

    def count(self, S) -> float:
        return float(np.exp(min(self.log_count(S), 700.0)))

    def tail(self, B: float) -> float:
        """Bound on the sum of |term| over tuples with S > B."""
        B = max(B, self.monotone_from())

        def integrand(S):
            return math.exp(self.r * self.log_count(S) + math.log(max(-self.dh(S), 1e-320)))

        val, _ = integrate.quad(integrand, B, np.inf, limit=200, epsabs=0.0, epsrel=1e-6)
        return 2.0 * val  # safety factor over the quadrature error

    def radius_for(self, epsilon: float) -> float:
        lo = self.monotone_from()
        if self.tail(lo) <= epsilon:
            return lo
        hi = max(2 * lo, 1.0)
        while self.tail(hi) > epsilon:
            hi *= 2
            if hi > 1e7:
                raise BudgetExceeded("no finite radius achieves the requested tail bound")
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.tail(mid) > epsilon:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-6 * hi:
                break
        return hi


def _ball_constants(M: np.ndarray) -> tuple[float, float]:
    k = M.shape[0]
    log_vol = (k / 2) * math.log(math.pi) - gammaln(k / 2 + 1)
    R = np.linalg.cholesky(M).T
    log_det = 2 * float(np.sum(np.log(np.diag(R))))
    covering = 0.5 * math.sqrt(float(np.sum(np.diag(R) ** 2)))
    return log_vol - 0.5 * log_det, covering


def tail_model(spec: GeneratingSeriesSpec, g_tuple: Sequence[SymplecticElement] | None,
               scaled: bool = True, M: np.ndarray | None = None) -> TailModel:
    space = spec.lattice.space
    d, e, r, m = space.d, space.e, spec.r, spec.weight_dim
    if g_tuple is None:
        g_tuple = [SymplecticElement.identity(r)] * d
    c = math.inf
    lam = 1.0
    log_pref = 0.0
    for j, g in enumerate(g_tuple, start=1):
        _, v, _ = iwasawa(g)
        ev = np.linalg.eigvalsh(v @ v.T)
        log_pref += (m / 2) * math.log(abs(np.linalg.det(v)))
        if j <= e:
            if scaled:
                c = min(c, ev[0])
                lam = max(lam, ev[-1])
            else:
                c = min(c, ev[0], 2 - ev[-1])
        else:
            c = min(c, ev[0])
    if not c > 0:
        raise DivergentSeries("the archimedean data gives no decay (decay constant <= 0)")
    K = math.factorial(r) ** (2 * e)
    if M is None:
        M = total_majorant(spec.lattice, spec.tau)
    log_ball, cov = _ball_constants(M)
    return TailModel(c, lam, r * e, K * math.exp(log_pref), M.shape[0], r, log_ball, cov)


# enumeration of tuples -----------------------------------------------------

def _tuples(spec: GeneratingSeriesSpec, M: np.ndarray, B: float):
    """Coordinate tuples (N, r, rank) with sum_k Q_maj <= B, in deterministic order."""
    try:
        enum = enumerate_majorant(M, B, spec.offset(), limit=spec.budget)
    except OverflowError as exc:
        raise BudgetExceeded(f"more than {spec.budget} lattice vectors below radius {B:.3g}") from exc
    Y, Q = enum.coords, enum.qmaj
    r = spec.r
    if r == 1:
        return Y[:, None, :], Q
    idx = [np.arange(len(Y))]
    tot = Q.copy()
    for _ in range(r - 1):
        new_idx, new_tot = [], []
        for p in range(len(tot)):
            room = B * (1 + 1e-10) - tot[p]
            sel = np.flatnonzero(Q <= room)
            new_idx.append(np.column_stack([np.repeat(np.array([[ix[p] for ix in idx]]), len(sel), 0), sel])
                           if len(sel) else np.zeros((0, len(idx) + 1), dtype=int))
            new_tot.append(tot[p] + Q[sel])
        stacked = np.concatenate(new_idx) if new_idx else np.zeros((0, len(idx) + 1), dtype=int)
        idx = [stacked[:, k] for k in range(stacked.shape[1])]
        tot = np.concatenate(new_tot) if new_tot else np.zeros(0)
        if len(tot) > spec.budget:
            raise BudgetExceeded(f"{len(tot)} tuples exceed the budget {spec.budget}")
    X = np.stack([Y[ix] for ix in idx], axis=1)
    return X, tot


def _exact_coords(spec: GeneratingSeriesSpec, X: np.ndarray):
    if spec.coset is None:
        return X
    c = np.array(spec.coset, dtype=object)
    return X.astype(object) + c


def _real_tuples(spec: GeneratingSeriesSpec, X: np.ndarray) -> np.ndarray:
    lat = spec.lattice
    Xf = X.astype(float) + (0.0 if spec.offset() is None else spec.offset())
    return np.array([Xf @ lat.basis_at(i).T for i in range(1, lat.space.e + 1)]).reshape(
        lat.space.e, len(X), spec.r, lat.space.dim)


def t_key(T) -> str:
    return ";".join(",".join(repr(c) for c in row) for row in T)


def _group_by_T(spec: GeneratingSeriesSpec, X: np.ndarray):
    keys, Ts, index = [], {}, []
    lat = spec.lattice
    Xe = _exact_coords(spec, X)
    for tup in Xe:
        T = exact_pairings(lat, tup)
        k = t_key(T)
        if k not in Ts:
            Ts[k] = T
            keys.append(k)
        index.append(k)
    return keys, Ts, index


def _omega_values(spec: GeneratingSeriesSpec, X: np.ndarray, scales=None) -> np.ndarray:
    """omega_2 for each tuple, flattened to shape (N, 4^{n e})."""
    e = spec.lattice.space.e
    if e == 0:
        return np.ones((len(X), 1))
    R = _real_tuples(spec, X)
    if scales is not None:
        R = np.stack([np.einsum("nrm,rs->nsm", R[i], scales[i]) for i in range(e)])
    return omega2_batch(R, spec.tau, spec.frames).reshape(len(X), -1)


@dataclass
class ThetaValue:
    value: np.ndarray     # flattened coefficient array (complex)
    n: int
    e: int
    radius: float
    tail_bound: float
    count: int

    def form_shape(self):
        return ((1 << (2 * self.n)),) * self.e

    def tensor(self) -> np.ndarray:
        return self.value.reshape(self.form_shape()) if self.e else self.value.reshape(())


def km_theta(spec: GeneratingSeriesSpec, g_tuple: Sequence[SymplecticElement],
             v_scale: str | None = "iwasawa", radius: float | None = None) -> ThetaValue:
    """sum_x phi_f(x) W_{T(x)}(g) omega_2(x v, tau), truncated with tail bound epsilon.

    v_scale="iwasawa" uses the v of g at each indefinite place; None means no scaling.
    """
    space = spec.lattice.space
    if len(g_tuple) != space.d:
        raise ValueError(f"need {space.d} symplectic elements")
    if any(g.r != spec.r for g in g_tuple):
        raise ValueError("symplectic genus must equal r")
    if v_scale not in ("iwasawa", None):
        raise ValueError("v_scale must be 'iwasawa' or None")
    scales = [iwasawa(g_tuple[i])[1] for i in range(space.e)] if v_scale else None
    M = total_majorant(spec.lattice, spec.tau)
    model = tail_model(spec, g_tuple, scaled=scales is not None, M=M)
    B = model.radius_for(spec.epsilon) if radius is None else radius
    if model.count(B) ** spec.r > spec.budget * 50:
        raise BudgetExceeded(f"radius {B:.3g} needs about {model.count(B):.3g} vectors")
    X, _ = _tuples(spec, M, B)
    keys, Ts, index = _group_by_T(spec, X)
    W = {k: whittaker_hilbert(Ts[k], g_tuple, spec.weight_dim) for k in keys}
    Om = _omega_values(spec, X, scales)
    w = np.array([W[k] for k in index])
    value = (w[:, None] * Om).sum(axis=0) if len(X) else np.zeros(Om.shape[1], dtype=complex)
    return ThetaValue(value, spec.n, space.e, B, model.tail(B), len(X))


# q-expansions --------------------------------------------------------------

@dataclass
class QExpansion:
    n: int
    e: int
    radius: float
    tail_bound: float
    T: dict = field(default_factory=dict)          # key -> exact T
    coefficients: dict = field(default_factory=dict)  # key -> flattened array
    complete: bool = False

    def keys(self):
        return list(self.coefficients)

    def __getitem__(self, key):
        return self.coefficients[key]

    def reassemble(self, g_tuple: Sequence[SymplecticElement], weight_dim: int) -> np.ndarray:
        total = None
        for k, coeff in self.coefficients.items():
            term = whittaker_hilbert(self.T[k], g_tuple, weight_dim) * coeff
            total = term if total is None else total + term
        return total

    def write_csv(self, target) -> None:
        """Write to a path or an open text stream."""
        if hasattr(target, "write"):
            self._write_rows(csv.writer(target))
        else:
            with open(target, "w", newline="") as fh:
                self._write_rows(csv.writer(fh))

    def _write_rows(self, w) -> None:
        from .exterior import key_of
        w.writerow(["T_key", "component", "re", "im"])
        for k, coeff in self.coefficients.items():
            arr = np.asarray(coeff)
            if self.e == 0:
                c = complex(arr.ravel()[0])
                w.writerow([k, "", repr(c.real), repr(c.imag)])
                continue
            tensor = arr.reshape(((1 << (2 * self.n)),) * self.e)
            for idx in zip(*np.nonzero(tensor)):
                c = complex(tensor[idx])
                comp = ";".join(key_of(self.n, int(i)) for i in idx)
                w.writerow([k, comp, repr(c.real), repr(c.imag)])
        w.writerow(["#radius", repr(float(self.radius)), "tail_bound", repr(float(self.tail_bound))])


def q_expansion(spec: GeneratingSeriesSpec, radius: float | None = None) -> QExpansion:
    """Coefficients sum_{T(x) = T, S(x) <= radius} phi_f(x) omega_2(x, tau) for psd T.

    Without a radius, it is chosen from the tail bound at g = identity.
    """
    space = spec.lattice.space
    M = total_majorant(spec.lattice, spec.tau)
    model = tail_model(spec, None, scaled=False, M=M)
    B = model.radius_for(spec.epsilon) if radius is None else radius
    X, _ = _tuples(spec, M, B)
    keys, Ts, index = _group_by_T(spec, X)
    Om = _omega_values(spec, X)
    qexp = QExpansion(spec.n, space.e, B, model.tail(B), complete=(space.e == 0))
    idx = np.array(index, dtype=object)
    for k in sorted(keys, key=lambda s: _sort_key(Ts[s])):
        T = Ts[k]
        if not _totally_psd(T, space.d):
            continue
        qexp.T[k] = T
        qexp.coefficients[k] = Om[idx == k].sum(axis=0)
    return qexp


def _sort_key(T):
    return tuple(float(sum(c.embeddings())) for row in T for c in row)


def _totally_psd(T, d: int) -> bool:
    return all(is_psd(embed_matrix(T, j)) for j in range(1, d + 1))


def coefficient_of_T(spec: GeneratingSeriesSpec, T, bound: float | None = None) -> tuple[np.ndarray, bool]:
    """The T-th coefficient via fiber enumeration; returns (coefficient, complete)."""
    F = spec.lattice.field
    T = [[parse_element(F, c) for c in row] for row in T]
    space = spec.lattice.space
    width = (1 << (2 * spec.n)) ** space.e
    if not _totally_psd(T, space.d):
        return np.zeros(width), True
    if spec.coset is not None:
        raise NotImplementedError("fiber enumeration is implemented for the trivial coset")
    fibers, complete = fibers_with_T(spec.lattice, T, spec.tau, bound)
    if not fibers:
        return np.zeros(width), complete
    X = np.array(fibers)
    if bound is not None and space.e:
        M = total_majorant(spec.lattice, spec.tau)
        S = np.einsum("nrk,kl,nrl->n", X.astype(float), M, X.astype(float))
        X = X[S <= bound * (1 + 1e-10)]
    return _omega_values(spec, X).sum(axis=0), complete


# scalar theta series -------------------------------------------------------

def _place_taus(tau_prime, d: int) -> list[complex]:
    if np.isscalar(tau_prime):
        return [complex(tau_prime)] * d
    taus = [complex(t) for t in tau_prime]
    if len(taus) != d:
        raise ValueError(f"need {d} values of tau'")
    return taus


def theta_coefficients(lattice: OLattice, max_trace: float) -> dict:
    """Counts of vectors by exact q-value, for a totally definite lattice, up to tr q <= max_trace."""
    from . import _backend
    space = lattice.space
    if space.e != 0:
        raise ValueError("theta series need a totally definite lattice")
    M = total_majorant(lattice)
    if space.d == 1:
        A, _, den = lattice.exact_gram_parts()
        R = np.ascontiguousarray(np.linalg.cholesky(M).T)
        hist = _backend.histogram_ball(R, max_trace * (1 + 1e-9), np.ascontiguousarray(A))
        F = lattice.field
        out = {}
        for key in sorted(hist):
            q = Fraction(key, 2 * den)
            if q <= max_trace * (1 + 1e-10):
                out[F(q)] = hist[key]
        return out
    from .lattice import exact_q_values
    enum = enumerate_majorant(M, max_trace)
    out: dict = {}
    for q in exact_q_values(lattice, enum.coords):
        out[q] = out.get(q, 0) + 1
    return dict(sorted(out.items(), key=lambda kv: sum(kv[0].embeddings())))


def theta_scalar(lattice: OLattice, tau_prime, epsilon: float = 1e-12, budget: int = 50_000_000,
                 return_info: bool = False):
    """sum_x exp(2 pi i sum_j sigma_j(q(x)) tau'_j) with tail <= epsilon."""
    space = lattice.space
    d = space.d
    taus = _place_taus(tau_prime, d)
    c = min(t.imag for t in taus)
    if c < 0.1:
        raise ValueError("Im tau' must be at least 0.1 for the truncation bound")
    M = total_majorant(lattice)
    log_ball, cov = _ball_constants(M)
    model = TailModel(c, 1.0, 0, 1.0, M.shape[0], 1, log_ball, cov)
    B = model.radius_for(epsilon)
    if model.count(B) > budget:
        raise BudgetExceeded(f"radius {B:.3g} needs about {model.count(B):.3g} vectors")
    coeffs = theta_coefficients(lattice, B)
    total = 0j
    for q, cnt in coeffs.items():
        total += cnt * np.exp(2j * np.pi * sum(e * t for e, t in zip(q.embeddings(), taus)))
    if return_info:
        return total, {"radius": B, "tail_bound": model.tail(B), "terms": sum(coeffs.values())}
    return total


# modularity checks ---------------------------------------------------------

def translate(g_tuple: Sequence[SymplecticElement], mu: FieldElement | int | Fraction) -> list[SymplecticElement]:
    """g -> n(sigma_j(mu)) g at each place (tau' -> tau' + mu)."""
    out = []
    for j, g in enumerate(g_tuple, start=1):
        s = mu.embed(j) if isinstance(mu, FieldElement) else float(mu)
        out.append(unipotent(s * np.eye(g.r)) @ g)
    return out


def modularity_check_translation(spec: GeneratingSeriesSpec, mu, g_tuple: Sequence[SymplecticElement]) -> float:
    """Max coefficient deviation between the theta function at g and at n(mu) g."""
    a = km_theta(spec, g_tuple)
    b = km_theta(spec, translate(g_tuple, mu), radius=a.radius)
    return float(np.max(np.abs(a.value - b.value)))


def inversion_oracle(lattice: OLattice, tau_prime: complex, epsilon: float = 1e-14) -> tuple[complex, complex]:
    """(theta_L(-1/tau'), (tau'/i)^{k/2} / sqrt(det G) * theta_{L#}(tau')) over Q."""
    if lattice.space.d != 1:
        raise ValueError("the inversion oracle is implemented over Q")
    tau_prime = complex(tau_prime)
    k = lattice.rank
    G = np.array([[float(v) for v in row] for row in lattice.trace_gram()])
    lhs = theta_scalar(lattice, -1 / tau_prime, epsilon)
    dual = dual_lattice(lattice)
    rhs = (tau_prime / 1j) ** (k / 2) / math.sqrt(abs(np.linalg.det(G))) * theta_scalar(dual, tau_prime, epsilon)
    return lhs, rhs


def modularity_check_inversion(lattice: OLattice, points: Sequence[complex], epsilon: float = 1e-14) -> float:
    worst = 0.0
    for t in points:
        lhs, rhs = inversion_oracle(lattice, t, epsilon)
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def weight_factor(k0_tuple: Sequence[SymplecticElement], weight_dim: int) -> complex:
    from .whittaker import det_half
    out = 1.0 + 0j
    for k in k0_tuple:
        out *= det_half(k) ** weight_dim
    return out


__all__ = [
    "BudgetExceeded", "DivergentSeries", "GeneratingSeriesSpec", "TailModel", "tail_model", "ThetaValue",
    "km_theta", "QExpansion", "q_expansion", "coefficient_of_T", "theta_coefficients", "theta_scalar",
    "translate", "modularity_check_translation", "inversion_oracle", "modularity_check_inversion",
    "weight_factor", "t_key",
]
