"""Green functions, star products and convergence diagnostics.

f(t) = -Ei(-t) = E_1(t) = int_1^inf e^{-tu}/u du, so f(t) = -log t - gamma + O(t).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exterior import ExteriorFormValue, PlacesFormValue
from .kmform import KMFrame, evaluate_at, omega2_batch
from .lattice import (OLattice, count_levels, counting_exponent, enumerate_majorant, exact_q_values,
                      total_majorant)
from .perioddomain import PeriodPoint, chart, majorant_R

EULER_GAMMA = 0.57721566490153286
TWO_PI = 2.0 * math.pi


class SingularLocusError(ValueError):
    pass


# exponential integral ------------------------------------------------------

def _e1_series(t: float) -> float:
    total, term, k = 0.0, 1.0, 1
    while True:
        term *= -t / k
        add = term / k
        total += add
        if abs(add) < 1e-17 * abs(total) or k > 200:
            break
        k += 1
    return -math.log(t) - EULER_GAMMA - total


def _e1_continued_fraction(t: float) -> float:
    # modified Lentz on E1(t) = e^{-t} / (t + 1 - 1/(t + 3 - 4/(t + 5 - ...)))
    tiny = 1e-300
    b = t + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-t)


def exp_integral_f(t: float) -> float:
    """f(t) = -Ei(-t) for t > 0."""
    t = float(t)
    if not t > 0:
        raise ValueError("f(t) needs t > 0")
    return _e1_series(t) if t <= 1.0 else _e1_continued_fraction(t)


exp_integral_f_vec = np.vectorize(exp_integral_f, otypes=[float])


def green_eta0(x, tau: PeriodPoint) -> float:
    R = majorant_R(x, tau)
    if R <= 0.0:
        raise SingularLocusError("tau lies on the singular locus of x (R = 0)")
    return exp_integral_f(TWO_PI * R)


# star products -------------------------------------------------------------

PHI, F_, DELTA = "phi", "f", "delta"


@dataclass(frozen=True)
class StarWord:
    symbols: tuple  # of (kind, index)

    def __str__(self):
        return " ".join(f"{k}{j}" for k, j in self.symbols)

    @property
    def green_index(self) -> int:
        (j,) = [j for k, j in self.symbols if k == F_]
        return j


def star_expansion(N: int) -> list[StarWord]:
    """Closed form: word j is phi_1..phi_{j-1} f_j delta_{j+1}..delta_N."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return [StarWord(tuple([(PHI, i) for i in range(1, j)] + [(F_, j)] + [(DELTA, i) for i in range(j + 1, N + 1)]))
            for j in range(1, N + 1)]


def star_product_words(left: list[StarWord], left_idx: Sequence[int],
                       right: list[StarWord], right_idx: Sequence[int]) -> list[StarWord]:
    """[g_Y] * [g_Z] = [g_Y] ^ delta_Z + [omega_Y] ^ [g_Z] on expanded words."""
    deltas = tuple((DELTA, i) for i in right_idx)
    phis = tuple((PHI, i) for i in left_idx)
    return [StarWord(w.symbols + deltas) for w in left] + [StarWord(phis + w.symbols) for w in right]


def star_expansion_recursive(N: int) -> list[StarWord]:
    """f_1 * (f_2 * (... * f_N)) by the binary rule."""
    if N < 1:
        raise ValueError("N must be at least 1")
    words = [StarWord(((F_, N),))]
    idx = [N]
    for j in range(N - 1, 0, -1):
        words = star_product_words([StarWord(((F_, j),))], [j], words, idx)
        idx = [j] + idx
    return words


# eta_2 ---------------------------------------------------------------------

@dataclass
class DeltaMarker:
    place: int
    index: int
    R: float
    active: bool


@dataclass
class Eta2Term:
    word: StarWord
    value: PlacesFormValue | None
    deltas: list
    singular: bool = False


@dataclass
class Eta2Result:
    terms: list
    smooth: PlacesFormValue | None

    @property
    def has_active_delta(self) -> bool:
        return any(d.active for t in self.terms for d in t.deltas)


def _factors(k: int, e: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, e + 1) for j in range(1, k + 1)]


def eta2_value(xs, tau, frames: Sequence[KMFrame], strict: bool = True, r_tol: float = 1e-12) -> Eta2Result:
    """Star product over places i and vectors j of the Green functions f(2 pi R(x_j, tau_i)).

    The factors are ordered place-major.  Each term of the N-term expansion is
    the wedge of the phi's before it, times its f-value, with the later
    factors left as delta markers.  A delta marker is active when tau lies on
    its locus.  strict=True rejects tau on the locus of an f-factor.
    """
    pts = list(tau)
    e, k = len(pts), len(xs)
    if len(frames) != e:
        raise ValueError("one frame per indefinite place is required")
    facs = _factors(k, e)
    N = len(facs)
    n = frames[0].n
    Rs = {}
    phis = {}
    for (i, j) in facs:
        t = pts[i - 1]
        Rs[(i, j)] = majorant_R(xs[j - 1], t)
        phis[(i, j)] = evaluate_at(xs[j - 1], t, frames[i - 1])
    terms = []
    for word in star_expansion(N):
        g = word.green_index
        i_g, j_g = facs[g - 1]
        R = Rs[(i_g, j_g)]
        deltas = []
        for kind, s in word.symbols:
            if kind == DELTA:
                i, j = facs[s - 1]
                deltas.append(DeltaMarker(i, j, Rs[(i, j)], Rs[(i, j)] <= r_tol))
        if R <= r_tol:
            if strict:
                raise SingularLocusError(f"tau_{i_g} lies on the locus of x_{j_g}")
            terms.append(Eta2Term(word, None, deltas, singular=True))
            continue
        per_place = [ExteriorFormValue.scalar(n) for _ in range(e)]
        for kind, s in word.symbols:
            if kind == PHI:
                i, j = facs[s - 1]
                per_place[i - 1] = per_place[i - 1].wedge(phis[(i, j)])
        val = PlacesFormValue.from_places(per_place) * exp_integral_f(TWO_PI * R)
        terms.append(Eta2Term(word, val, deltas))
    smooth_terms = [t for t in terms if not t.deltas]
    smooth = smooth_terms[0].value if smooth_terms else None
    return Eta2Result(terms, smooth)


# convergence reports -------------------------------------------------------

@dataclass
class ConvergenceReport:
    radii: list
    partial_sums: list          # flattened coefficient arrays
    increments: list            # shell contributions (computed directly, not by differencing)
    tail_estimates: list
    terms: list                 # number of orbit points per shell
    skipped: int = 0
    decay_exponent: float | None = None
    notes: dict = field(default_factory=dict)

    def component(self) -> int:
        last = np.abs(np.asarray(self.partial_sums[-1]))
        return int(np.argmax(last)) if last.size else 0

    def scalar_sums(self) -> list[float]:
        c = self.component()
        return [float(np.asarray(s).ravel()[c]) for s in self.partial_sums]

    def scalar_increments(self) -> list[float]:
        c = self.component()
        return [float(np.asarray(s).ravel()[c]) for s in self.increments]

    def is_cauchy(self, rtol: float = 1e-10) -> bool:
        """Partial sums from the middle radius on agree within rtol (relative to the last sum)."""
        sums = np.array(self.scalar_sums())
        tail = sums[len(sums) // 2:]
        scale = max(abs(sums[-1]), 1e-300)
        return bool(np.max(np.abs(tail - tail[-1])) <= rtol * scale)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["radius", "partial_sum", "tail_estimate"])
            for r, s, t in zip(self.radii, self.scalar_sums(), self.tail_estimates):
                w.writerow([repr(float(r)), repr(s), repr(float(t))])


def tail_model(z, n: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.exp(-TWO_PI * z) * z ** ((n + 2) / 2)


def _orbit(lattice: OLattice, xs, tau, radius: float):
    """Integer coordinates of lattice vectors with the q-values of x and majorant <= radius."""
    M = total_majorant(lattice, tau)
    enum = enumerate_majorant(M, radius)
    qs = exact_q_values(lattice, enum.coords)
    targets = [lattice.space.quad_value(x) for x in xs]
    pools = []
    for t in targets:
        sel = [i for i, q in enumerate(qs) if q == t]
        pools.append((enum.coords[sel], enum.qmaj[sel]))
    return pools


def _orbit_tuples(lattice: OLattice, xs, tau, radius: float):
    """Tuples (as (N, k, rank) coordinates) with the same q-values and total majorant <= radius."""
    pools = _orbit(lattice, xs, tau, radius)
    k = len(xs)
    if k == 1:
        Y, Q = pools[0]
        return Y[:, None, :], Q
    grids = np.meshgrid(*[np.arange(len(p[0])) for p in pools], indexing="ij")
    idx = [g.ravel() for g in grids]
    Q = sum(pools[j][1][idx[j]] for j in range(k))
    keep = Q <= radius * (1 + 1e-10)
    Y = np.stack([pools[j][0][idx[j][keep]] for j in range(k)], axis=1)
    return Y, Q[keep]


def _real_tuples(lattice: OLattice, Y: np.ndarray) -> np.ndarray:
    """Embed coordinate tuples at each indefinite place: shape (e, N, k, m)."""
    out = []
    for i in range(1, lattice.space.e + 1):
        B = lattice.basis_at(i)
        out.append(Y @ B.T)
    return np.array(out)


def _shell_edges(radii: Sequence[float]) -> list[tuple[float, float]]:
    radii = sorted(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    return list(zip([-math.inf] + radii[:-1], radii))


def eta3_partial_sums(xs, tau, frames: Sequence[KMFrame], lattice: OLattice, radii: Sequence[float]) -> ConvergenceReport:
    """Partial sums of the smooth star-product term over the orbit surrogate.

    The surrogate is the set of lattice tuples with the same q-values as x.
    Shell contributions are accumulated directly so tiny increments keep
    their relative accuracy.  Tail estimates use the model
    e^{-2 pi z} z^{(n+2)/2} at the shell's R-level z = radius - tr q(x).
    """
    pts = list(tau)
    n = lattice.space.n
    Y, Q = _orbit_tuples(lattice, xs, tau, max(radii))
    base = float(sum(sum(lattice.space.quad_value(x).embeddings()) for x in xs))
    values = []
    skipped = 0
    for y in Y:
        vecs = [lattice.vector([int(t) for t in row]) for row in y]
        try:
            res = eta2_value(vecs, pts, frames)
            values.append(res.smooth.tensor.ravel())
        except SingularLocusError:
            skipped += 1
            values.append(None)
    width = max((len(v) for v in values if v is not None), default=1)
    V = np.array([v if v is not None else np.zeros(width) for v in values]).reshape(len(values), width)
    return _report(V, Q, radii, base, n, skipped, len(xs))


def _report(V, Q, radii, base, n, skipped, k) -> ConvergenceReport:
    sums, incs, tails, counts = [], [], [], []
    acc = np.zeros(V.shape[1] if V.ndim == 2 else 1)
    for lo, hi in _shell_edges(radii):
        sel = (Q > lo * (1 + 1e-10)) & (Q <= hi * (1 + 1e-10)) if lo > -math.inf else Q <= hi * (1 + 1e-10)
        inc = V[sel].sum(axis=0) if sel.any() else np.zeros_like(acc)
        acc = acc + inc
        sums.append(acc.copy())
        incs.append(inc)
        counts.append(int(sel.sum()))
        z = max(hi - base, 1e-12)
        tails.append(float(tail_model(z, n)))
    rep = ConvergenceReport(list(sorted(radii)), sums, incs, tails, counts, skipped)
    rep.notes["R_level_offset"] = base
    rep.notes["tuple_length"] = k
    rep.notes["n"] = n
    return rep


def omega3_partial(xs, tau, frames: Sequence[KMFrame], lattice: OLattice,
                   radii: Sequence[float]) -> tuple[PlacesFormValue, ConvergenceReport]:
    """Partial sums of omega_2 over the orbit surrogate.  x = 0 has the single term omega_2(0)."""
    pts = list(tau)
    n = lattice.space.n
    k = len(xs)
    base = float(sum(sum(lattice.space.quad_value(x).embeddings()) for x in xs))
    if all(not any(x) for x in xs):
        Y = np.zeros((1, k, lattice.rank), dtype=np.int64)
        Q = np.zeros(1)
    else:
        Y, Q = _orbit_tuples(lattice, xs, tau, max(radii))
    X = _real_tuples(lattice, Y)
    V = omega2_batch(X, pts, frames).reshape(len(Y), -1) if len(Y) else np.zeros((0, (1 << (2 * n)) ** len(pts)))
    rep = _report(V, Q, radii, base, n, 0, k)
    shape = ((1 << (2 * n)),) * len(pts)
    return PlacesFormValue(n, rep.partial_sums[-1].reshape(shape)), rep


def fit_decay(report: ConvergenceReport, min_z: float = 10 / TWO_PI) -> dict:
    """Compare shell increments with the tail model beyond 2 pi z >= 10.

    The shell (r_{k-1}, r_k] lies in the tail beyond r_{k-1}, so its increment
    is compared with the model at the lower level z = r_{k-1} - tr q(x).
    Returns the worst ratio increment/model, the regression slope of
    log|increment| against z, and the shells used.
    """
    z = np.array(report.radii[:-1]) - report.notes["R_level_offset"]
    inc = np.abs(np.array(report.scalar_increments()[1:]))
    sel = (z >= min_z) & (inc > 0)
    n = report.notes["n"]
    out = {"z": z[sel].tolist(), "increments": inc[sel].tolist()}
    if sel.sum() >= 2:
        out["slope"] = float(np.polyfit(z[sel], np.log(inc[sel]), 1)[0])
    out["ratio_max"] = float(np.max(inc[sel] / tail_model(z[sel], n))) if sel.any() else 0.0
    return out


# counting ------------------------------------------------------------------

def count_bounded_R(lattice: OLattice, tau, N_list: Sequence[float], q_value: float = 0.0,
                    level_set: bool = False) -> dict:
    """Counts of lattice vectors in {q_tau <= q_value + N} for each N.

    Since q_tau = q + R, this ball contains every lattice vector with
    q = q_value and R <= N.  level_set=True also reports that exact subset.
    """
    M = total_majorant(lattice, tau)
    bounds = [q_value + N for N in N_list]
    counts = count_levels(M, bounds)
    out = {"N": list(N_list), "counts": counts}
    pos = [(N, c) for N, c in zip(N_list, counts) if N > 0]
    if len(pos) >= 2:
        out["exponent"] = counting_exponent([p[0] for p in pos], [p[1] for p in pos])
    if level_set:
        enum = enumerate_majorant(M, max(bounds))
        qf = np.einsum("ij,jk,ik->i", enum.coords.astype(float), _q_matrix(lattice), enum.coords.astype(float))
        on = np.abs(qf - q_value) < 1e-9
        R = enum.qmaj - qf
        out["level_counts"] = [int(np.sum(on & (R <= N + 1e-9))) for N in N_list]
    return out


def _q_matrix(lattice: OLattice) -> np.ndarray:
    k = lattice.rank
    M = np.zeros((k, k))
    for i in range(1, lattice.space.d + 1):
        B = lattice.basis_at(i)
        M += 0.5 * B.T @ lattice.space.embedded_gram(i) @ B
    return M


# dd^c check ----------------------------------------------------------------

def _green_on_chart(x, frame: KMFrame, w: complex, branch: int) -> float:
    return green_eta0(x, chart(frame, np.array([w]), branch))


def ddc_coefficient(x, frame: KMFrame, w: complex, branch: int = 1) -> float:
    """du^dv coefficient of the chart pullback of phi1(x) at w."""
    from .kmform import pullback_phi1
    P = pullback_phi1(x, frame, np.array([w]), branch)
    return float(P[0, 1])


def ddc_check(x, frame: KMFrame, grid: Sequence[complex], h: float, branch: int = 1,
              min_R: float = 0.5) -> float:
    """Max relative deviation between Laplacian(G)/(4 pi) and the pulled-back KM form.

    G(w) = f(2 pi R(x, chart(w))); dd^c G = (1/4 pi) Lap(G) du^dv in w = u + iv.
    """
    if frame.n != 1:
        raise ValueError("ddc_check works on a one-dimensional chart (n = 1)")
    worst = 0.0
    for w in grid:
        tau = chart(frame, np.array([w]), branch)
        if majorant_R(x, tau) < min_R:
            raise SingularLocusError(f"grid point {w} is too close to the singular locus")
        g0 = _green_on_chart(x, frame, w, branch)
        lap = (_green_on_chart(x, frame, w + h, branch) + _green_on_chart(x, frame, w - h, branch)
               + _green_on_chart(x, frame, w + 1j * h, branch) + _green_on_chart(x, frame, w - 1j * h, branch)
               - 4 * g0) / (h * h)
        lhs = lap / (4 * math.pi)
        rhs = ddc_coefficient(x, frame, w, branch)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return worst

