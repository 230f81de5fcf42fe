"""Kudla-Millson forms evaluated in an adapted frame.

phi1(x) = exp(-2 pi R) * ( sum_{i,j<=n} 2 x_i x_j w_{1,i}^w_{2,j} - (1/2pi) sum_i w_{1,i}^w_{2,i} )

with x_1..x_{n+2} the coordinates of x in a frame whose Gram matrix is
diag(1,...,1,-1,-1) and R = x_{n+1}^2 + x_{n+2}^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exterior import ExteriorFormValue, PlacesFormValue, wedge_of_11
from .numberfield import FieldElement
from .perioddomain import (PeriodPoint, PlaneError, adapted_basis, chart_tangent, chart_vector,
                          make_period_point)
from .quadspace import QuadraticSpace, embed_vector

TWO_PI = 2.0 * np.pi

# Normalizations of phi-circ: "literal" multiplies phi1 by exp(-2 pi q_z0(x));
# "standard" multiplies by exp(-2 pi q(x)), which makes the total Gaussian
# exp(-pi <x,x>_z0).
LITERAL = "literal"
STANDARD = "standard"
CIRC_NORMALIZATION = LITERAL


@dataclass(frozen=True, eq=False)
class KMFrame:
    tau: PeriodPoint
    basis: np.ndarray

    @classmethod
    def at(cls, tau: PeriodPoint, lead: Sequence[np.ndarray] = ()) -> "KMFrame":
        return cls(tau, adapted_basis(tau, lead))

    @property
    def place(self) -> int:
        return self.tau.place

    @property
    def space(self) -> QuadraticSpace:
        return self.tau.space

    @property
    def n(self) -> int:
        return self.basis.shape[1] - 2

    def coordinates(self, x) -> np.ndarray:
        """Coordinates of real vectors (last axis) in the adapted basis."""
        x = np.asarray(x, dtype=float)
        return np.linalg.solve(self.basis, x.T).T

    def transported(self, tau: PeriodPoint) -> "KMFrame":
        """Frame at tau obtained by completing tau with this frame's positive directions."""
        if tau.place != self.place:
            raise ValueError("place mismatch")
        return KMFrame.at(tau, [self.basis[:, k] for k in range(self.n)])


def _real_vectors(xs, place: int) -> np.ndarray:
    rows = []
    for x in xs:
        if len(x) and isinstance(x[0], FieldElement):
            rows.append(embed_vector(x, place))
        else:
            rows.append(np.asarray(x, dtype=float))
    return np.array(rows, dtype=float)


def phi1_matrix(xc: np.ndarray, n: int) -> np.ndarray:
    """Coefficient matrices C[i,j] on w_{1,i}^w_{2,j}; xc has shape (..., n+2)."""
    xc = np.asarray(xc, dtype=float)
    R = xc[..., n] ** 2 + xc[..., n + 1] ** 2
    xp = xc[..., :n]
    C = 2.0 * xp[..., :, None] * xp[..., None, :] - np.eye(n) / TWO_PI
    return np.exp(-TWO_PI * R)[..., None, None] * C


def km_phi1(xc, n: int) -> ExteriorFormValue:
    C = phi1_matrix(np.asarray(xc)[None, :], n)
    return ExteriorFormValue(n, wedge_of_11([C], n)[0])


def km_phi_m(xcs, n: int) -> ExteriorFormValue:
    xcs = np.atleast_2d(np.asarray(xcs, dtype=float))
    mats = [phi1_matrix(xcs[k][None, :], n) for k in range(len(xcs))]
    return ExteriorFormValue(n, wedge_of_11(mats, n)[0])


def q_at_basepoint(xc: np.ndarray, n: int) -> np.ndarray:
    """q_z0(x) = q + R = (|x_+|^2 + |x_-|^2)/2 in frame coordinates."""
    return 0.5 * np.sum(np.asarray(xc) ** 2, axis=-1)


def q_frame(xc: np.ndarray, n: int) -> np.ndarray:
    xc = np.asarray(xc)
    return 0.5 * (np.sum(xc[..., :n] ** 2, axis=-1) - np.sum(xc[..., n:] ** 2, axis=-1))


def circ_factor(xcs, n: int, normalization: str | None = None) -> float:
    return float(np.prod(circ_factor_grid(np.atleast_2d(xcs), n, normalization)))


def circ_factor_grid(xc, n: int, normalization: str | None = None) -> np.ndarray:
    """circ_factor for each single vector in an array of frame coordinates."""
    norm = normalization or CIRC_NORMALIZATION
    if norm == LITERAL:
        return np.exp(-TWO_PI * q_at_basepoint(xc, n))
    if norm == STANDARD:
        return np.exp(-TWO_PI * q_frame(xc, n))
    raise ValueError(f"unknown normalization {norm!r}")


def km_phi_circ(xcs, n: int, normalization: str | None = None) -> ExteriorFormValue:
    return km_phi_m(xcs, n) * circ_factor(xcs, n, normalization)


def km_zero_form(r: int, n: int) -> ExteriorFormValue:
    """(-1)^r phi^(r)(0) = (1/2pi)^r (sum_s w_{1,s}^w_{2,s})^r."""
    if r < 1:
        raise ValueError("r must be positive")
    base = km_phi1(np.zeros(n + 2), n)
    out = base
    for _ in range(r - 1):
        out = out.wedge(base)
    return out * (-1) ** r


def evaluate_at(x, tau: PeriodPoint, frame: KMFrame) -> ExteriorFormValue:
    return evaluate_tuple_at([x], tau, frame)


def evaluate_tuple_at(xs, tau: PeriodPoint, frame: KMFrame) -> ExteriorFormValue:
    """Wedge of phi1(x_j) at tau, in the frame transported from `frame`."""
    local = frame.transported(tau)
    X = _real_vectors(xs, tau.place)
    return km_phi_m(local.coordinates(X), frame.n)


def omega2(xs, tau, frames: Sequence[KMFrame], scale: Sequence[np.ndarray] | None = None) -> PlacesFormValue:
    """Product over indefinite places of the km wedge of (v_i x) at tau_i.

    The all-zero tuple gets the signed zero form (-1)^k phi^(k)(0) at each place.
    """
    pts = list(tau)
    if len(frames) != len(pts):
        raise ValueError("one frame per indefinite place is required")
    forms = []
    for i, (t, fr) in enumerate(zip(pts, frames)):
        X = _real_vectors(xs, t.place)
        if scale is not None:
            X = np.asarray(scale[i], dtype=float) @ X
        if not np.any(X):
            forms.append(km_zero_form(len(xs), fr.n))
        else:
            local = fr.transported(t)
            forms.append(km_phi_m(local.coordinates(X), fr.n))
    return PlacesFormValue.from_places(forms)


def omega2_batch(X: np.ndarray, tau, frames: Sequence[KMFrame]) -> np.ndarray:
    """omega2 for many tuples at once.

    X has shape (e, N, r, m): real vectors per place.  Returns the dense
    tensor of shape (N, 4^n, ..., 4^n) with one axis per place.
    """
    pts = list(tau)
    e = len(pts)
    N, r = X.shape[1], X.shape[2]
    n = frames[0].n
    out = None
    for i, (t, fr) in enumerate(zip(pts, frames)):
        local = fr.transported(t)
        Xi = X[i]
        xc = np.linalg.solve(local.basis, Xi.reshape(-1, Xi.shape[-1]).T).T.reshape(N, r, -1)
        mats = [phi1_matrix(xc[:, k, :], n) for k in range(r)]
        vals = wedge_of_11(mats, n)
        zero = ~np.any(Xi.reshape(N, -1), axis=1)
        if zero.any():
            vals[zero] = km_zero_form(r, n).coeffs
        if out is None:
            out = vals
        else:
            out = (out[..., None] * vals.reshape((N,) + (1,) * i + (-1,)))
    if out is None:
        return np.ones(N)
    return out


def restriction_splitting_check(U, x_dd, tau_U: PeriodPoint, normalization: str | None = None) -> float:
    """Max coefficient deviation between phi-circ(x'') at tau_U restricted to the
    complement of U and gaussian_standard(x'') times the zero form of U-perp.

    U and x_dd are F-rational; the right side is evaluated in the exact
    complement space with its own frame.
    """
    from .whittaker import gaussian_standard

    space = tau_U.space
    place = tau_U.place
    G = tau_U.gram
    Ur = _real_vectors(U, place) if len(U) else np.zeros((0, space.dim))
    for u in Ur:
        size = np.linalg.norm(u) * np.linalg.norm(G)
        if abs(u @ G @ tau_U.alpha) > 1e-10 * size * np.linalg.norm(tau_U.alpha) or \
                abs(u @ G @ tau_U.beta) > 1e-10 * size * np.linalg.norm(tau_U.beta):
            raise PlaneError("tau_U is not orthogonal to U")
    m = len(x_dd)
    if m == 0:
        return 0.0
    n = space.n
    k = len(space.canonical_subtuple(list(U))[1]) if len(U) else 0
    frame_U = KMFrame.at(tau_U, list(Ur))
    Xdd = _real_vectors(x_dd, place)
    lhs = km_phi_circ(frame_U.coordinates(Xdd), n, normalization).restrict(range(k + 1, n + 1))

    comp = space.orthogonal_complement(list(U))
    sub = space.restricted(comp)
    C = np.column_stack([embed_vector(c, place) for c in comp])
    coords_a = np.linalg.lstsq(C, tau_U.alpha, rcond=None)[0]
    coords_b = np.linalg.lstsq(C, tau_U.beta, rcond=None)[0]
    tau_c = make_period_point(sub, place, coords_a, coords_b)
    frame_c = KMFrame.at(tau_c)
    # x'' lies in U, so its component in the complement is zero
    proj = np.zeros((m, sub.dim))
    inner = km_phi_m(frame_c.coordinates(proj), n - k)

    rhs = ExteriorFormValue(n)
    for mask in np.nonzero(inner.coeffs)[0]:
        s1 = [s + 1 for s in range(n - k) if mask >> s & 1]
        s2 = [s + 1 for s in range(n - k) if mask >> (n - k + s) & 1]
        gens = [(1, k + s) for s in s1] + [(2, k + s) for s in s2]
        rhs = rhs + ExteriorFormValue.monomial(n, gens, inner.coeffs[mask])
    rhs = rhs * gaussian_standard(Xdd, G)
    return float(np.max(np.abs(lhs.coeffs - rhs.coeffs)))


# chart pullbacks -----------------------------------------------------------

def chart_coframe(frame: KMFrame, w, branch: int = 1):
    """Values of w_{1,k}, w_{2,k} on the real chart directions (u_1, v_1, ..., u_n, v_n).

    Returns (local frame at chart(w), W1, W2) with W1[k, a] = w_{1,k}(d/dt_a).
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    n = frame.n
    v = chart_vector(frame, w, branch)
    tau = make_period_point(frame.space, frame.place, v.real, v.imag)
    local = frame.transported(tau)
    G = tau.gram
    T = chart_tangent(frame, w, branch)
    dirs = []
    for k in range(n):
        dirs.append(T[:, k])
        dirs.append(1j * T[:, k])
    D = np.column_stack(dirs)
    alpha, beta = v.real, v.imag
    Fp = local.basis[:, :n]
    W1 = Fp.T @ G @ D.real / np.sqrt(-(alpha @ G @ alpha))
    W2 = Fp.T @ G @ D.imag / np.sqrt(-(beta @ G @ beta))
    return local, W1, W2


def pullback_phi1(x, frame: KMFrame, w, branch: int = 1) -> np.ndarray:
    """Antisymmetric matrix P[a, b] = phi1(x)(d/dt_a, d/dt_b) in chart coordinates."""
    local, W1, W2 = chart_coframe(frame, w, branch)
    X = _real_vectors([x], frame.place)[0]
    C = phi1_matrix(local.coordinates(X)[None, :], frame.n)[0]
    A = W1.T @ C @ W2
    return A - A.T


def closedness_defect(x, frame: KMFrame, w, h: float = 1e-3, branch: int = 1) -> float:
    """Max |d phi1| over coordinate triples by central differences, relative to max |phi1|."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    n = frame.n
    steps = []
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = 1.0
        steps.append(e)
        steps.append(1j * e)

    def deriv(a):
        return (pullback_phi1(x, frame, w + h * steps[a], branch)
                - pullback_phi1(x, frame, w - h * steps[a], branch)) / (2 * h)

    dP = [deriv(a) for a in range(2 * n)]
    P0 = pullback_phi1(x, frame, w, branch)
    worst = 0.0
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            for c in range(b + 1, 2 * n):
                val = dP[a][b, c] - dP[b][a, c] + dP[c][a, b]
                worst = max(worst, abs(val))
    return worst / max(np.abs(P0).max(), 1e-300)
