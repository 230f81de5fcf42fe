"""Oriented negative 2-planes tau = alpha + i beta at an indefinite place.

Conventions.  <x, y> is the stored Gram pairing and q(x) = <x, x>/2.  The
majorant is R(x, tau) = -<x_tau, x_tau>, where x_tau is the orthogonal
projection of x onto the plane, and q_tau = q + R is the positive form
attached to tau (half the standard majorant of <,>).  With these choices
R = 2 |s_x(tau)|^2 for the section norm below, and the Green function
f(2 pi R) has dd^c equal to the Kudla-Millson form in a frame that is
orthonormal for <,>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numberfield import FieldElement
from .quadspace import QuadraticSpace, embed_vector

TOL = 1e-10


class PlaneError(ValueError):
    pass


def _real(space: QuadraticSpace, place: int, v) -> np.ndarray:
    if len(v) and isinstance(v[0], FieldElement):
        return embed_vector(v, place)
    return np.asarray(v, dtype=float)


@dataclass(frozen=True, eq=False)
class PeriodPoint:
    space: QuadraticSpace
    place: int
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def gram(self) -> np.ndarray:
        return self.space.embedded_gram(self.place)

    @property
    def vector(self) -> np.ndarray:
        return self.alpha + 1j * self.beta

    def norm(self) -> float:
        """The common value <alpha, alpha> = <beta, beta> (negative)."""
        return float(self.alpha @ self.gram @ self.alpha)

    def to_json(self) -> dict:
        return {"place": self.place, "alpha": [float(a) for a in self.alpha],
                "beta": [float(b) for b in self.beta]}


@dataclass(frozen=True, eq=False)
class PolyPeriodPoint:
    points: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if [p.place for p in pts] != list(range(1, len(pts) + 1)):
            raise ValueError("period points must cover places 1..e in order")

    def __getitem__(self, i: int) -> PeriodPoint:
        return self.points[i]

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def at(self, place: int) -> PeriodPoint:
        return self.points[place - 1]


def make_period_point(space: QuadraticSpace, place: int, alpha, beta) -> PeriodPoint:
    if not 1 <= place <= space.e:
        raise PlaneError(f"place {place} is not an indefinite place")
    G = space.embedded_gram(place)
    a = _real(space, place, alpha).copy()
    b = _real(space, place, beta).copy()
    aa, ab, bb = a @ G @ a, a @ G @ b, b @ G @ b
    det = aa * bb - ab * ab
    scale = max(abs(aa), abs(bb), 1e-300)
    if abs(det) < TOL * scale * scale:
        raise PlaneError("alpha and beta are dependent")
    if not (aa < 0 and det > 0):
        raise PlaneError("span{alpha, beta} is not negative definite")
    b = b - (ab / aa) * a
    b = b * np.sqrt(aa / (b @ G @ b))
    return PeriodPoint(space, place, a, b)


def negative_projection(x: np.ndarray, tau: PeriodPoint) -> np.ndarray:
    G = tau.gram
    a, b = tau.alpha, tau.beta
    x = np.asarray(x, dtype=float)
    return (x @ G @ a) / (a @ G @ a) * a + (x @ G @ b) / (b @ G @ b) * b


def majorant_R(x, tau: PeriodPoint, method: str = "projection") -> float:
    """R(x, tau) = -<x_tau, x_tau>.

    method="explicit" uses -<x,a>^2/<a,a> - <x,b>^2/<b,b> instead of the
    projection; both are exposed so they can be compared.
    """
    G = tau.gram
    x = _real(tau.space, tau.place, x)
    if method == "projection":
        xt = negative_projection(x, tau)
        return float(max(-(xt @ G @ xt), 0.0))
    if method == "explicit":
        a, b = tau.alpha, tau.beta
        return float(-(x @ G @ a) ** 2 / (a @ G @ a) - (x @ G @ b) ** 2 / (b @ G @ b))
    raise ValueError(f"unknown method {method!r}")


def R_matrix(tau: PeriodPoint) -> np.ndarray:
    """Symmetric M with R(x, tau) = x^T M x."""
    G = tau.gram
    ga, gb = G @ tau.alpha, G @ tau.beta
    return -np.outer(ga, ga) / (tau.alpha @ ga) - np.outer(gb, gb) / (tau.beta @ gb)


def majorant_form(tau: PeriodPoint) -> np.ndarray:
    """Matrix of q_tau = q + R in standard coordinates; Cholesky-checked."""
    A = 0.5 * tau.gram + R_matrix(tau)
    A = 0.5 * (A + A.T)
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise PlaneError("majorant is not positive definite; corrupted period point") from exc
    return A


def section_norm_sq(x, tau: PeriodPoint) -> float:
    G = tau.gram
    x = _real(tau.space, tau.place, x)
    v = tau.vector
    num = abs(x @ G @ v) ** 2
    den = abs(v @ G @ np.conj(v))
    return float(num / den)


def act(g, tau: PeriodPoint) -> PeriodPoint:
    from .clifford import vector_action
    if g.frame.place != tau.place:
        raise ValueError("Clifford frame lives at a different place")
    return make_period_point(tau.space, tau.place, vector_action(g, tau.alpha), vector_action(g, tau.beta))


def adapted_basis(tau: PeriodPoint, lead: Sequence[np.ndarray] = ()) -> np.ndarray:
    """Columns f_1..f_{n+2} with Gram diag(+1 x n, -1, -1), f_{n+1}, f_{n+2} along alpha, beta.

    The positive part is Gram-Schmidt of `lead` followed by the standard
    basis, projected onto the orthogonal complement of the plane.
    """
    G = tau.gram
    m = G.shape[0]
    fa = tau.alpha / np.sqrt(-(tau.alpha @ G @ tau.alpha))
    fb = tau.beta / np.sqrt(-(tau.beta @ G @ tau.beta))
    pos: list[np.ndarray] = []
    candidates = [np.asarray(v, dtype=float) for v in lead] + [np.eye(m)[:, k] for k in range(m)]
    for c in candidates:
        w = c + (c @ G @ fa) * fa + (c @ G @ fb) * fb
        for p in pos:
            w = w - (w @ G @ p) * p
        nw = w @ G @ w
        if nw > 1e-8 * max(1.0, c @ c):
            pos.append(w / np.sqrt(nw))
        if len(pos) == m - 2:
            break
    if len(pos) != m - 2:
        raise PlaneError("could not complete the frame")
    F = np.column_stack(pos + [fa, fb])
    if abs(np.linalg.det(F)) < 1e-10:
        raise PlaneError("ill-conditioned frame completion")
    return F


def chart(frame, w, branch: int = 1) -> PeriodPoint:
    """Quadric chart around the frame's basepoint.

    v(w) = sum_k w_k f_k + f_{n+1} + i*branch*sqrt(1 - sum w_k^2) f_{n+2}
    satisfies <v, v> = 0; w = 0 gives the basepoint.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    F = frame.basis
    n = F.shape[1] - 2
    if w.shape != (n,):
        raise ValueError(f"chart coordinate must have length {n}")
    s2 = 1.0 - np.sum(w * w)
    if abs(s2) < 1e-12:
        raise PlaneError("ramification locus of the chart")
    if abs(s2.imag) < 1e-14 * max(1.0, abs(s2)) and s2.real < 0:
        raise PlaneError("branch ambiguity: 1 - w.w on the negative real axis")
    s = branch * np.sqrt(s2)
    coords = np.concatenate([w, [1.0, 1j * s]])
    if np.sum(np.abs(w) ** 2) - 1.0 - abs(s) ** 2 >= 0:
        raise PlaneError("chart point outside the period domain")
    v = F @ coords
    return make_period_point(frame.tau.space, frame.tau.place, v.real, v.imag)


def chart_tangent(frame, w, branch: int = 1) -> np.ndarray:
    """Holomorphic derivatives dv/dw_k of the (unnormalized) chart vector, as columns."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    F = frame.basis
    n = F.shape[1] - 2
    s = branch * np.sqrt(1.0 - np.sum(w * w))
    cols = []
    for k in range(n):
        c = np.zeros(n + 2, dtype=complex)
        c[k] = 1.0
        c[n + 1] = -1j * w[k] / s
        cols.append(F @ c)
    return np.column_stack(cols)


def chart_vector(frame, w, branch: int = 1) -> np.ndarray:
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    s = branch * np.sqrt(1.0 - np.sum(w * w))
    return frame.basis @ np.concatenate([w, [1.0, 1j * s]])


def random_period_point(space: QuadraticSpace, place: int, rng: np.random.Generator,
                        spread: float = 1.0) -> PeriodPoint:
    """A random point at Gaussian distance (scale `spread`) from the negative eigenplane.

    Uses the bounded model: the plane spanned by the columns of neg + pos B
    is negative definite exactly when |B|_2 < 1, and B = U tanh(S) V^T for
    the SVD of a Gaussian matrix keeps points away from the boundary.
    """
    G = space.embedded_gram(place)
    lam, U = np.linalg.eigh(G)
    neg = U[:, lam < 0] / np.sqrt(-lam[lam < 0])
    pos = U[:, lam > 0] / np.sqrt(lam[lam > 0])
    Z = rng.normal(scale=spread, size=(pos.shape[1], 2))
    Uz, S, Vt = np.linalg.svd(Z, full_matrices=False)
    B = Uz @ np.diag(np.tanh(S)) @ Vt
    P = neg + pos @ B
    if rng.integers(2):
        P = P[:, ::-1]
    return make_period_point(space, place, P[:, 0], P[:, 1])


def comparability_constants(tau0: PeriodPoint, taus: Sequence[PeriodPoint]) -> tuple[float, float]:
    """Best c, d with c q_tau0 <= q_tau <= d q_tau0 over the sample."""
    A0 = majorant_form(tau0)
    L = np.linalg.cholesky(A0)
    Li = np.linalg.inv(L)
    lo, hi = np.inf, -np.inf
    for t in taus:
        ev = np.linalg.eigvalsh(Li @ majorant_form(t) @ Li.T)
        lo = min(lo, ev[0])
        hi = max(hi, ev[-1])
    return float(lo), float(hi)
