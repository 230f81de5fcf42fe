"""Archimedean data on the symplectic side: Iwasawa decomposition, the
det^{1/2} character on the maximal compact, holomorphic Whittaker functions
and a fractional Fourier oracle for the Weil action of the compact torus.

The metaplectic cover is modelled by a branch bit carried along products;
det_half(k) = (-1)^branch det(A + iB).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite

from .numberfield import FieldElement, embed

SYMPLECTIC_TOL = 1e-10
PSD_TOL = 1e-12


class NotSymplecticError(ValueError):
    pass


def _J(r: int) -> np.ndarray:
    Z, I = np.zeros((r, r)), np.eye(r)
    return np.block([[Z, I], [-I, Z]])


@dataclass(frozen=True, eq=False)
class SymplecticElement:
    matrix: np.ndarray
    branch: int = 0

    def __post_init__(self):
        g = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", g)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise NotSymplecticError("expected a 2r x 2r matrix")
        r = g.shape[0] // 2
        J = _J(r)
        err = np.abs(g.T @ J @ g - J).max()
        if err > SYMPLECTIC_TOL * max(1.0, np.abs(g).max() ** 2):
            raise NotSymplecticError(f"g^T J g differs from J by {err:.3g}")
        if self.branch not in (0, 1):
            raise ValueError("branch bit must be 0 or 1")

    @property
    def r(self) -> int:
        return self.matrix.shape[0] // 2

    def blocks(self):
        r = self.r
        g = self.matrix
        return g[:r, :r], g[:r, r:], g[r:, :r], g[r:, r:]

    def __matmul__(self, other: "SymplecticElement") -> "SymplecticElement":
        return SymplecticElement(self.matrix @ other.matrix, self.branch ^ other.branch)

    def act(self, tau: np.ndarray) -> np.ndarray:
        A, B, C, D = self.blocks()
        return (A @ tau + B) @ np.linalg.inv(C @ tau + D)

    @classmethod
    def identity(cls, r: int) -> "SymplecticElement":
        return cls(np.eye(2 * r))


def unipotent(u) -> SymplecticElement:
    """n(u) = (1 u; 0 1) for symmetric u."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    r = u.shape[0]
    return SymplecticElement(np.block([[np.eye(r), u], [np.zeros((r, r)), np.eye(r)]]))


def levi(a) -> SymplecticElement:
    """m(a) = (a 0; 0 a^{-T})."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    r = a.shape[0]
    return SymplecticElement(np.block([[a, np.zeros((r, r))], [np.zeros((r, r)), np.linalg.inv(a).T]]))


def compact(U, branch: int = 0) -> SymplecticElement:
    """The element of K with A + iB = U (U unitary)."""
    U = np.atleast_2d(np.asarray(U, dtype=complex))
    A, B = U.real, U.imag
    return SymplecticElement(np.block([[A, B], [-B, A]]), branch)


def rotation(theta: float, r: int = 1, branch: int = 0) -> SymplecticElement:
    return compact(np.exp(1j * theta) * np.eye(r), branch)


def random_symplectic(r: int, rng: np.random.Generator, spread: float = 0.5) -> SymplecticElement:
    u = rng.normal(scale=spread, size=(r, r))
    u = u + u.T
    a = np.triu(rng.normal(scale=spread, size=(r, r)), 1) + np.diag(np.exp(rng.normal(scale=spread, size=r)))
    return unipotent(u) @ levi(a) @ random_compact(r, rng)


def random_compact(r: int, rng: np.random.Generator) -> SymplecticElement:
    Z = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    Q, R = np.linalg.qr(Z)
    Q = Q @ np.diag(np.diag(R) / np.abs(np.diag(R)))
    return compact(Q, int(rng.integers(0, 2)))


def _upper_cholesky(Y: np.ndarray) -> np.ndarray:
    """Upper triangular v with positive diagonal and v v^T = Y."""
    P = np.eye(len(Y))[::-1]
    L = np.linalg.cholesky(P @ Y @ P)
    return P @ L @ P


def iwasawa(g: SymplecticElement):
    """g = n(u) m(v) k with u symmetric, v upper triangular, k in K."""
    r = g.r
    tau = g.act(1j * np.eye(r))
    tau = 0.5 * (tau + tau.T)
    u = tau.real
    v = _upper_cholesky(tau.imag)
    k = levi(np.linalg.inv(v)) @ unipotent(-u) @ g
    return u, v, k


def det_half(k: SymplecticElement) -> complex:
    A, B, _, _ = k.blocks()
    val = complex(np.linalg.det(A + 1j * B))
    return -val if k.branch else val


def is_psd(beta: np.ndarray, tol: float = PSD_TOL) -> bool:
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    return bool(np.linalg.eigvalsh(0.5 * (beta + beta.T)).min() >= -tol)


def whittaker_W(beta, g: SymplecticElement, weight_dim: int) -> complex:
    """det(v)^{m/2} e^{2 pi i tr(beta tau')} det_half(k)^m, m = weight_dim; 0 off psd beta."""
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    if not is_psd(beta):
        return 0.0j
    u, v, k = iwasawa(g)
    tau = u + 1j * (v @ v.T)
    return complex(np.linalg.det(v) ** (weight_dim / 2) * np.exp(2j * np.pi * np.trace(beta @ tau))
                   * det_half(k) ** weight_dim)


def embed_matrix(beta, place: int) -> np.ndarray:
    return np.array([[embed(c, place) if isinstance(c, FieldElement) else float(c) for c in row]
                     for row in beta])


def whittaker_hilbert(beta, g_tuple: Sequence[SymplecticElement], weight_dim: int) -> complex:
    """Product over real places of whittaker_W(sigma_j(beta), g_j)."""
    d = _degree(beta)
    if len(g_tuple) != d:
        raise ValueError(f"expected {d} symplectic elements, got {len(g_tuple)}")
    out = 1.0 + 0.0j
    for j, g in enumerate(g_tuple, start=1):
        w = whittaker_W(embed_matrix(beta, j), g, weight_dim)
        if w == 0:
            return 0.0j
        out *= w
    return out


def _degree(beta) -> int:
    for row in beta:
        for c in row:
            if isinstance(c, FieldElement):
                return c.field.degree
    return 1


def gaussian_standard(X, gram) -> float:
    """exp(-pi tr (x, x)) for a tuple X (rows) and the Gram matrix of <,>."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        return 1.0
    return float(np.exp(-np.pi * np.trace(X @ np.asarray(gram) @ X.T)))


# fractional Fourier oracle ------------------------------------------------

class GridTooCoarse(ValueError):
    pass


def _hermite_functions(x: np.ndarray, degree: int) -> np.ndarray:
    """Columns h_k(x) = H_k(sqrt(2 pi) x) exp(-pi x^2), eigenfunctions of the
    Fourier transform f -> int f(x) e^{-2 pi i x y} dx with eigenvalue (-i)^k."""
    t = np.sqrt(2 * np.pi) * x
    cols = []
    for k in range(degree + 1):
        c = np.zeros(k + 1)
        c[k] = 1.0
        h = hermite.hermval(t, c) * np.exp(-np.pi * x * x)
        cols.append(h / np.sqrt(np.sum(h * h)))
    return np.column_stack(cols)


def _axis_operator(x: np.ndarray, theta: float, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid operators for the rotation by theta and for projection onto the Hermite span."""
    H = _hermite_functions(x, degree)
    Hp = np.linalg.pinv(H)
    phases = np.exp(-1j * theta * np.arange(degree + 1))
    return H @ np.diag(phases) @ Hp, H @ Hp


def fractional_fourier_oracle(samples: np.ndarray, grid: np.ndarray, theta: float, signature: tuple[int, int],
                              degree: int = 24, max_loss: float = 0.01) -> np.ndarray:
    """Fractional Fourier transform by angle +theta on the first p axes and -theta on the last q.

    samples has one axis per coordinate, all sampled on the 1-d `grid`.
    """
    p, q = signature
    samples = np.asarray(samples, dtype=complex)
    if samples.ndim != p + q:
        raise ValueError("samples must have one axis per coordinate")
    if p + q > 3:
        raise ValueError("the oracle is limited to dimension <= 3")
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2 * (degree + 1):
        # with fewer points the Hermite span fills the grid and the energy check is vacuous
        raise GridTooCoarse(f"need at least {2 * (degree + 1)} grid points for degree {degree}")
    fwd, proj = _axis_operator(grid, theta, degree)
    bwd, _ = _axis_operator(grid, -theta, degree)
    captured = samples
    for ax in range(samples.ndim):
        captured = np.moveaxis(np.tensordot(proj, captured, axes=([1], [ax])), 0, ax)
    total = np.sum(np.abs(samples) ** 2)
    if total > 0 and 1 - np.sum(np.abs(captured) ** 2) / total > max_loss:
        raise GridTooCoarse("Hermite expansion misses more than 1% of the energy")
    out = samples
    for ax in range(samples.ndim):
        op = fwd if ax < p else bwd
        out = np.moveaxis(np.tensordot(op, out, axes=([1], [ax])), 0, ax)
    return out


def eigenphase(samples: np.ndarray, grid: np.ndarray, thetas: Sequence[float], signature: tuple[int, int],
               degree: int = 24) -> np.ndarray:
    """Fitted c with T_theta f ~ e^{i c theta} f, one value per theta."""
    f = np.asarray(samples, dtype=complex)
    out = []
    for th in thetas:
        g = fractional_fourier_oracle(f, grid, th, signature, degree)
        lam = np.vdot(f, g) / np.vdot(f, f)
        resid = np.linalg.norm(g - lam * f) / np.linalg.norm(f)
        out.append((np.angle(lam) / th if th else 0.0, resid))
    return np.array(out)
