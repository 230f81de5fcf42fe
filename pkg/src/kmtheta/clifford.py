"""Clifford algebra of (V, q) at one real place, and its GSpin group.

Blades are bitmasks over an orthogonal frame f_1..f_m with f_i^2 = q(f_i).
Products of anisotropic vectors over F also remember their factors, so
their action on V can be replayed exactly as a chain of reflections.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .quadspace import QuadraticSpace, Vector, embed_vector, reflect

RESIDUAL_TOL = 1e-8


class NotGSpinError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Frame:
    """Orthogonal basis at a place: columns of `basis` in standard coordinates."""
    space: QuadraticSpace
    place: int
    basis: np.ndarray
    diagonal: np.ndarray  # <f_i, f_i>

    @property
    def dim(self) -> int:
        return len(self.diagonal)

    @property
    def squares(self) -> np.ndarray:
        return self.diagonal / 2.0

    def to_frame(self, v: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.basis, v)

    def from_frame(self, c: np.ndarray) -> np.ndarray:
        return self.basis @ c


def orthogonalize(space: QuadraticSpace, place: int) -> Frame:
    G = space.embedded_gram(place)
    m = G.shape[0]
    scale = np.abs(G).max()
    if abs(np.linalg.det(G)) < 1e-12 * scale ** m:
        raise np.linalg.LinAlgError("singular Gram matrix")
    pending = [np.eye(m)[:, k] for k in range(m)]
    done: list[np.ndarray] = []
    norms: list[float] = []
    tol = 1e-12 * scale
    while pending:
        pick = next((k for k, w in enumerate(pending) if abs(w @ G @ w) > tol), None)
        if pick is None:
            # all remaining are isotropic: combine a pair with nonzero pairing
            i, j = next((i, j) for i in range(len(pending)) for j in range(i + 1, len(pending))
                        if abs(pending[i] @ G @ pending[j]) > tol)
            pending[i] = pending[i] + pending[j]
            pick = i
        w = pending.pop(pick)
        nw = w @ G @ w
        done.append(w)
        norms.append(nw)
        pending = [u - (u @ G @ w) / nw * w for u in pending]
    order = sorted(range(m), key=lambda k: (norms[k] < 0, k))
    P = np.column_stack([done[k] for k in order])
    return Frame(space, place, P, np.array([norms[k] for k in order]))


def _reorder_sign(a: int, b: int) -> int:
    a >>= 1
    s = 0
    while a:
        s += bin(a & b).count("1")
        a >>= 1
    return -1 if s & 1 else 1


@lru_cache(maxsize=64)
def _tables(squares: tuple) -> tuple[np.ndarray, np.ndarray]:
    m = len(squares)
    N = 1 << m
    factor = np.empty((N, N))
    target = np.empty((N, N), dtype=np.int64)
    for a in range(N):
        for b in range(N):
            f = float(_reorder_sign(a, b))
            common = a & b
            k = 0
            while common:
                if common & 1:
                    f *= squares[k]
                common >>= 1
                k += 1
            factor[a, b] = f
            target[a, b] = a ^ b
    return factor, target


@dataclass(frozen=True, eq=False)
class CliffordElement:
    frame: Frame
    coeffs: np.ndarray
    factors: tuple | None = None  # exact vectors whose product this is, if known

    @property
    def dim(self) -> int:
        return self.frame.dim

    def _check(self, other: "CliffordElement"):
        if other.frame is not self.frame:
            raise ValueError("frame mismatch")

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return CliffordElement(self.frame, self.coeffs * other, self.factors)
        return clifford_product(self, other)

    def __rmul__(self, other):
        return CliffordElement(self.frame, self.coeffs * other, self.factors)

    def __add__(self, other: "CliffordElement"):
        self._check(other)
        return CliffordElement(self.frame, self.coeffs + other.coeffs)

    def __sub__(self, other: "CliffordElement"):
        self._check(other)
        return CliffordElement(self.frame, self.coeffs - other.coeffs)

    def grade_part(self, k: int) -> np.ndarray:
        out = np.zeros_like(self.coeffs)
        for a in range(len(self.coeffs)):
            if bin(a).count("1") == k:
                out[a] = self.coeffs[a]
        return out

    def blade(self, *indices: int) -> float:
        """Coefficient of f_{i1} ... f_{ik} (1-based, increasing)."""
        mask = 0
        for i in indices:
            mask |= 1 << (i - 1)
        return float(self.coeffs[mask])


def scalar(frame: Frame, c: float = 1.0) -> CliffordElement:
    v = np.zeros(1 << frame.dim)
    v[0] = c
    return CliffordElement(frame, v)


def generator(frame: Frame, i: int) -> CliffordElement:
    v = np.zeros(1 << frame.dim)
    v[1 << (i - 1)] = 1.0
    return CliffordElement(frame, v)


def vector_element(frame: Frame, v: np.ndarray) -> CliffordElement:
    """Embed a real vector (standard coordinates) as a grade-1 element."""
    c = frame.to_frame(np.asarray(v, dtype=float))
    out = np.zeros(1 << frame.dim)
    for i, ci in enumerate(c):
        out[1 << i] = ci
    return CliffordElement(frame, out)


def clifford_product(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    a._check(b)
    factor, target = _tables(tuple(a.frame.squares))
    contrib = np.outer(a.coeffs, b.coeffs) * factor
    out = np.zeros_like(a.coeffs)
    np.add.at(out, target.ravel(), contrib.ravel())
    facs = None
    if a.factors is not None and b.factors is not None:
        facs = a.factors + b.factors
    return CliffordElement(a.frame, out, facs)


def parity(a: CliffordElement, tol: float = 0.0) -> str:
    even = odd = False
    for mask, c in enumerate(a.coeffs):
        if abs(c) > tol:
            if bin(mask).count("1") % 2:
                odd = True
            else:
                even = True
    if odd and even:
        return "mixed"
    return "odd" if odd else "even"


def _left_matrix(g: CliffordElement) -> np.ndarray:
    factor, target = _tables(tuple(g.frame.squares))
    N = len(g.coeffs)
    L = np.zeros((N, N))
    for a in range(N):
        if g.coeffs[a] == 0.0:
            continue
        for b in range(N):
            L[target[a, b], b] += g.coeffs[a] * factor[a, b]
    return L


def inverse(g: CliffordElement) -> CliffordElement:
    L = _left_matrix(g)
    N = L.shape[0]
    if np.linalg.cond(L) > 1e12:
        raise np.linalg.LinAlgError("Clifford element is singular")
    rhs = np.zeros(N)
    rhs[0] = 1.0
    return CliffordElement(g.frame, np.linalg.solve(L, rhs))


def _conjugate_vector(g: CliffordElement, ginv: CliffordElement, v: np.ndarray) -> tuple[np.ndarray, float]:
    w = clifford_product(clifford_product(g, vector_element(g.frame, v)), ginv)
    one = w.grade_part(1)
    rest = w.coeffs - one
    c = np.array([one[1 << i] for i in range(g.dim)])
    size = max(np.linalg.norm(one), 1e-300)
    return g.frame.from_frame(c), float(np.linalg.norm(rest) / size)


def vector_action(g: CliffordElement, v: np.ndarray, tol: float = RESIDUAL_TOL) -> np.ndarray:
    """g v g^{-1} for a real vector v in standard coordinates at the frame's place."""
    if parity(g) != "even":
        raise NotGSpinError("GSpin elements are even")
    ginv = inverse(g)
    out, resid = _conjugate_vector(g, ginv, v)
    if resid > tol:
        raise NotGSpinError(f"not GSpin-stable: off-V residual {resid:.3g}")
    return out


def exact_vector_action(g: CliffordElement, x: Vector) -> Vector:
    """Exact action over F of a product of vectors, via reflections."""
    if g.factors is None:
        raise ValueError("element has no recorded vector factors")
    if len(g.factors) % 2:
        raise NotGSpinError("odd number of factors")
    y = tuple(x)
    for v in reversed(g.factors):
        y = reflect(g.frame.space, v, y)
    return y


def is_gspin(g: CliffordElement, tol: float = RESIDUAL_TOL) -> bool:
    if parity(g) != "even":
        return False
    try:
        ginv = inverse(g)
    except np.linalg.LinAlgError:
        return False
    m = g.dim
    for k in range(m):
        _, resid = _conjugate_vector(g, ginv, g.frame.basis[:, k])
        if resid > tol:
            return False
    return True


def product_of_vectors(frame: Frame, vectors: Sequence[Vector]) -> CliffordElement:
    out = scalar(frame)
    for v in vectors:
        el = vector_element(frame, embed_vector(v, frame.place))
        out = clifford_product(out, CliffordElement(frame, el.coeffs, (tuple(v),)))
    out = CliffordElement(frame, out.coeffs / np.abs(out.coeffs).max(), tuple(tuple(v) for v in vectors))
    return out


def random_anisotropic(space: QuadraticSpace, rng: np.random.Generator, size: int = 2,
                       place: int = 1, min_ratio: float = 0.25) -> Vector:
    """Random integral vector v with |<v,v>| >= min_ratio * (v, v)_abs at `place`.

    (,)_abs is the positive form |G|; the ratio bounds the conditioning of
    the reflection in v, and so of products of a few such reflections.
    """
    F = space.field
    G = space.embedded_gram(place)
    lam, U = np.linalg.eigh(G)
    absG = (U * np.abs(lam)) @ U.T
    while True:
        if F.degree == 1:
            v = tuple(F(int(a)) for a in rng.integers(-size, size + 1, space.dim))
        else:
            ab = rng.integers(-size, size + 1, (space.dim, 2))
            v = tuple(F(int(a), int(b)) for a, b in ab)
        if not space.quad_value(v):
            continue
        e = embed_vector(v, place)
        if abs(e @ G @ e) >= min_ratio * (e @ absG @ e):
            return v


def random_gspin(frame: Frame, seed: int, count: int = 1, max_factors: int | None = None) -> list[CliffordElement]:
    """Normalized products of an even number (2..max_factors) of anisotropic vectors.

    The default cap 2*floor(dim/2) suffices: by Cartan-Dieudonne every rotation is
    such a product, and longer products only worsen the conditioning.
    """
    if max_factors is None:
        max_factors = 2 * (frame.space.dim // 2)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = 2 * int(rng.integers(1, max_factors // 2 + 1))
        vs = [random_anisotropic(frame.space, rng, place=frame.place) for _ in range(k)]
        out.append(product_of_vectors(frame, vs))
    return out

