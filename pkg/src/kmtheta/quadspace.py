"""Quadratic spaces over a totally real field.

The stored Gram matrix holds <e_i, e_j>, with <x, x> = 2 q(x).  Vectors
are tuples of FieldElement.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .numberfield import FieldElement, TotallyRealField, embed, is_totally_positive

Vector = tuple  # tuple[FieldElement, ...]

EIG_RTOL = 1e-10


class ProfileError(ValueError):
    """The embedded signatures do not match the required profile."""


def vec(field: TotallyRealField, entries) -> Vector:
    from .numberfield import parse_element
    return tuple(parse_element(field, v) for v in entries)


def embed_vector(x: Sequence[FieldElement], i: int) -> np.ndarray:
    return np.array([embed(c, i) for c in x], dtype=float)


# exact linear algebra over F ---------------------------------------------

def rref(rows: list[list[FieldElement]]) -> tuple[list[list[FieldElement]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    M = [list(r) for r in rows]
    if not M:
        return M, []
    ncol = len(M[0])
    pivots = []
    r = 0
    for c in range(ncol):
        p = next((k for k in range(r, len(M)) if M[k][c]), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = M[r][c].inverse()
        M[r] = [v * inv for v in M[r]]
        for k in range(len(M)):
            if k != r and M[k][c]:
                f = M[k][c]
                M[k] = [a - f * b for a, b in zip(M[k], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M, pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def nullspace(rows: list[list[FieldElement]], ncol: int, field: TotallyRealField) -> list[Vector]:
    """Basis of {y : rows . y = 0}."""
    if not rows:
        return [tuple(field(1) if j == i else field(0) for j in range(ncol)) for i in range(ncol)]
    R, piv = rref(rows)
    free = [c for c in range(ncol) if c not in piv]
    basis = []
    for f in free:
        y = [field(0)] * ncol
        y[f] = field(1)
        for row, p in zip(R, piv):
            y[p] = -row[f]
        basis.append(tuple(y))
    return basis


def solve_exact(A: list[list[FieldElement]], B: list[list[FieldElement]]) -> list[list[FieldElement]]:
    """Solve A X = B for square invertible A."""
    n = len(A)
    aug = [list(A[i]) + list(B[i]) for i in range(n)]
    R, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in R[:n]]


def det_exact(A: list[list[FieldElement]], field: TotallyRealField) -> FieldElement:
    M = [list(r) for r in A]
    n = len(M)
    d = field(1)
    for c in range(n):
        p = next((k for k in range(c, n) if M[k][c]), None)
        if p is None:
            return field(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            d = -d
        d = d * M[c][c]
        inv = M[c][c].inverse()
        for k in range(c + 1, n):
            if M[k][c]:
                f = M[k][c] * inv
                M[k] = [a - f * b for a, b in zip(M[k], M[c])]
    return d


# the space ----------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticSpace:
    field: TotallyRealField
    gram: tuple
    e: int
    _embedded: dict = dc_field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        g = tuple(tuple(row) for row in self.gram)
        object.__setattr__(self, "gram", g)
        m = len(g)
        if m == 0 or any(len(row) != m for row in g):
            raise ValueError("gram must be a nonempty square matrix")
        for i in range(m):
            for j in range(m):
                if g[i][j] != g[j][i]:
                    raise ValueError("gram is not symmetric")
        if not 0 <= self.e <= self.field.degree:
            raise ValueError("e must lie in 0..d")

    @classmethod
    def from_entries(cls, field: TotallyRealField, gram, e: int) -> "QuadraticSpace":
        from .numberfield import parse_element
        g = tuple(tuple(parse_element(field, v) for v in row) for row in gram)
        return cls(field, g, e)

    @property
    def dim(self) -> int:
        return len(self.gram)

    @property
    def n(self) -> int:
        return self.dim - 2

    @property
    def d(self) -> int:
        return self.field.degree

    def embedded_gram(self, i: int) -> np.ndarray:
        G = self._embedded.get(i)
        if G is None:
            G = np.array([[embed(v, i) for v in row] for row in self.gram])
            self._embedded[i] = G
        return G

    def zero_vector(self) -> Vector:
        return tuple(self.field(0) for _ in range(self.dim))

    def basis_vector(self, k: int) -> Vector:
        """Standard basis vector e_k, 1-based."""
        return tuple(self.field(1 if j == k - 1 else 0) for j in range(self.dim))

    # forms
    def inner_product(self, x: Sequence[FieldElement], y: Sequence[FieldElement]) -> FieldElement:
        if len(x) != self.dim or len(y) != self.dim:
            raise ValueError("dimension mismatch")
        acc = self.field(0)
        for i, xi in enumerate(x):
            if not xi:
                continue
            row = self.gram[i]
            s = self.field(0)
            for j, yj in enumerate(y):
                if yj and row[j]:
                    s = s + row[j] * yj
            acc = acc + xi * s
        return acc

    def quad_value(self, x: Sequence[FieldElement]) -> FieldElement:
        return self.inner_product(x, x) / 2

    def intersection_matrix(self, xs: Sequence[Vector]) -> tuple:
        r = len(xs)
        half = self.field(1) / 2
        T = [[None] * r for _ in range(r)]
        for i in range(r):
            for j in range(i, r):
                v = self.inner_product(xs[i], xs[j]) * half
                T[i][j] = T[j][i] = v
        return tuple(tuple(row) for row in T)

    def signature_at(self, i: int) -> tuple[int, int]:
        if not 1 <= i <= self.d:
            raise IndexError(f"place {i} out of range")
        G = self.embedded_gram(i)
        lam = np.linalg.eigvalsh(G)
        scale = max(np.abs(G).max(), 1e-300)
        if np.min(np.abs(lam)) < EIG_RTOL * scale:
            raise np.linalg.LinAlgError(f"embedded Gram at place {i} is numerically singular")
        return int(np.sum(lam > 0)), int(np.sum(lam < 0))

    def signature_profile(self) -> list[tuple[int, int]]:
        return [self.signature_at(i) for i in range(1, self.d + 1)]

    def check_profile(self) -> None:
        """Raise ProfileError unless signature is (n,2) at places <= e and definite after."""
        m = self.dim
        for i in range(1, self.d + 1):
            sig = self.signature_at(i)
            want = (m - 2, 2) if i <= self.e else (m, 0)
            if sig != want:
                raise ProfileError(f"signature {sig} at place {i}, expected {want}")

    def is_definite(self) -> bool:
        return self.e == 0

    # subspaces
    def canonical_subtuple(self, xs: Sequence[Vector]) -> tuple[tuple[int, ...], tuple]:
        """Greedy left-to-right choice of span-increasing vectors (1-based indices)."""
        chosen: list[int] = []
        rows: list[list[FieldElement]] = []
        for k, x in enumerate(xs):
            trial = rows + [list(x)]
            if rank(trial) > len(rows):
                rows = trial
                chosen.append(k + 1)
        return tuple(chosen), tuple(xs[k - 1] for k in chosen)

    def is_totally_positive_subspace(self, xs: Sequence[Vector]) -> bool:
        _, basis = self.canonical_subtuple(xs)
        if not basis:
            return True
        k = len(basis)
        G = [[self.inner_product(basis[i], basis[j]) for j in range(k)] for i in range(k)]
        # Sylvester: every leading minor totally positive
        for m in range(1, k + 1):
            minor = det_exact([row[:m] for row in G[:m]], self.field)
            if not is_totally_positive(minor):
                return False
        return True

    def orthogonal_complement(self, xs: Sequence[Vector]) -> list[Vector]:
        rows = []
        for x in xs:
            rows.append([self.inner_product(x, self.basis_vector(j + 1)) for j in range(self.dim)])
        rows = [r for r in rows if any(r)]
        return nullspace(rows, self.dim, self.field)

    def restricted(self, basis: Sequence[Vector], e: int | None = None) -> "QuadraticSpace":
        """The space spanned by basis, with the induced Gram matrix."""
        k = len(basis)
        G = tuple(tuple(self.inner_product(basis[i], basis[j]) for j in range(k)) for i in range(k))
        return QuadraticSpace(self.field, G, self.e if e is None else e)

    def to_json(self) -> dict:
        return {"field": self.field.to_json(),
                "gram": [[v.to_json() for v in row] for row in self.gram],
                "e": self.e}


def reflect(space: QuadraticSpace, v: Vector, x: Vector) -> Vector:
    """Orthogonal reflection of x in the hyperplane v-perp, exact over F."""
    c = space.inner_product(x, v) / space.inner_product(v, v) * 2
    return tuple(xi - c * vi for xi, vi in zip(x, v))
