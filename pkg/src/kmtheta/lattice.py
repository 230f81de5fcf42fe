"""O_F-lattices as Z-modules of rank d(n+2), enumeration under the total
majorant, T-fibers and dual lattices."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _backend
from .numberfield import FieldElement, TotallyRealField, parse_element
from .perioddomain import majorant_form
from .quadspace import QuadraticSpace, Vector, embed_vector

INCLUSION_RTOL = 1e-10
KERNEL_SLACK = 1e-9


class MajorantError(ValueError):
    pass


class IncompleteSearchWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class OLattice:
    space: QuadraticSpace
    zbasis: tuple

    def __post_init__(self):
        basis = tuple(tuple(v) for v in self.zbasis)
        object.__setattr__(self, "zbasis", basis)
        if len(basis) != self.rank:
            raise ValueError(f"Z-basis must have {self.rank} vectors")
        if any(len(v) != self.space.dim for v in basis):
            raise ValueError("basis vector has the wrong length")
        if abs(np.linalg.det(self.real_basis())) < 1e-12:
            raise ValueError("Z-basis is not of full rank")

    @classmethod
    def standard(cls, space: QuadraticSpace) -> "OLattice":
        """O_F^{n+2}, with Z-basis omega * e_k."""
        F = space.field
        basis = []
        for k in range(1, space.dim + 1):
            ek = space.basis_vector(k)
            for w in F.integer_basis():
                basis.append(tuple(w * c for c in ek))
        return cls(space, tuple(basis))

    @property
    def rank(self) -> int:
        return self.space.d * self.space.dim

    @property
    def field(self) -> TotallyRealField:
        return self.space.field

    def real_basis(self) -> np.ndarray:
        """Rows: the basis vectors embedded at all places, concatenated (rank x d(n+2))."""
        d = self.space.d
        return np.array([np.concatenate([embed_vector(b, i) for i in range(1, d + 1)]) for b in self.zbasis])

    def basis_at(self, place: int) -> np.ndarray:
        """Matrix whose columns are sigma_place of the basis vectors."""
        return np.column_stack([embed_vector(b, place) for b in self.zbasis])

    def vector(self, coords: Sequence[int | Fraction]) -> Vector:
        F = self.field
        out = [F(0)] * self.space.dim
        for c, b in zip(coords, self.zbasis):
            if c:
                out = [o + bi * c for o, bi in zip(out, b)]
        return tuple(out)

    def trace_gram(self) -> list[list[Fraction]]:
        """Z-Gram of the trace form tr <b_a, b_b>."""
        k = self.rank
        G = [[Fraction(0)] * k for _ in range(k)]
        for a in range(k):
            for b in range(a, k):
                v = self.space.inner_product(self.zbasis[a], self.zbasis[b])
                G[a][b] = G[b][a] = v.a * self.space.d
        return G

    def exact_gram_parts(self) -> tuple[np.ndarray, np.ndarray, int]:
        """Integer matrices A, B and a denominator with <b_a, b_b> = (A + B sqrt D) / den."""
        return self._gram_parts

    @cached_property
    def _gram_parts(self):
        k = self.rank
        vals = [[self.space.inner_product(self.zbasis[a], self.zbasis[b]) for b in range(k)] for a in range(k)]
        den = 1
        for row in vals:
            for v in row:
                den = math.lcm(den, v.a.denominator, v.b.denominator)
        A = np.array([[int(v.a * den) for v in row] for row in vals], dtype=np.int64)
        B = np.array([[int(v.b * den) for v in row] for row in vals], dtype=np.int64)
        return A, B, den

    def to_json(self) -> dict:
        return {"space": self.space.to_json(),
                "zbasis": [[c.to_json() for c in v] for v in self.zbasis]}


def lattice_from_json(obj: dict) -> OLattice:
    sp = obj["space"]
    F = TotallyRealField.from_json(sp["field"])
    space = QuadraticSpace.from_entries(F, sp["gram"], int(sp["e"]))
    if "zbasis" not in obj or obj["zbasis"] is None:
        return OLattice.standard(space)
    basis = tuple(tuple(parse_element(F, c) for c in v) for v in obj["zbasis"])
    return OLattice(space, basis)


def total_majorant(lattice: OLattice, tau=()) -> np.ndarray:
    """Gram matrix on Z-coordinates of sum_{i<=e} q_{tau_i} + sum_{i>e} q_i."""
    space = lattice.space
    pts = list(tau)
    if len(pts) != space.e:
        raise MajorantError(f"need one period point per indefinite place ({space.e}), got {len(pts)}")
    k = lattice.rank
    M = np.zeros((k, k))
    for i in range(1, space.d + 1):
        B = lattice.basis_at(i)
        A = majorant_form(pts[i - 1]) if i <= space.e else 0.5 * space.embedded_gram(i)
        M += B.T @ A @ B
    M = 0.5 * (M + M.T)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise MajorantError("total majorant is not positive definite") from exc
    return M


def _upper_factor(M: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.linalg.cholesky(M).T)


@dataclass
class Enumeration:
    """Integer coordinates (rows) and majorant values, ordered by (Q, coordinates)."""
    coords: np.ndarray
    qmaj: np.ndarray
    bound: float
    offset: np.ndarray

    def __len__(self):
        return len(self.coords)

    def shells(self) -> Iterator[tuple[float, np.ndarray]]:
        if not len(self):
            return
        keys = np.round(self.qmaj, 9)
        starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
        ends = np.r_[starts[1:], len(keys)]
        for s, e in zip(starts, ends):
            yield float(keys[s]), self.coords[s:e]


def _order(coords: np.ndarray, qmaj: np.ndarray) -> np.ndarray:
    keys = [coords[:, j] for j in range(coords.shape[1] - 1, -1, -1)] + [np.round(qmaj, 9)]
    return np.lexsort(keys)


def enumerate_majorant(M: np.ndarray, bound: float, offset=None, limit: int = -1) -> Enumeration:
    """All integer y with (y+c)^T M (y+c) <= bound (with relative tolerance 1e-10)."""
    k = M.shape[0]
    c = np.zeros(k) if offset is None else np.asarray(offset, dtype=float)
    if bound < 0:
        return Enumeration(np.zeros((0, k), dtype=np.int64), np.zeros(0), bound, c)
    R = _upper_factor(M)
    raw = _backend.enumerate_ball(R, bound * (1 + KERNEL_SLACK) + 1e-300, np.ascontiguousarray(c), limit)
    z = raw + c
    q = np.einsum("ij,jk,ik->i", z, M, z)
    keep = q <= bound * (1 + INCLUSION_RTOL)
    raw, q = raw[keep], q[keep]
    order = _order(raw, q)
    return Enumeration(raw[order], q[order], bound, c)


def enumerate_below(lattice: OLattice, tau, bound: float, offset=None, limit: int = -1) -> Enumeration:
    return enumerate_majorant(total_majorant(lattice, tau), bound, offset, limit)


def stream_below(lattice: OLattice, tau, bound: float) -> Iterator[Vector]:
    for y in enumerate_below(lattice, tau, bound).coords:
        yield lattice.vector([int(t) for t in y])


def box_scan(M: np.ndarray, bound: float, offset=None) -> np.ndarray:
    """Oracle: scan the bounding box of the ellipsoid."""
    k = M.shape[0]
    c = np.zeros(k) if offset is None else np.asarray(offset, dtype=float)
    half = np.sqrt(bound * np.diag(np.linalg.inv(M)))
    ranges = [np.arange(math.floor(-c[j] - half[j]) - 1, math.ceil(-c[j] + half[j]) + 2) for j in range(k)]
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), -1).reshape(-1, k)
    z = grid + c
    q = np.einsum("ij,jk,ik->i", z, M, z)
    return grid[q <= bound * (1 + INCLUSION_RTOL)]


def _as_objects(coords) -> np.ndarray:
    Y = np.asarray(coords, dtype=object)
    return np.vectorize(lambda v: v if isinstance(v, Fraction) else int(v), otypes=[object])(Y) if Y.size else Y


def exact_q_values(lattice: OLattice, coords) -> list[FieldElement]:
    """q(x) for coordinate rows (integers or Fractions), exact over F."""
    A, B, den = lattice.exact_gram_parts()
    F = lattice.field
    Y = _as_objects(coords)
    if not len(Y):
        return []
    qa = np.einsum("ij,jk,ik->i", Y, A.astype(object), Y)
    qb = np.einsum("ij,jk,ik->i", Y, B.astype(object), Y)
    return [F(Fraction(a) / (2 * den), Fraction(b) / (2 * den)) for a, b in zip(qa, qb)]


def exact_pairings(lattice: OLattice, X) -> list[list[FieldElement]]:
    """T(x) for a tuple given by coordinate rows."""
    A, B, den = lattice.exact_gram_parts()
    F = lattice.field
    Y = _as_objects(X)
    PA = Y @ A.astype(object) @ Y.T
    PB = Y @ B.astype(object) @ Y.T
    r = len(Y)
    return [[F(Fraction(PA[i, j]) / (2 * den), Fraction(PB[i, j]) / (2 * den)) for j in range(r)]
            for i in range(r)]


def q_values_per_place(lattice: OLattice, coords: np.ndarray) -> np.ndarray:
    """Floating q(sigma_i x) for each place, shape (N, d)."""
    out = []
    for i in range(1, lattice.space.d + 1):
        Bi = lattice.basis_at(i)
        G = lattice.space.embedded_gram(i)
        X = coords @ Bi.T
        out.append(0.5 * np.einsum("ij,jk,ik->i", X, G, X))
    return np.array(out).T


def write_enumeration_csv(path, lattice: OLattice, enum: Enumeration) -> None:
    d = lattice.space.d
    qs = q_values_per_place(lattice, enum.coords)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"y{j + 1}" for j in range(lattice.rank)] + ["Q_maj"] + [f"q_{i}" for i in range(1, d + 1)])
        for y, q, row in zip(enum.coords, enum.qmaj, qs):
            w.writerow([int(t) for t in y] + [repr(float(q))] + [repr(float(v)) for v in row])


# fibers --------------------------------------------------------------------

def _is_psd_matrix(T, field: TotallyRealField) -> bool:
    from .whittaker import embed_matrix, is_psd
    return all(is_psd(embed_matrix(T, j)) for j in range(1, field.degree + 1))


def fibers_with_T(lattice: OLattice, T, tau=(), bound: float | None = None) -> tuple[list[np.ndarray], bool]:
    """All tuples x in L^r with T(x) = T and Q_maj(x_j) <= bound for each j.

    Returns (tuples as integer coordinate arrays of shape (r, rank), complete).
    For a totally definite space the bound tr T_jj is forced and the search is
    complete.  With indefinite places the fiber is infinite and the caller's
    bound decides what is searched; the result is flagged incomplete.
    """
    space = lattice.space
    F = lattice.field
    T = [[parse_element(F, c) for c in row] for row in T]
    r = len(T)
    for i in range(r):
        for j in range(r):
            if T[i][j] != T[j][i]:
                raise ValueError("T is not symmetric")
    if space.e == 0:
        bounds = [float(sum(T[j][j].embeddings())) for j in range(r)]
        complete = True
        if not _is_psd_matrix(T, F):
            return [], True
    else:
        if bound is None:
            raise ValueError("indefinite lattices need an explicit bound")
        bounds = [bound] * r
        complete = False
        warnings.warn("T-fiber of an indefinite lattice is infinite; search truncated at the given bound",
                      IncompleteSearchWarning, stacklevel=2)
    M = total_majorant(lattice, tau)
    pools = []
    for j in range(r):
        enum = enumerate_majorant(M, bounds[j])
        qs = exact_q_values(lattice, enum.coords)
        pools.append([y for y, q in zip(enum.coords, qs) if q == T[j][j]])
    A, B, den = lattice.exact_gram_parts()
    Ao, Bo = A.astype(object), B.astype(object)
    target = [[(T[i][j].a * 2 * den, T[i][j].b * 2 * den) for j in range(r)] for i in range(r)]

    out: list[np.ndarray] = []

    def rec(chosen: list[np.ndarray]):
        j = len(chosen)
        if j == r:
            out.append(np.array(chosen))
            return
        for y in pools[j]:
            yo = y.astype(object)
            ok = True
            for i, x in enumerate(chosen):
                xo = x.astype(object)
                if (int(xo @ Ao @ yo), int(xo @ Bo @ yo)) != target[i][j]:
                    ok = False
                    break
            if ok:
                rec(chosen + [y])

    rec([])
    return out, complete


def dual_lattice(lattice: OLattice) -> OLattice:
    """Z-dual for the trace form tr_{F/Q} <,>."""
    G = lattice.trace_gram()
    n = len(G)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(G)]
    for c in range(n):
        p = next(r for r in range(c, n) if aug[r][c] != 0)
        aug[c], aug[p] = aug[p], aug[c]
        piv = aug[c][c]
        aug[c] = [v / piv for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    Ginv = [row[n:] for row in aug]
    basis = tuple(lattice.vector(Ginv[a]) for a in range(n))
    return OLattice(lattice.space, basis)


def same_lattice(a: OLattice, b: OLattice) -> bool:
    """Exact equality of the Z-spans."""
    if a.rank != b.rank:
        return False
    for lat_from, lat_to in ((a, b), (b, a)):
        coords = _coordinates_in(lat_to, lat_from.zbasis)
        if coords is None or any(c.denominator != 1 for row in coords for c in row):
            return False
    return True


def _coordinates_in(lattice: OLattice, vectors) -> list[list[Fraction]] | None:
    """Rational coordinates of F-vectors in the Z-basis (via a and b parts)."""
    def flat(v):
        out = []
        for c in v:
            out += [c.a, c.b] if lattice.space.d == 2 else [c.a]
        return out
    Bm = [flat(b) for b in lattice.zbasis]  # rank rows, rank columns
    n = len(Bm)
    rows = []
    for v in vectors:
        target = flat(v)
        # solve sum_a x_a Bm[a] = target
        aug = [[Bm[a][col] for a in range(n)] + [target[col]] for col in range(n)]
        for c in range(n):
            p = next((r for r in range(c, n) if aug[r][c] != 0), None)
            if p is None:
                return None
            aug[c], aug[p] = aug[p], aug[c]
            piv = aug[c][c]
            aug[c] = [x / piv for x in aug[c]]
            for r in range(n):
                if r != c and aug[r][c] != 0:
                    f = aug[r][c]
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
        rows.append([aug[r][n] for r in range(n)])
    return rows


def e8_lattice() -> OLattice:
    """E8 over Q in the even coordinate system (Gram = Cartan matrix)."""
    cartan = [
        [2, -1, 0, 0, 0, 0, 0, 0],
        [-1, 2, -1, 0, 0, 0, 0, 0],
        [0, -1, 2, -1, 0, 0, 0, -1],
        [0, 0, -1, 2, -1, 0, 0, 0],
        [0, 0, 0, -1, 2, -1, 0, 0],
        [0, 0, 0, 0, -1, 2, -1, 0],
        [0, 0, 0, 0, 0, -1, 2, 0],
        [0, 0, -1, 0, 0, 0, 0, 2],
    ]
    F = TotallyRealField(1)
    space = QuadraticSpace.from_entries(F, cartan, 0)
    return OLattice.standard(space)


def counting_exponent(bounds: Sequence[float], counts: Sequence[int]) -> float:
    """Least-squares slope of log(count) against log(bound)."""
    x = np.log(np.asarray(bounds, dtype=float))
    y = np.log(np.asarray(counts, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def count_levels(M: np.ndarray, bounds: Sequence[float]) -> list[int]:
    enum = enumerate_majorant(M, max(bounds))
    q = enum.qmaj
    return [int(np.sum(q <= b * (1 + INCLUSION_RTOL))) for b in bounds]

