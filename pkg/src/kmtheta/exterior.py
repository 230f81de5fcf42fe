"""Exterior algebra on the frame {w_{1,s}, w_{2,s} : s = 1..n}.

A monomial is a bitmask: bit s-1 for w_{1,s}, bit n+s-1 for w_{2,s}.  The
canonical order of a monomial is increasing bit index, i.e. all w_1's in
increasing s and then all w_2's.  Coefficients are stored densely.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np


def _sign(a: int, b: int) -> int:
    a >>= 1
    s = 0
    while a:
        s += bin(a & b).count("1")
        a >>= 1
    return -1 if s & 1 else 1


@lru_cache(maxsize=16)
def _wedge_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    N = 1 << (2 * n)
    sign = np.zeros((N, N))
    target = np.zeros((N, N), dtype=np.int64)
    for a in range(N):
        for b in range(N):
            if a & b == 0:
                sign[a, b] = _sign(a, b)
                target[a, b] = a | b
    return sign, target


def generator_bit(n: int, which: int, s: int) -> int:
    if which not in (1, 2) or not 1 <= s <= n:
        raise IndexError("generator out of range")
    return 1 << (s - 1 + (which - 1) * n)


def ordered_mask(n: int, gens: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Mask and sign of the ordered monomial w_{g1} ^ w_{g2} ^ ... (0 sign if repeated)."""
    mask, sgn = 0, 1
    for which, s in gens:
        bit = generator_bit(n, which, s)
        if mask & bit:
            return 0, 0
        sgn *= _sign(mask, bit)
        mask |= bit
    return mask, sgn


def mask_to_sets(n: int, mask: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    s1 = tuple(s + 1 for s in range(n) if mask >> s & 1)
    s2 = tuple(s + 1 for s in range(n) if mask >> (n + s) & 1)
    return s1, s2


def sets_to_mask(n: int, s1: Iterable[int], s2: Iterable[int]) -> int:
    m = 0
    for s in s1:
        m |= generator_bit(n, 1, s)
    for s in s2:
        m |= generator_bit(n, 2, s)
    return m


def key_of(n: int, mask: int) -> str:
    s1, s2 = mask_to_sets(n, mask)
    return ",".join(map(str, s1)) + "|" + ",".join(map(str, s2))


def mask_of_key(n: int, key: str) -> int:
    left, right = key.split("|")
    s1 = [int(t) for t in left.split(",") if t]
    s2 = [int(t) for t in right.split(",") if t]
    return sets_to_mask(n, s1, s2)


class ExteriorFormValue:
    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: np.ndarray | None = None):
        self.n = n
        N = 1 << (2 * n)
        if coeffs is None:
            coeffs = np.zeros(N)
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (N,):
            raise ValueError("coefficient vector has the wrong length")
        self.coeffs = coeffs

    @classmethod
    def scalar(cls, n: int, c: complex = 1.0) -> "ExteriorFormValue":
        v = np.zeros(1 << (2 * n), dtype=np.result_type(c, float))
        v[0] = c
        return cls(n, v)

    @classmethod
    def monomial(cls, n: int, gens: Sequence[tuple[int, int]], c: float = 1.0) -> "ExteriorFormValue":
        mask, sgn = ordered_mask(n, gens)
        v = np.zeros(1 << (2 * n))
        if sgn:
            v[mask] = sgn * c
        return cls(n, v)

    def wedge(self, other: "ExteriorFormValue") -> "ExteriorFormValue":
        if other.n != self.n:
            raise ValueError("frame size mismatch")
        sign, target = _wedge_tables(self.n)
        contrib = np.outer(self.coeffs, other.coeffs) * sign
        out = np.zeros(len(self.coeffs), dtype=contrib.dtype)
        np.add.at(out, target.ravel(), contrib.ravel())
        return ExteriorFormValue(self.n, out)

    def __xor__(self, other):
        return self.wedge(other)

    def __add__(self, other: "ExteriorFormValue"):
        return ExteriorFormValue(self.n, self.coeffs + other.coeffs)

    def __sub__(self, other: "ExteriorFormValue"):
        return ExteriorFormValue(self.n, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return ExteriorFormValue(self.n, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ExteriorFormValue(self.n, -self.coeffs)

    def coefficient(self, s1: Iterable[int] = (), s2: Iterable[int] = ()):
        return self.coeffs[sets_to_mask(self.n, s1, s2)]

    def coefficient_of(self, gens: Sequence[tuple[int, int]]):
        """Coefficient on the ordered monomial w_{g1} ^ ... (sign absorbed)."""
        mask, sgn = ordered_mask(self.n, gens)
        return sgn * self.coeffs[mask] if sgn else 0.0

    def degrees(self) -> set[tuple[int, int]]:
        out = set()
        for mask in np.nonzero(self.coeffs)[0]:
            s1, s2 = mask_to_sets(self.n, int(mask))
            out.add((len(s1), len(s2)))
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if len(self.coeffs) else 0.0

    def restrict(self, keep: Iterable[int]) -> "ExteriorFormValue":
        """Zero out monomials involving any s outside `keep` (either w_1 or w_2)."""
        keep = set(keep)
        out = self.coeffs.copy()
        for mask in range(len(out)):
            s1, s2 = mask_to_sets(self.n, mask)
            if not set(s1) <= keep or not set(s2) <= keep:
                out[mask] = 0
        return ExteriorFormValue(self.n, out)

    def to_json(self) -> dict:
        out = {}
        for mask in np.nonzero(self.coeffs)[0]:
            c = self.coeffs[mask]
            out[key_of(self.n, int(mask))] = [float(c.real), float(c.imag)] if np.iscomplexobj(c) else float(c)
        return out

    def __repr__(self):
        return f"ExteriorFormValue(n={self.n}, {self.to_json()})"


@lru_cache(maxsize=32)
def _product_index(n: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """For w_{1 i1} w_{2 j1} ... w_{1 ir} w_{2 jr}: canonical mask and sign per index tuple."""
    masks, signs = [], []
    for idx in product(range(1, n + 1), repeat=2 * r):
        gens = []
        for k in range(r):
            gens.append((1, idx[2 * k]))
            gens.append((2, idx[2 * k + 1]))
        m, s = ordered_mask(n, gens)
        masks.append(m)
        signs.append(s)
    return np.array(masks, dtype=np.int64), np.array(signs, dtype=float)


def wedge_of_11(mats: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Batched wedge of (1,1)-forms sum_ij C[i,j] w_{1i} ^ w_{2j}.

    Each entry of `mats` has shape (N, n, n); returns dense coefficients (N, 4^n).
    """
    r = len(mats)
    N = mats[0].shape[0] if r else 1
    out = np.zeros((N, 1 << (2 * n)), dtype=np.result_type(*mats) if r else float)
    if r == 0:
        out[:, 0] = 1.0
        return out
    if r > n:
        return out
    prod = mats[0].reshape(N, n * n)
    for C in mats[1:]:
        prod = (prod[:, :, None] * C.reshape(N, 1, n * n)).reshape(N, -1)
    masks, signs = _product_index(n, r)
    keep = signs != 0
    contrib = prod[:, keep] * signs[keep]
    for col, m in zip(contrib.T, masks[keep]):
        out[:, m] += col
    return out


class PlacesFormValue:
    """Element of the tensor product over indefinite places of per-place exterior algebras.

    Stored as a dense array with one axis per place, so sums stay exact.
    """

    __slots__ = ("n", "tensor")

    def __init__(self, n: int, tensor: np.ndarray):
        self.n = n
        self.tensor = np.asarray(tensor)

    @property
    def places(self) -> int:
        return self.tensor.ndim

    @classmethod
    def from_places(cls, forms: Sequence[ExteriorFormValue]) -> "PlacesFormValue":
        if not forms:
            return cls(0, np.array(1.0))
        n = forms[0].n
        t = forms[0].coeffs
        for f in forms[1:]:
            t = np.multiply.outer(t, f.coeffs)
        return cls(n, t)

    @classmethod
    def zero(cls, n: int, e: int, dtype=float) -> "PlacesFormValue":
        return cls(n, np.zeros((1 << (2 * n),) * e, dtype=dtype))

    def __add__(self, other: "PlacesFormValue"):
        return PlacesFormValue(self.n, self.tensor + other.tensor)

    def __sub__(self, other: "PlacesFormValue"):
        return PlacesFormValue(self.n, self.tensor - other.tensor)

    def __mul__(self, c):
        return PlacesFormValue(self.n, self.tensor * c)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.tensor))) if self.tensor.size else 0.0

    def place_factor(self, i: int) -> ExteriorFormValue:
        """For a pure tensor: the factor at place i (1-based), up to the other factors' scale."""
        t = np.moveaxis(self.tensor, i - 1, 0).reshape(self.tensor.shape[i - 1], -1)
        col = np.argmax(np.abs(t).max(axis=0))
        return ExteriorFormValue(self.n, t[:, col])

    def items(self):
        it = np.nditer(self.tensor, flags=["multi_index", "refs_ok"])
        for c in it:
            val = self.tensor[it.multi_index]
            if val != 0:
                yield it.multi_index, val

    def key(self, idx) -> str:
        return ";".join(key_of(self.n, int(m)) for m in idx)

    def to_json(self) -> dict:
        out = {}
        for idx, c in self.items():
            c = complex(c)
            out[self.key(idx)] = [c.real, c.imag] if np.iscomplexobj(self.tensor) else c.real
        return out
