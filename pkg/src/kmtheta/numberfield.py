"""Exact arithmetic in Q and real quadratic fields Q(sqrt D).

Elements are a + b*sqrt(D) with Fraction coordinates.  The two real
embeddings are ordered so that sigma_1(sqrt D) = +sqrt D.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

Rational = Union[int, Fraction]

_DEC = decimal.Context(prec=50)


def _squarefree(D: int) -> bool:
    k = 2
    while k * k <= D:
        if D % (k * k) == 0:
            return False
        k += 1
    return True


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, str)):
        return Fraction(v)
    if isinstance(v, float):
        raise TypeError("floats are not exact; pass int, str or Fraction")
    return Fraction(v)


@dataclass(frozen=True)
class TotallyRealField:
    degree: int
    D: int = 1

    def __post_init__(self):
        if self.degree == 1:
            if self.D != 1:
                raise ValueError("degree-1 field takes no D")
        elif self.degree == 2:
            if self.D <= 1 or not _squarefree(self.D):
                raise ValueError(f"D={self.D} must be a squarefree integer > 1")
        else:
            raise ValueError("only degree 1 and 2 are supported")

    @classmethod
    def rationals(cls) -> "TotallyRealField":
        return cls(1)

    @classmethod
    def quadratic(cls, D: int) -> "TotallyRealField":
        return cls(2, D)

    def __call__(self, a: Rational = 0, b: Rational = 0) -> "FieldElement":
        return FieldElement(self, _as_fraction(a), _as_fraction(b))

    @property
    def sqrt_d(self) -> "FieldElement":
        if self.degree != 2:
            raise ValueError("Q has no sqrt(D) generator")
        return FieldElement(self, Fraction(0), Fraction(1))

    def zero(self) -> "FieldElement":
        return self(0)

    def one(self) -> "FieldElement":
        return self(1)

    @property
    def discriminant(self) -> int:
        if self.degree == 1:
            return 1
        return self.D if self.D % 4 == 1 else 4 * self.D

    def integer_basis(self) -> list["FieldElement"]:
        if self.degree == 1:
            return [self(1)]
        if self.D % 4 == 1:
            return [self(1), self(Fraction(1, 2), Fraction(1, 2))]
        return [self(1), self(0, 1)]

    def codifferent_generator(self) -> "FieldElement":
        """1/sqrt(disc), which generates the inverse different."""
        if self.degree == 1:
            raise ValueError("codifferent generator is only defined for degree 2")
        c = 1 if self.D % 4 == 1 else 2
        # 1/(c sqrt D) = sqrt(D) / (c D)
        return self(0, Fraction(1, c * self.D))

    def to_json(self) -> dict:
        if self.degree == 1:
            return {"degree": 1}
        return {"degree": 2, "D": self.D}

    @classmethod
    def from_json(cls, obj: dict) -> "TotallyRealField":
        deg = int(obj["degree"])
        if deg == 1:
            return cls(1)
        return cls(2, int(obj["D"]))


@dataclass(frozen=True)
class FieldElement:
    field: TotallyRealField
    a: Fraction
    b: Fraction = Fraction(0)

    def __post_init__(self):
        if self.field.degree == 1 and self.b != 0:
            raise ValueError("b must vanish over Q")

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("field mismatch")
            return other
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, Fraction(other))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, -self.a, -self.b)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FieldElement(self.field, self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        D = self.field.D
        return FieldElement(self.field, self.a * o.a + D * self.b * o.b,
                            self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.field.D * self.b * self.b

    def conjugate(self) -> "FieldElement":
        return FieldElement(self.field, self.a, -self.b)

    def inverse(self) -> "FieldElement":
        N = self.norm()
        if N == 0:
            raise ZeroDivisionError("inverse of zero")
        return FieldElement(self.field, self.a / N, -self.b / N)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field == other.field and self.a == other.a and self.b == other.b
        if isinstance(other, (int, Fraction)):
            return self.b == 0 and self.a == other
        return NotImplemented

    def __hash__(self):
        return hash((self.field, self.a, self.b))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def is_rational(self) -> bool:
        return self.b == 0

    def __repr__(self):
        if self.field.degree == 1 or self.b == 0:
            return str(self.a)
        return f"{self.a}+{self.b}*sqrt({self.field.D})"

    # embeddings -------------------------------------------------------
    def embed(self, i: int) -> float:
        return embed(self, i)

    def embeddings(self) -> tuple[float, ...]:
        return tuple(embed(self, i) for i in range(1, self.field.degree + 1))

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b)}


def _dec(x: Fraction) -> decimal.Decimal:
    return _DEC.divide(decimal.Decimal(x.numerator), decimal.Decimal(x.denominator))


@lru_cache(maxsize=65536)
def _embed_cached(a: Fraction, b: Fraction, D: int, sign: int) -> float:
    if b == 0:
        return float(a)
    s = sign * b
    if a == 0 or (a > 0) == (s > 0):
        val = _DEC.add(_dec(a), _DEC.multiply(_dec(s), _DEC.sqrt(decimal.Decimal(D))))
        return float(val)
    # cancellation: a + s sqrt D = (a^2 - s^2 D) / (a - s sqrt D)
    num = a * a - s * s * D
    den = _DEC.subtract(_dec(a), _DEC.multiply(_dec(s), _DEC.sqrt(decimal.Decimal(D))))
    return float(_DEC.divide(_dec(num), den))


def embed(x: FieldElement, i: int) -> float:
    """sigma_i(x) as a correctly rounded double."""
    d = x.field.degree
    if not 1 <= i <= d:
        raise IndexError(f"embedding index {i} out of range 1..{d}")
    sign = 1 if i == 1 else -1
    return _embed_cached(x.a, x.b, x.field.D, sign)


def is_totally_positive(x: FieldElement) -> bool:
    a, b = x.a, x.b
    if b == 0:
        return a > 0
    # need a > |b| sqrt D
    return a > 0 and a * a - b * b * x.field.D > 0


def trace(x: FieldElement) -> Fraction:
    return x.a * x.field.degree


def parse_element(field: TotallyRealField, obj) -> FieldElement:
    """Accept {"a": "p/q", "b": "p/q"}, an int, or a rational string."""
    if isinstance(obj, FieldElement):
        return obj
    if isinstance(obj, dict):
        return field(_as_fraction(str(obj.get("a", 0))), _as_fraction(str(obj.get("b", 0))))
    if isinstance(obj, bool):
        raise TypeError("booleans are not field elements")
    if isinstance(obj, int):
        return field(obj)
    if isinstance(obj, str):
        return field(Fraction(obj))
    raise TypeError(f"cannot read a field element from {obj!r}")

