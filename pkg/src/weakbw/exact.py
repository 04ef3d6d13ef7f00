"""Exact rationals, represented reals and the l2 data model.

Reals are precision-indexed rational approximation functions: ``x.approx(k)``
is a rational within ``2**-k`` of the real it names.  Points of l2 are
precision-indexed families of finitely supported rational vectors with the
same ``2**-k`` Cauchy contract.  No floating point is used anywhere.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Callable, Iterable, Sequence, Union

Rat = Fraction

_RAT_RE = re.compile(r"^\s*(-?\d+)(?:/(\d+))?\s*$")


def parse_rat(text: str) -> Fraction:
    """Parse ``"p/q"`` or ``"p"``; the denominator must be positive."""
    m = _RAT_RE.match(text)
    if m is None:
        raise ValueError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator: {text!r}")
    return Fraction(num, den)


def format_rat(q: Fraction) -> str:
    return str(Fraction(q))


def pow2(k: int) -> Fraction:
    """2**k as an exact rational (k may be negative)."""
    return Fraction(1 << k) if k >= 0 else Fraction(1, 1 << -k)


def ceil_log2(q: Fraction) -> int:
    """Smallest s >= 0 with 2**s >= |q|."""
    q = abs(Fraction(q))
    n = -(-q.numerator // q.denominator)
    return (n - 1).bit_length() if n > 1 else 0


def sqrt_floor(q: Fraction, m: int) -> Fraction:
    """Dyadic lower approximation of sqrt(q) with error below 2**-m (q >= 0)."""
    if q < 0:
        raise ValueError("sqrt of a negative rational")
    scaled = (q.numerator << (2 * m)) // q.denominator
    return Fraction(isqrt(scaled), 1 << m)


def sqrt_ceil_bound(q: Fraction, m: int = 32) -> Fraction:
    """A rational upper bound on sqrt(q), exact when q is a perfect square."""
    r = sqrt_floor(q, m)
    return r if r * r == q else r + pow2(-m)


# --------------------------------------------------------------------------
# represented reals


class CReal:
    """A real number given by rational approximations ``approx(k)``.

    Contract: ``|x - approx(k)| <= 2**-k`` for every natural ``k``.
    """

    __slots__ = ("_fn", "_cache", "label")

    def __init__(self, fn: Callable[[int], Fraction], label: str = ""):
        self._fn = fn
        self._cache: dict[int, Fraction] = {}
        self.label = label

    def approx(self, k: int) -> Fraction:
        try:
            return self._cache[k]
        except KeyError:
            q = Fraction(self._fn(k))
            self._cache[k] = q
            return q

    @classmethod
    def from_rat(cls, q) -> "CReal":
        q = Fraction(q)
        return cls(lambda k: q, label=str(q))

    def __add__(self, other: "CReal") -> "CReal":
        other = _as_creal(other)
        return CReal(lambda k: self.approx(k + 1) + other.approx(k + 1))

    __radd__ = __add__

    def __sub__(self, other: "CReal") -> "CReal":
        other = _as_creal(other)
        return CReal(lambda k: self.approx(k + 1) - other.approx(k + 1))

    def __neg__(self) -> "CReal":
        return CReal(lambda k: -self.approx(k))

    def mul_rat(self, q) -> "CReal":
        q = Fraction(q)
        if q == 0:
            return CReal.from_rat(0)
        s = ceil_log2(q)
        return CReal(lambda k: q * self.approx(k + s))

    def sqrt(self) -> "CReal":
        """Square root of a nonnegative real (caller's obligation)."""

        def fn(k: int) -> Fraction:
            a = max(self.approx(2 * k + 2), Fraction(0))
            return sqrt_floor(a, k + 1)

        return CReal(fn)

    def __repr__(self) -> str:
        return f"CReal({self.label or self.approx(20)!s})"


def _as_creal(x) -> CReal:
    return x if isinstance(x, CReal) else CReal.from_rat(x)


def creal_arith(op: str, *args) -> CReal:
    """Dispatch form of the CReal operations: add, sub, mul_by_rat, sqrt_nonneg."""
    if op == "add":
        return _as_creal(args[0]) + _as_creal(args[1])
    if op == "sub":
        return _as_creal(args[0]) - _as_creal(args[1])
    if op == "mul_by_rat":
        return _as_creal(args[0]).mul_rat(args[1])
    if op == "sqrt_nonneg":
        return _as_creal(args[0]).sqrt()
    raise ValueError(f"unknown CReal op {op!r}")


class Cmp(enum.Enum):
    LT = "LT"
    GT = "GT"
    NEAR = "NEAR"


def cmp_gap(x: CReal, y: CReal, k: int) -> Cmp:
    """Gapped comparison.

    LT means x < y, GT means x > y, NEAR means |x - y| <= 2**(2-k).
    """
    d = _as_creal(y).approx(k) - _as_creal(x).approx(k)
    slack = pow2(1 - k)
    if d > slack:
        return Cmp.LT
    if d < -slack:
        return Cmp.GT
    return Cmp.NEAR


# --------------------------------------------------------------------------
# the dense subspace


class FinVec:
    """Finitely supported rational vector <r_0, ..., r_m>, either m = 0 or r_m != 0."""

    __slots__ = ("coords",)

    def __init__(self, coords: Iterable = (0,)):
        cs = [Fraction(c) for c in coords]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [Fraction(0)]
        self.coords: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def from_dict(cls, entries: dict[int, Fraction]) -> "FinVec":
        if not entries:
            return cls()
        out = [Fraction(0)] * (max(entries) + 1)
        for j, v in entries.items():
            out[j] = Fraction(v)
        return cls(out)

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, j: int) -> Fraction:
        return self.coords[j] if 0 <= j < len(self.coords) else Fraction(0)

    def __eq__(self, other) -> bool:
        return isinstance(other, FinVec) and self.coords == other.coords

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        return "<" + ", ".join(str(c) for c in self.coords) + ">"

    def __add__(self, other: "FinVec") -> "FinVec":
        n = max(len(self), len(other))
        return FinVec(self[i] + other[i] for i in range(n))

    def __sub__(self, other: "FinVec") -> "FinVec":
        n = max(len(self), len(other))
        return FinVec(self[i] - other[i] for i in range(n))

    def __neg__(self) -> "FinVec":
        return FinVec(-c for c in self.coords)

    def scale(self, q) -> "FinVec":
        q = Fraction(q)
        if q == 0:
            return FinVec()
        return FinVec(q * c for c in self.coords)

    def inner(self, other: "FinVec") -> Fraction:
        return sum((a * b for a, b in zip(self.coords, other.coords)), Fraction(0))

    def norm_sq(self) -> Fraction:
        return self.inner(self)

    def is_normalized(self) -> bool:
        return len(self.coords) == 1 or self.coords[-1] != 0

    def support(self) -> list[int]:
        return [j for j, c in enumerate(self.coords) if c != 0]

    def to_json(self) -> list[str]:
        return [format_rat(c) for c in self.coords]

    @classmethod
    def from_json(cls, items: Sequence[str]) -> "FinVec":
        return cls(parse_rat(s) if isinstance(s, str) else Fraction(s) for s in items)


def basis(n: int) -> FinVec:
    """Canonical basis vector e_n = <0, ..., 0, 1> with n leading zeros."""
    if n < 0:
        raise ValueError("basis index must be natural")
    return FinVec([0] * n + [1])


def vec_arith(op: str, u: FinVec, v: Union[FinVec, Fraction, int]) -> FinVec:
    if op == "add":
        return u + v
    if op == "sub":
        return u - v
    if op == "scale":
        # scale(q, u) with the scalar first is accepted too
        if isinstance(u, FinVec):
            return u.scale(v)
        return v.scale(u)
    raise ValueError(f"unknown vector op {op!r}")


def inner_fin(u: FinVec, v: FinVec) -> Fraction:
    return u.inner(v)


# --------------------------------------------------------------------------
# completion points


class PrecisionExceeded(ValueError):
    """A stored point was asked for a precision it does not carry."""


class L2Point:
    """A point of l2: ``stage(k)`` is a FinVec within 2**-k of the point.

    ``norm_bound`` is a rational upper bound on the norm; it drives the
    modulus of the continuously extended inner product.
    """

    def __init__(
        self,
        stage: Callable[[int], FinVec],
        norm_bound,
        coord: Callable[[int, int], Fraction] | None = None,
        label: str = "",
    ):
        self._stage_fn = stage
        self._coord_fn = coord
        self._stages: dict[int, FinVec] = {}
        self.norm_bound = Fraction(norm_bound)
        self.label = label

    def stage(self, k: int) -> FinVec:
        v = self._stages.get(k)
        if v is None:
            v = self._stage_fn(k)
            self._stages[k] = v
        return v

    def coord(self, j: int, k: int) -> Fraction:
        """Rational within 2**-k of <e_j, x>."""
        if self._coord_fn is not None:
            return self._coord_fn(j, k)
        return self.stage(k)[j]

    def coordinate(self, j: int) -> CReal:
        return CReal(lambda k: self.coord(j, k))

    def __repr__(self) -> str:
        return f"L2Point({self.label or self.stage(8)!r})"


def embed(v: FinVec) -> L2Point:
    """Dense-subspace vector as a constant-stage completion point."""
    return L2Point(lambda k: v, sqrt_ceil_bound(v.norm_sq()), label=repr(v))


def l2_inner(x: L2Point, y: L2Point) -> CReal:
    s = ceil_log2(x.norm_bound + y.norm_bound + 1)
    return CReal(lambda k: x.stage(k + s).inner(y.stage(k + s)))


def l2_norm(x: L2Point) -> CReal:
    return l2_inner(x, x).sqrt()


def l2_sub(x: L2Point, y: L2Point) -> L2Point:
    return L2Point(
        lambda k: x.stage(k + 1) - y.stage(k + 1),
        x.norm_bound + y.norm_bound,
        coord=lambda j, k: x.coord(j, k + 1) - y.coord(j, k + 1),
    )


def l2_dist(x: L2Point, y: L2Point) -> CReal:
    return l2_norm(l2_sub(x, y))


def l2_scale(x: L2Point, q) -> L2Point:
    q = Fraction(q)
    if q == 0:
        return embed(FinVec())
    s = ceil_log2(q)
    return L2Point(
        lambda k: x.stage(k + s).scale(q),
        abs(q) * x.norm_bound,
        coord=lambda j, k: q * x.coord(j, k + s),
    )


def map_stages(x: L2Point, fn: Callable[[FinVec], FinVec], coord_filter=None) -> L2Point:
    """Apply a 1-Lipschitz linear map stagewise (the modulus is preserved)."""
    coord = None
    if coord_filter is not None:
        coord = lambda j, k: x.coord(j, k) if coord_filter(j) else Fraction(0)
    return L2Point(lambda k: fn(x.stage(k)), x.norm_bound, coord=coord)


@dataclass
class BoundedSeq:
    """A sequence of l2 points with a common rational norm bound.

    ``certificate`` optionally carries the annotations that let certified
    oracles answer questions about the sequence's tail exactly.
    """

    item_fn: Callable[[int], L2Point]
    bound: Fraction = Fraction(1)
    certificate: object = None
    label: str = ""
    _items: dict = field(default_factory=dict, repr=False)

    def item(self, i: int) -> L2Point:
        x = self._items.get(i)
        if x is None:
            x = self.item_fn(i)
            self._items[i] = x
        return x

    def __getitem__(self, i: int) -> L2Point:
        return self.item(i)
