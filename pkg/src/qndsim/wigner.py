"""Exact Wigner 6j symbols for small half-integer arguments.

Angular momenta are carried as :class:`HalfInt` (twice the quantum number,
stored as an integer) so that every triangle and parity test is integer
arithmetic. The Racah single sum is evaluated in :class:`fractions.Fraction`;
only the final square root touches floating point.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt
from typing import Union

__all__ = [
    "HalfInt",
    "triangle",
    "wigner_6j",
    "wigner_6j_squared",
]


@dataclass(frozen=True, order=True)
class HalfInt:
    """A nonnegative integer or half-integer, stored as ``2 * j``."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int):
            raise TypeError("twice_value must be an int")
        if self.twice_value < 0:
            raise ValueError(f"angular momentum must be >= 0, got {self.twice_value}/2")

    @classmethod
    def of(cls, value: "HalfIntLike") -> "HalfInt":
        """Build from an int, Fraction, float, ``"7/2"`` string or HalfInt."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            value = Fraction(value.strip())
        twice = Fraction(value) * 2
        if twice.denominator != 1:
            raise ValueError(f"{value!r} is not an integer or half-integer")
        return cls(int(twice))

    @property
    def value(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    @property
    def multiplicity(self) -> int:
        """2j + 1."""
        return self.twice_value + 1

    def __float__(self) -> float:
        return self.twice_value / 2

    def __str__(self) -> str:
        if self.twice_value % 2:
            return f"{self.twice_value}/2"
        return str(self.twice_value // 2)


HalfIntLike = Union[HalfInt, int, float, Fraction, str]


def triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool:
    """True if (a, b, c) can couple: |a-b| <= c <= a+b with integer perimeter."""
    ta, tb, tc = a.twice_value, b.twice_value, c.twice_value
    if (ta + tb + tc) % 2:
        return False
    return abs(ta - tb) <= tc <= ta + tb


def _delta_sq(ta: int, tb: int, tc: int) -> Fraction:
    # triangle coefficient squared, arguments are twice-values
    return Fraction(
        factorial((ta + tb - tc) // 2)
        * factorial((ta - tb + tc) // 2)
        * factorial((-ta + tb + tc) // 2),
        factorial((ta + tb + tc) // 2 + 1),
    )


@lru_cache(maxsize=4096)
def _racah(t: tuple[int, ...]) -> tuple[Fraction, Fraction]:
    """Return (product of squared triangle coefficients, Racah sum)."""
    j1, j2, j3, j4, j5, j6 = t
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    prefactor = Fraction(1)
    for triad in triads:
        prefactor *= _delta_sq(*triad)

    # all sums below are even because every triad has integer perimeter
    alphas = [sum(triad) // 2 for triad in triads]
    betas = [(j1 + j2 + j4 + j5) // 2, (j2 + j3 + j5 + j6) // 2, (j3 + j1 + j6 + j4) // 2]
    total = Fraction(0)
    for k in range(max(alphas), min(betas) + 1):
        denom = 1
        for a in alphas:
            denom *= factorial(k - a)
        for b in betas:
            denom *= factorial(b - k)
        total += Fraction((-1) ** k * factorial(k + 1), denom)
    return prefactor, total


def _twice(args) -> tuple[int, ...] | None:
    hs = [HalfInt.of(x) for x in args]
    j1, j2, j3, j4, j5, j6 = hs
    for triad in ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)):
        if not triangle(*triad):
            return None
    return tuple(h.twice_value for h in hs)


def wigner_6j_squared(a, b, c, d, e, f) -> Fraction:
    """Exact square of the 6j symbol {a b c; d e f} as a Fraction.

    Zero whenever one of the four triangle conditions fails.
    """
    t = _twice((a, b, c, d, e, f))
    if t is None:
        return Fraction(0)
    prefactor, total = _racah(t)
    return prefactor * total * total


def wigner_6j(a, b, c, d, e, f) -> float:
    """Wigner 6j symbol {a b c; d e f} via the Racah single-sum formula.

    Arguments may be ints, Fractions, ``"n/2"`` strings or :class:`HalfInt`.

    >>> wigner_6j("1/2", 4, "7/2", 5, "3/2", 1) ** 2  # doctest: +ELLIPSIS
    0.02777...
    """
    t = _twice((a, b, c, d, e, f))
    if t is None:
        return 0.0
    prefactor, total = _racah(t)
    if total == 0:
        return 0.0
    sign = 1.0 if total > 0 else -1.0
    # sqrt of the exact rational, then the exact |sum|
    return sign * sqrt(prefactor) * float(abs(total))
