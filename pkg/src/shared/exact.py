"""Exact rational helpers.

Rationals travel through artifacts and the CLI as fraction strings
(``"3/2"``, ``"-7"``, also decimal literals such as ``"0.25"``). Floats are
rejected on input because they silently carry binary rounding.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath

RationalLike = Union[int, Fraction, str]


def parse_fraction(value: RationalLike) -> Fraction:
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty rational string")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise ValueError(f"expected an exact rational, got {type(value).__name__}")


def exact_int(value: RationalLike) -> int:
    """``value`` as an int; ValueError unless it is a whole rational."""
    if isinstance(value, numbers.Integral) and not isinstance(value, bool):
        return int(value)
    q = parse_fraction(value)
    if q.denominator != 1:
        raise ValueError(f"{value!r} is not an integer")
    return q.numerator


def format_fraction(value: Fraction) -> str:
    return str(Fraction(value))


def fraction_tuple(values: Iterable[RationalLike]) -> tuple[Fraction, ...]:
    return tuple(parse_fraction(v) for v in values)


def format_tuple(values: Sequence[Fraction]) -> list[str]:
    return [format_fraction(v) for v in values]


def to_mpf(value: Fraction) -> mpmath.mpf:
    """Round a rational to the current mpmath precision."""
    value = Fraction(value)
    return mpmath.mpf(value.numerator) / value.denominator


@dataclass(frozen=True)
class ComplexRational:
    """A Gaussian rational re + i·im."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def of(cls, value: "ComplexRational | RationalLike | Sequence[RationalLike]") -> "ComplexRational":
        if isinstance(value, ComplexRational):
            return value
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError("complex rational needs [re, im]")
            return cls(parse_fraction(value[0]), parse_fraction(value[1]))
        return cls(parse_fraction(value), Fraction(0))

    def __add__(self, other: "ComplexRational") -> "ComplexRational":
        other = ComplexRational.of(other)
        return ComplexRational(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexRational") -> "ComplexRational":
        other = ComplexRational.of(other)
        return ComplexRational(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "ComplexRational":
        return ComplexRational(-self.re, -self.im)

    def scaled(self, factor: RationalLike) -> "ComplexRational":
        factor = parse_fraction(factor)
        return ComplexRational(self.re * factor, self.im * factor)

    def abs_squared(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def to_complex(self) -> complex:
        return complex(float(self.re), float(self.im))

    def to_mpc(self) -> mpmath.mpc:
        return mpmath.mpc(to_mpf(self.re), to_mpf(self.im))

    def to_record(self) -> list[str]:
        return [format_fraction(self.re), format_fraction(self.im)]


ZERO = ComplexRational()
