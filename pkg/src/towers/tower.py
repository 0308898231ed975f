"""Nested tower data: side lengths a_n, the cubes S_n = [0, a_n)^{2d} and their errors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from polyconvex.boxes import Box
from shared.exact import exact_int

SOURCES = ("solenoid", "supplied")

Vector = tuple[Fraction, ...]


class TowerParameterError(ValueError):
    pass


class DomainError(ValueError):
    pass


class PartitionResourceError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics


class NoRoomError(ValueError):
    pass


class StageFitError(ValueError):
    pass


class BudgetViolationError(ValueError):
    pass


class ConditionDError(ValueError):
    pass


@dataclass(frozen=True)
class TowerData:
    """Side lengths a_1 < … < a_N of the towers S_nB_n over a ``dim`` = 2d dimensional action.

    ``source`` is "solenoid" for the exact kernel towers and "supplied" for
    towers handed to a sampled model, where the growth condition of the
    nested-tower construction must hold.
    """

    a: tuple[int, ...]
    dim: int = 2
    source: str = "supplied"

    def __post_init__(self) -> None:
        try:
            a = tuple(exact_int(entry) for entry in self.a)
        except ValueError as exc:
            raise TowerParameterError(f"tower sides must be integers: {exc}") from exc
        if not a:
            raise TowerParameterError("a tower needs at least one level")
        if any(entry < 1 for entry in a):
            raise TowerParameterError(f"tower sides must be positive integers, got {list(a)}")
        if self.dim < 2 or self.dim % 2:
            raise TowerParameterError(f"dim must be an even number >= 2, got {self.dim}")
        if self.source not in SOURCES:
            raise TowerParameterError(f"unknown tower source {self.source!r}")
        for n in range(1, len(a)):
            if a[n] % a[n - 1]:
                raise TowerParameterError(f"a_{n + 1}/a_{n} = {a[n]}/{a[n - 1]} is not an integer")
        object.__setattr__(self, "a", a)

    @property
    def depth(self) -> int:
        return len(self.a)

    @property
    def d(self) -> int:
        return self.dim // 2

    def side(self, n: int) -> int:
        if n < 1 or n > self.depth:
            raise DomainError(f"tower level {n} outside 1..{self.depth}")
        return self.a[n - 1]

    def ratio(self, n: int) -> int:
        """a_n / a_{n-1} for n >= 2."""
        return self.side(n) // self.side(n - 1)

    @property
    def ratio_sum(self) -> Fraction:
        return sum((Fraction(self.a[n - 1], self.a[n]) for n in range(1, self.depth)), Fraction(0))

    def growth_condition(self) -> bool:
        return self.ratio_sum < Fraction(1, 2)

    def box(self, n: int) -> Box:
        return Box(tuple((Fraction(0), Fraction(self.side(n))) for _ in range(self.dim)))

    def lattice(self, n: int, step: int = 1) -> Iterator[tuple[int, ...]]:
        """Integer vectors of S_n that are multiples of ``step``, lexicographically."""
        side = self.side(n)
        return itertools.product(range(0, side, step), repeat=self.dim)

    def to_record(self) -> dict:
        return {"a": list(self.a), "dim": self.dim, "source": self.source}


def linf(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return max(abs(Fraction(x) - Fraction(y)) for x, y in zip(u, v))
