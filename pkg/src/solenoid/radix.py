from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from shared.exact import exact_int


class InvalidRadixError(ValueError):
    pass


class DepthError(ValueError):
    pass


@dataclass(frozen=True)
class RadixSequence:
    """Radix data r_1..r_N of a finite-depth solenoid in ``dim`` = 2d real dimensions.

    ``R[n-1]`` is the cumulative product R_n = r_1·…·r_n; ``modulus(0)`` is 1.
    """

    r: tuple[int, ...]
    dim: int = 2
    R: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        try:
            r = tuple(exact_int(entry) for entry in self.r)
        except ValueError as exc:
            raise InvalidRadixError(f"radix entries must be integers: {exc}") from exc
        if not r:
            raise InvalidRadixError("radix list cannot be empty")
        bad = [entry for entry in r if entry < 2]
        if bad:
            raise InvalidRadixError(f"radix entries must be >= 2, got {bad}")
        if self.dim < 2 or self.dim % 2:
            raise InvalidRadixError(f"dim must be an even number >= 2, got {self.dim}")
        cumulative = []
        product = 1
        for entry in r:
            product *= entry
            cumulative.append(product)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "R", tuple(cumulative))

    @property
    def length(self) -> int:
        return len(self.r)

    @property
    def d(self) -> int:
        return self.dim // 2

    @property
    def sum_inv(self) -> Fraction:
        return sum((Fraction(1, entry) for entry in self.r), Fraction(0))

    def modulus(self, n: int) -> int:
        """R_n for 0 <= n <= length."""
        if n < 0 or n > self.length:
            raise DepthError(f"level {n} outside 0..{self.length}")
        return 1 if n == 0 else self.R[n - 1]

    def radix(self, n: int) -> int:
        """r_n for 1 <= n <= length."""
        if n < 1 or n > self.length:
            raise DepthError(f"radix index {n} outside 1..{self.length}")
        return self.r[n - 1]

    def to_record(self) -> dict:
        return {"r": list(self.r), "dim": self.dim}

    @classmethod
    def from_record(cls, record: dict) -> "RadixSequence":
        return cls(tuple(record["r"]), dim=int(record.get("dim", 2)))


def radix_products(r: Sequence[int], dim: int = 2) -> RadixSequence:
    return RadixSequence(tuple(r), dim=dim)
