from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from shared.exact import RationalLike, exact_int, fraction_tuple
from solenoid.radix import DepthError, RadixSequence

Coordinates = tuple[Fraction, ...]


class CompatibilityError(ValueError):
    pass


def _reduce(coords: Sequence[Fraction], modulus: int) -> Coordinates:
    return tuple(Fraction(c) % modulus for c in coords)


@dataclass(frozen=True)
class SolenoidPoint:
    """Finite-depth element of the inverse limit of the tori R^{2d} / R_n Z^{2d}.

    ``levels[n-1]`` is the projection t_n in [0, R_n)^{2d}. Consecutive levels
    satisfy t_{n+1} ≡ t_n (mod R_n) exactly.
    """

    radix: RadixSequence
    levels: tuple[Coordinates, ...]

    def __post_init__(self) -> None:
        levels = tuple(tuple(Fraction(c) for c in level) for level in self.levels)
        if not levels:
            raise DepthError("a point needs at least one level")
        if len(levels) > self.radix.length:
            raise DepthError(f"depth {len(levels)} exceeds radix length {self.radix.length}")
        for n, level in enumerate(levels, start=1):
            if len(level) != self.radix.dim:
                raise CompatibilityError(f"level {n} has {len(level)} coordinates, expected {self.radix.dim}")
            modulus = self.radix.modulus(n)
            if any(c < 0 or c >= modulus for c in level):
                raise CompatibilityError(f"level {n} coordinates must lie in [0, {modulus})")
        for n in range(1, len(levels)):
            if _reduce(levels[n], self.radix.modulus(n)) != levels[n - 1]:
                raise CompatibilityError(f"levels {n} and {n + 1} are not compatible")
        object.__setattr__(self, "levels", levels)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def dim(self) -> int:
        return self.radix.dim

    def level(self, n: int) -> Coordinates:
        if n < 1 or n > self.depth:
            raise DepthError(f"level {n} outside 1..{self.depth}")
        return self.levels[n - 1]

    @classmethod
    def identity(cls, radix: RadixSequence, depth: int) -> "SolenoidPoint":
        zero = tuple(Fraction(0) for _ in range(radix.dim))
        return cls(radix, tuple(zero for _ in range(depth)))


@dataclass(frozen=True)
class TileAddress:
    """Position of level n+1 inside the tiling of S_{n+1} by copies of S_n."""

    level: int
    index: tuple[int, ...]
    offset: Coordinates

    def lift(self, radix: RadixSequence) -> Coordinates:
        modulus = radix.modulus(self.level)
        return tuple(z + i * modulus for z, i in zip(self.offset, self.index))


def translate(p: SolenoidPoint, v: Sequence[RationalLike]) -> SolenoidPoint:
    shift = fraction_tuple(v)
    if len(shift) != p.dim:
        raise ValueError(f"translation has {len(shift)} coordinates, expected {p.dim}")
    levels = tuple(
        tuple((t + s) % p.radix.modulus(n) for t, s in zip(level, shift))
        for n, level in enumerate(p.levels, start=1)
    )
    return SolenoidPoint(p.radix, levels)


def factor(p: SolenoidPoint, n: int) -> tuple[Coordinates, list[tuple[int, ...]]]:
    """Split p into its offset t_n in S_n and the tile indices of levels n+1..N."""
    if n < 1 or n > p.depth:
        raise DepthError(f"cannot factor at level {n} for depth {p.depth}")
    indices = []
    for m in range(n, p.depth):
        modulus = p.radix.modulus(m)
        lower, upper = p.level(m), p.level(m + 1)
        try:
            indices.append(tuple(exact_int((hi - lo) / modulus) for lo, hi in zip(lower, upper)))
        except ValueError as exc:
            raise CompatibilityError(f"levels {m} and {m + 1} differ by a non-lattice step: {exc}") from exc
    return p.level(n), indices


def reconstruct(
    radix: RadixSequence, n: int, offset: Sequence[RationalLike], indices: Sequence[Sequence[int]]
) -> SolenoidPoint:
    """Inverse of :func:`factor`."""
    offset = fraction_tuple(offset)
    modulus = radix.modulus(n)
    if any(c < 0 or c >= modulus for c in offset):
        raise CompatibilityError(f"offset must lie in [0, {modulus})^{radix.dim}")
    lower = [_reduce(offset, radix.modulus(m)) for m in range(1, n)]
    levels = lower + [offset]
    current = offset
    for m, index in enumerate(indices, start=n):
        if any(i < 0 or i >= radix.radix(m + 1) for i in index):
            raise CompatibilityError(f"tile index {index} out of range at level {m + 1}")
        current = TileAddress(m, tuple(index), current).lift(radix)
        levels.append(current)
    return SolenoidPoint(radix, tuple(levels))


def tile_addresses(p: SolenoidPoint) -> list[TileAddress]:
    offsets_and_indices = factor(p, 1)[1]
    return [
        TileAddress(level=m, index=index, offset=p.level(m))
        for m, index in enumerate(offsets_and_indices, start=1)
    ]


def in_kernel(p: SolenoidPoint, n: int) -> bool:
    """Membership in B_n, the kernel of the projection to level n."""
    return all(c == 0 for c in p.level(n))


def kernel_projection(p: SolenoidPoint, n: int) -> SolenoidPoint:
    """The B_n component of p under G ≅ S_n × B_n."""
    return translate(p, tuple(-c for c in p.level(n)))


def tiles(radix: RadixSequence, n: int) -> list[tuple[tuple[int, ...], Coordinates, Coordinates]]:
    """The tiles S_{n,i} = i·R_n + [0, R_n)^{2d} of S_{n+1}, as (index, lower corner, upper corner)."""
    if n < 0 or n >= radix.length:
        raise DepthError(f"tiles of S_{n + 1} need 0 <= n < {radix.length}")
    modulus = radix.modulus(n)
    out = []
    for index in itertools.product(range(radix.radix(n + 1)), repeat=radix.dim):
        lower = tuple(Fraction(i * modulus) for i in index)
        upper = tuple(Fraction((i + 1) * modulus) for i in index)
        out.append((index, lower, upper))
    return out
