"""Haar sampling on a finite-depth solenoid.

Haar measure is the product of the uniform law on S_1 with the uniform law
on each tile index. S_1 coordinates are drawn on the rational grid of
spacing 1/resolution so every sample stays exact.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from solenoid.point import SolenoidPoint, TileAddress
from solenoid.radix import DepthError, RadixSequence


class HaarSampler:
    def __init__(self, radix: RadixSequence, depth: int, resolution: int, seed: int) -> None:
        if depth < 1 or depth > radix.length:
            raise DepthError(f"depth {depth} outside 1..{radix.length}")
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        self.radix = radix
        self.depth = depth
        self.resolution = resolution
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def sample(self) -> SolenoidPoint:
        cells = self.radix.modulus(1) * self.resolution
        ticks = self._rng.integers(0, cells, size=self.radix.dim)
        current = tuple(Fraction(int(tick), self.resolution) for tick in ticks)
        levels = [current]
        for n in range(1, self.depth):
            index = self._rng.integers(0, self.radix.radix(n + 1), size=self.radix.dim)
            current = TileAddress(n, tuple(int(i) for i in index), current).lift(self.radix)
            levels.append(current)
        return SolenoidPoint(self.radix, tuple(levels))

    def sample_many(self, count: int) -> list[SolenoidPoint]:
        return [self.sample() for _ in range(count)]


def haar_sample(radix: RadixSequence, depth: int, resolution: int, seed: int) -> SolenoidPoint:
    return HaarSampler(radix, depth, resolution, seed).sample()
