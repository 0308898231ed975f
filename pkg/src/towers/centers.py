"""Center cubes for the planted polynomial and the cube collection of a cell."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from polyconvex import UnitCube
from polyconvex.cubes import check_disjoint
from shared.exact import format_tuple
from towers.partition import ReturnSet
from towers.tower import NoRoomError, TowerData, Vector


def _corner_on_axis(sub_lo: Fraction, ratio: int) -> int:
    """Lattice position (in units of a_{n-1}) of the copy nearest the middle of [sub_lo, sub_lo + ratio/2)."""
    sub_hi = sub_lo + Fraction(ratio, 2)
    ideal = sub_lo + Fraction(ratio, 4) - Fraction(1, 2)
    corner = max(math.ceil(sub_lo), math.floor(ideal))
    if corner + 1 > sub_hi:
        raise NoRoomError(f"no copy of S_(n-1) fits in a sub-cube when a_n/a_(n-1) = {ratio}")
    return corner


def choose_centers(tower: TowerData, n: int) -> list[Vector]:
    """Corners w_k^n of the copies of S_{n-1} placed in the middle of the 2^{2d} sub-cubes of S_n.

    Each copy is aligned to the a_{n-1} lattice; between two equally central
    positions the smaller one is taken. The result depends on the ratio only.
    """
    if n < 2:
        raise NoRoomError("center cubes start at level 2")
    ratio = tower.ratio(n)
    side = tower.side(n - 1)
    positions = [_corner_on_axis(Fraction(0), ratio), _corner_on_axis(Fraction(ratio, 2), ratio)]
    return [
        tuple(Fraction(positions[bit] * side) for bit in bits)
        for bits in itertools.product((0, 1), repeat=tower.dim)
    ]


def _meets(a: Vector, b: Vector, side: int) -> bool:
    """Half-open cubes a + [0, side)^{2d} and b + [0, side)^{2d} intersect."""
    return all(abs(x - y) < side for x, y in zip(a, b))


@dataclass
class CubeCollection:
    """The cubes 𝒫_n^j: center copies carrying p_n and return copies carrying F_{n-1}."""

    n: int
    side: int
    centers: list[Vector]
    returns: list[tuple[Vector, int]]
    dropped: list[tuple[Vector, int]] = field(default_factory=list)
    outside: list[tuple[Vector, int]] = field(default_factory=list)

    @property
    def corners(self) -> list[Vector]:
        return list(self.centers) + [corner for corner, _ in self.returns]

    @property
    def size(self) -> int:
        return len(self.centers) + len(self.returns)

    def unit_cubes(self) -> list[UnitCube]:
        """The cubes under x ↦ x/a_{n-1} − 1/2, which turns lattice copies into grid cubes."""
        return [UnitCube(tuple(c / self.side for c in corner), half_open=True) for corner in self.corners]

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "side": self.side,
            "centers": [format_tuple(c) for c in self.centers],
            "returns": [{"corner": format_tuple(c), "cell": cell} for c, cell in self.returns],
            "dropped": [{"corner": format_tuple(c), "cell": cell} for c, cell in self.dropped],
            "outside": [{"corner": format_tuple(c), "cell": cell} for c, cell in self.outside],
        }


def assemble_collection(
    returns: Sequence[ReturnSet], centers: Sequence[Vector], tower: TowerData, n: int
) -> CubeCollection:
    side = tower.side(n - 1)
    top = tower.side(n)
    collection = CubeCollection(n, side, list(centers), [])
    for rset in returns:
        for corner in rset.points:
            if any(c < 0 or c + side > top for c in corner):
                collection.outside.append((corner, rset.cell))
            elif any(_meets(corner, w, side) for w in centers):
                collection.dropped.append((corner, rset.cell))
            else:
                collection.returns.append((corner, rset.cell))
    collection.returns.sort()
    limit = (2 ** tower.dim) ** 2
    if len(collection.dropped) > limit:
        raise RuntimeError(f"{len(collection.dropped)} return cubes displaced, more than {limit}")
    check_disjoint(collection.unit_cubes())
    return collection
