"""Unit cubes, the nearest-lattice rule and grid-cube incidence."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from polyconvex.boxes import Box
from shared.exact import RationalLike, fraction_tuple

HALF = Fraction(1, 2)

GridKey = tuple[int, ...]


class DisjointnessError(ValueError):
    pass


class HostLemmaError(RuntimeError):
    pass


@dataclass(frozen=True)
class UnitCube:
    """q + [−1/2, 1/2]^{2d}, or q + [−1/2, 1/2)^{2d} when ``half_open``."""

    center: tuple[Fraction, ...]
    half_open: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", fraction_tuple(self.center))

    @classmethod
    def from_corner(cls, corner: Sequence[RationalLike], half_open: bool = True) -> "UnitCube":
        return cls(tuple(c + HALF for c in fraction_tuple(corner)), half_open)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def corner(self) -> tuple[Fraction, ...]:
        return tuple(c - HALF for c in self.center)

    def box(self) -> Box:
        """Closure of the cube."""
        return Box.cube(self.center)

    def face_planes(self, axis: int) -> tuple[Fraction, Fraction]:
        c = self.center[axis - 1]
        return c - HALF, c + HALF

    def to_record(self) -> list[str]:
        return [str(c) for c in (self.corner if self.half_open else self.center)]


@dataclass(frozen=True)
class SubCubeIndex:
    """i⃗ ∈ {−1, 0}^{2d}; the sub-cube q + Π[i_k/2, (i_k+1)/2]."""

    index: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(i not in (-1, 0) for i in self.index):
            raise ValueError(f"sub-cube index entries must be -1 or 0, got {self.index}")

    def box(self, cube: UnitCube) -> Box:
        return Box(tuple((q + Fraction(i, 2), q + Fraction(i + 1, 2)) for q, i in zip(cube.center, self.index)))


def nearest_lattice(q: Sequence[RationalLike]) -> GridKey:
    """Componentwise floor, or ceil when the fractional part exceeds 1/2."""
    out = []
    for value in fraction_tuple(q):
        fl = math.floor(value)
        out.append(fl + 1 if value - fl > HALF else fl)
    return tuple(out)


def grid_box(key: GridKey) -> Box:
    return Box.cube(tuple(Fraction(k) for k in key))


def host_grid_cube(cube: UnitCube) -> tuple[GridKey, SubCubeIndex]:
    g = nearest_lattice(cube.center)
    index = SubCubeIndex(tuple(0 if q <= k else -1 for q, k in zip(cube.center, g)))
    sub = index.box(cube)
    if not (grid_box(g).contains(sub) and cube.box().contains(sub)):
        raise HostLemmaError(f"sub-cube {index.index} of cube at {cube.center} escapes grid cube {g}")
    return g, index


def _separated(a: UnitCube, b: UnitCube) -> bool:
    gaps = [abs(x - y) for x, y in zip(a.center, b.center)]
    if a.half_open and b.half_open:
        return any(gap >= 1 for gap in gaps)
    return any(gap > 1 for gap in gaps)


def check_disjoint(cubes: Sequence[UnitCube]) -> None:
    if not cubes:
        return
    dim = cubes[0].dim
    for i, a in enumerate(cubes):
        if a.dim != dim:
            raise DisjointnessError(f"cube {i} has dimension {a.dim}, expected {dim}")
        for j in range(i + 1, len(cubes)):
            if not _separated(a, cubes[j]):
                raise DisjointnessError(f"cubes {i} and {j} intersect")


def incident_grid_keys(cube: UnitCube) -> list[GridKey]:
    """Grid cubes meeting the cube in positive measure."""
    per_axis = []
    for q in cube.center:
        candidates = {math.floor(q), math.ceil(q)}
        per_axis.append(sorted(g for g in candidates if abs(q - g) < 1))
    return [tuple(key) for key in itertools.product(*per_axis)]


def grid_incidence(cubes: Sequence[UnitCube]) -> dict[GridKey, list[int]]:
    check_disjoint(cubes)
    incidence: dict[GridKey, list[int]] = {}
    for index, cube in enumerate(cubes):
        for key in incident_grid_keys(cube):
            incidence.setdefault(key, []).append(index)
    bound = 2 ** cubes[0].dim if cubes else 0
    for key, members in incidence.items():
        if len(members) > bound:
            raise HostLemmaError(f"grid cube {key} meets {len(members)} cubes, more than {bound}")
    return dict(sorted(incidence.items(), key=lambda item: item[0][::-1]))
