"""Closed axis-parallel boxes with exact rational edges."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from shared.exact import RationalLike, format_fraction, parse_fraction

Interval = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class Box:
    intervals: tuple[Interval, ...]

    def __post_init__(self) -> None:
        intervals = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.intervals)
        if not intervals:
            raise ValueError("a box needs at least one axis")
        for axis, (lo, hi) in enumerate(intervals, start=1):
            if lo > hi:
                raise ValueError(f"axis {axis}: lower edge {lo} exceeds upper edge {hi}")
        object.__setattr__(self, "intervals", intervals)

    @classmethod
    def cube(cls, center: Sequence[Fraction], half: Fraction = Fraction(1, 2)) -> "Box":
        return cls(tuple((c - half, c + half) for c in center))

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def lo(self, axis: int) -> Fraction:
        """Lower edge on 1-based ``axis``."""
        return self.intervals[axis - 1][0]

    def hi(self, axis: int) -> Fraction:
        return self.intervals[axis - 1][1]

    @property
    def volume(self) -> Fraction:
        out = Fraction(1)
        for lo, hi in self.intervals:
            out *= hi - lo
        return out

    def is_degenerate(self) -> bool:
        return any(lo == hi for lo, hi in self.intervals)

    def inset(self, delta: RationalLike) -> "Box":
        """B^{-δ}: every face pushed inward by δ."""
        delta = parse_fraction(delta)
        return Box(tuple((lo + delta, hi - delta) for lo, hi in self.intervals))

    def widened(self, axis: int, amount: Fraction) -> "Box":
        intervals = list(self.intervals)
        lo, hi = intervals[axis - 1]
        intervals[axis - 1] = (lo - amount, hi + amount)
        return Box(tuple(intervals))

    def contains(self, other: "Box") -> bool:
        return all(a_lo <= b_lo and b_hi <= a_hi for (a_lo, a_hi), (b_lo, b_hi) in zip(self.intervals, other.intervals))

    def contains_point(self, point: Sequence[Fraction]) -> bool:
        return all(lo <= x <= hi for (lo, hi), x in zip(self.intervals, point))

    def overlaps(self, other: "Box") -> bool:
        """Positive-measure intersection."""
        pairs = zip(self.intervals, other.intervals)
        return all(max(a_lo, b_lo) < min(a_hi, b_hi) for (a_lo, a_hi), (b_lo, b_hi) in pairs)

    def touches(self, other: "Box") -> bool:
        """Closed boxes share at least one point."""
        pairs = zip(self.intervals, other.intervals)
        return all(max(a_lo, b_lo) <= min(a_hi, b_hi) for (a_lo, a_hi), (b_lo, b_hi) in pairs)

    def intersection(self, other: "Box") -> "Box | None":
        intervals = []
        for (a_lo, a_hi), (b_lo, b_hi) in zip(self.intervals, other.intervals):
            lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
            if lo > hi:
                return None
            intervals.append((lo, hi))
        return Box(tuple(intervals))

    def split(self, axis: int, coordinate: Fraction) -> tuple["Box", "Box"]:
        lo, hi = self.intervals[axis - 1]
        if not lo <= coordinate <= hi:
            raise ValueError(f"split coordinate {coordinate} outside [{lo}, {hi}]")
        lower, upper = list(self.intervals), list(self.intervals)
        lower[axis - 1] = (lo, coordinate)
        upper[axis - 1] = (coordinate, hi)
        return Box(tuple(lower)), Box(tuple(upper))

    def project(self, axes: Sequence[int]) -> "Box":
        return Box(tuple(self.intervals[a - 1] for a in axes))

    def translated(self, offset: Sequence[Fraction]) -> "Box":
        return Box(tuple((lo + o, hi + o) for (lo, hi), o in zip(self.intervals, offset)))

    def scaled(self, factor: Fraction) -> "Box":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Box(tuple((lo * factor, hi * factor) for lo, hi in self.intervals))

    def to_record(self) -> list[list[str]]:
        return [[format_fraction(lo), format_fraction(hi)] for lo, hi in self.intervals]

    @classmethod
    def from_record(cls, record: Iterable[Sequence[RationalLike]]) -> "Box":
        return cls(tuple((parse_fraction(lo), parse_fraction(hi)) for lo, hi in record))


@dataclass(frozen=True)
class Strip:
    """Open slab |x_axis − center| < half_width removed around a hyperplane."""

    axis: int
    center: Fraction
    half_width: Fraction

    def __post_init__(self) -> None:
        if self.half_width <= 0:
            raise ValueError("strip half-width must be positive")

    def to_record(self) -> dict:
        return {
            "axis": self.axis,
            "center": format_fraction(self.center),
            "half_width": format_fraction(self.half_width),
        }


def measure_of_box_union(boxes: Sequence[Box]) -> Fraction:
    """Exact Lebesgue measure of a union of boxes, by a recursive coordinate sweep."""
    boxes = [b for b in boxes if not b.is_degenerate()]
    if not boxes:
        return Fraction(0)
    return _sweep([b.intervals for b in boxes])


def _sweep(intervals: list[tuple[Interval, ...]]) -> Fraction:
    if not intervals:
        return Fraction(0)
    if len(intervals[0]) == 1:
        spans = sorted(iv[0] for iv in intervals)
        total, cur_lo, cur_hi = Fraction(0), spans[0][0], spans[0][1]
        for lo, hi in spans[1:]:
            if lo > cur_hi:
                total += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        return total + cur_hi - cur_lo
    cuts = sorted({x for iv in intervals for x in iv[0]})
    total = Fraction(0)
    for left, right in zip(cuts, cuts[1:]):
        covering = [iv[1:] for iv in intervals if iv[0][0] <= left and right <= iv[0][1]]
        if covering:
            total += (right - left) * _sweep(covering)
    return total


def component_count(boxes: Sequence[Box]) -> int:
    """Connected components of the union of closed boxes (touching boxes connect)."""
    parent = list(range(len(boxes)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = sorted(range(len(boxes)), key=lambda i: boxes[i].intervals[0][0])
    for pos, i in enumerate(order):
        for j in order[pos + 1:]:
            if boxes[j].intervals[0][0] > boxes[i].intervals[0][1]:
                break
            if boxes[i].touches(boxes[j]):
                parent[find(i)] = find(j)
    return len({find(i) for i in range(len(boxes))})


def rescale_boxes(boxes: Sequence[Box], factor: Fraction, offset: Sequence[Fraction]) -> list[Box]:
    """x ↦ factor·x + offset applied to every box."""
    return [box.scaled(factor).translated(offset) for box in boxes]
