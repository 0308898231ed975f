"""Closed rectangles and disks in C, with sample grids and exact separation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath
import numpy as np

from shared.exact import ComplexRational, RationalLike, format_fraction, parse_fraction, to_mpf


class RegionError(ValueError):
    pass


def rational_sqrt_upper(value: Fraction, bits: int = 24) -> Fraction:
    """A rational upper bound for sqrt(value), within 2^-bits."""
    scaled = value * 4 ** bits
    root = math.isqrt(math.ceil(scaled))
    if root * root < scaled:
        root += 1
    return Fraction(root, 2 ** bits)


@dataclass(frozen=True)
class Rect:
    """Closed axis-parallel rectangle [x0, x1] × [y0, y1]."""

    x0: Fraction
    x1: Fraction
    y0: Fraction
    y1: Fraction

    def __post_init__(self) -> None:
        for name in ("x0", "x1", "y0", "y1"):
            object.__setattr__(self, name, parse_fraction(getattr(self, name)))
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise RegionError(f"empty rectangle [{self.x0}, {self.x1}] x [{self.y0}, {self.y1}]")

    @classmethod
    def square(cls, center: ComplexRational, side: RationalLike) -> "Rect":
        center = ComplexRational.of(center)
        half = parse_fraction(side) / 2
        return cls(center.re - half, center.re + half, center.im - half, center.im + half)

    @property
    def width(self) -> Fraction:
        return self.x1 - self.x0

    @property
    def height(self) -> Fraction:
        return self.y1 - self.y0

    @property
    def area(self) -> Fraction:
        return self.width * self.height

    def bbox(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return self.x0, self.x1, self.y0, self.y1

    def corners(self) -> list[ComplexRational]:
        return [ComplexRational(x, y) for x in (self.x0, self.x1) for y in (self.y0, self.y1)]

    def translated(self, w: ComplexRational) -> "Rect":
        w = ComplexRational.of(w)
        return Rect(self.x0 + w.re, self.x1 + w.re, self.y0 + w.im, self.y1 + w.im)

    def contains(self, z: ComplexRational) -> bool:
        return self.x0 <= z.re <= self.x1 and self.y0 <= z.im <= self.y1

    def max_distance(self, z: ComplexRational) -> mpmath.mpf:
        """sup over the rectangle of |w − z| (attained at a corner)."""
        worst = max((corner - z).abs_squared() for corner in self.corners())
        return mpmath.sqrt(to_mpf(worst))

    def _perimeter_point(self, t: Fraction) -> tuple[Fraction, Fraction]:
        w, h = self.width, self.height
        if t < w:
            return self.x0 + t, self.y0
        t -= w
        if t < h:
            return self.x1, self.y0 + t
        t -= h
        if t < w:
            return self.x1 - t, self.y1
        t -= w
        return self.x0, self.y1 - t

    def _exact_points(self, density: int, *, nodes: bool) -> list[tuple[Fraction, Fraction]]:
        perimeter = 2 * (self.width + self.height)
        count = 4 * density
        phase = Fraction(0) if nodes else Fraction(1, 2)
        points = [self._perimeter_point((k + phase) * perimeter / count) for k in range(count)]
        steps = range(density + 1) if nodes else range(density)
        for i in steps:
            for j in steps:
                points.append((
                    self.x0 + (i + phase) * self.width / density,
                    self.y0 + (j + phase) * self.height / density,
                ))
        return points

    def fit_points(self, density: int) -> np.ndarray:
        """Cell-centred boundary and interior samples."""
        return np.array([complex(float(x), float(y)) for x, y in self._exact_points(density, nodes=False)])

    def validation_points(self, density: int) -> list:
        """Node-grid samples, including corners."""
        return [mpmath.mpc(to_mpf(x), to_mpf(y)) for x, y in self._exact_points(density, nodes=True)]

    def validation_array(self, density: int) -> np.ndarray:
        return np.array([complex(float(x), float(y)) for x, y in self._exact_points(density, nodes=True)])

    def to_record(self) -> dict:
        return {"kind": "rect", "x": [format_fraction(self.x0), format_fraction(self.x1)],
                "y": [format_fraction(self.y0), format_fraction(self.y1)]}


@dataclass(frozen=True)
class Disk:
    """Closed disk |z − center| <= radius."""

    center: ComplexRational
    radius: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", ComplexRational.of(self.center))
        object.__setattr__(self, "radius", parse_fraction(self.radius))
        if self.radius <= 0:
            raise RegionError(f"disk radius must be positive, got {self.radius}")

    def bbox(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        c, r = self.center, self.radius
        return c.re - r, c.re + r, c.im - r, c.im + r

    def translated(self, w: ComplexRational) -> "Disk":
        return Disk(self.center + ComplexRational.of(w), self.radius)

    def contains(self, z: ComplexRational) -> bool:
        return (z - self.center).abs_squared() <= self.radius ** 2

    def max_distance(self, z: ComplexRational) -> mpmath.mpf:
        return mpmath.sqrt(to_mpf((self.center - z).abs_squared())) + to_mpf(self.radius)

    def _interior(self, density: int, *, nodes: bool) -> list[tuple[Fraction, Fraction]]:
        x0, _, y0, _ = self.bbox()
        side = 2 * self.radius
        phase = Fraction(0) if nodes else Fraction(1, 2)
        steps = range(density + 1) if nodes else range(density)
        points = []
        for i in steps:
            for j in steps:
                x = x0 + (i + phase) * side / density
                y = y0 + (j + phase) * side / density
                dist = (x - self.center.re) ** 2 + (y - self.center.im) ** 2
                if dist < self.radius ** 2 or (nodes and dist == self.radius ** 2):
                    points.append((x, y))
        return points

    def fit_points(self, density: int) -> np.ndarray:
        count = 4 * density
        c = self.center.to_complex()
        r = float(self.radius)
        angles = 2 * np.pi * (np.arange(count) + 0.5) / count
        boundary = c + r * np.exp(1j * angles)
        interior = np.array([complex(float(x), float(y)) for x, y in self._interior(density, nodes=False)])
        return np.concatenate([boundary, interior]) if interior.size else boundary

    def validation_points(self, density: int) -> list:
        count = 4 * density
        c = self.center.to_mpc()
        r = to_mpf(self.radius)
        boundary = [c + r * mpmath.expjpi(mpmath.mpf(2 * k) / count) for k in range(count)]
        return boundary + [mpmath.mpc(to_mpf(x), to_mpf(y)) for x, y in self._interior(density, nodes=True)]

    def validation_array(self, density: int) -> np.ndarray:
        count = 4 * density
        angles = 2 * np.pi * np.arange(count) / count
        boundary = self.center.to_complex() + float(self.radius) * np.exp(1j * angles)
        interior = np.array([complex(float(x), float(y)) for x, y in self._interior(density, nodes=True)])
        return np.concatenate([boundary, interior]) if interior.size else boundary

    def to_record(self) -> dict:
        return {"kind": "disk", "center": self.center.to_record(), "radius": format_fraction(self.radius)}


Region = Union[Rect, Disk]


def region_from_record(record: dict) -> Region:
    if record.get("kind") == "rect":
        return Rect(*record["x"], *record["y"])
    if record.get("kind") == "disk":
        return Disk(ComplexRational.of(record["center"]), parse_fraction(record["radius"]))
    raise RegionError(f"unknown region kind {record.get('kind')!r}")


def _rect_gap_squared(a: Rect, b: Rect) -> Fraction:
    dx = max(Fraction(0), b.x0 - a.x1, a.x0 - b.x1)
    dy = max(Fraction(0), b.y0 - a.y1, a.y0 - b.y1)
    return dx * dx + dy * dy


def _rect_point_gap_squared(rect: Rect, z: ComplexRational) -> Fraction:
    dx = max(Fraction(0), rect.x0 - z.re, z.re - rect.x1)
    dy = max(Fraction(0), rect.y0 - z.im, z.im - rect.y1)
    return dx * dx + dy * dy


def separated(a: Region, b: Region) -> bool:
    """Exact test for positive distance between two closed regions."""
    if isinstance(a, Rect) and isinstance(b, Rect):
        return _rect_gap_squared(a, b) > 0
    if isinstance(a, Disk) and isinstance(b, Disk):
        return (a.center - b.center).abs_squared() > (a.radius + b.radius) ** 2
    rect, disk = (a, b) if isinstance(a, Rect) else (b, a)
    return _rect_point_gap_squared(rect, disk.center) > disk.radius ** 2


def union_bbox(regions: list[Region]) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    if not regions:
        raise RegionError("empty region list")
    boxes = [region.bbox() for region in regions]
    return (
        min(b[0] for b in boxes),
        max(b[1] for b in boxes),
        min(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


def basis_frame(regions: list[Region]) -> tuple[ComplexRational, Fraction]:
    """Bounding-box midpoint and (rational upper bound of) half-diagonal of the union."""
    x0, x1, y0, y1 = union_bbox(regions)
    center = ComplexRational((x0 + x1) / 2, (y0 + y1) / 2)
    half_diag = rational_sqrt_upper(((x1 - x0) ** 2 + (y1 - y0) ** 2) / 4)
    return center, half_diag
