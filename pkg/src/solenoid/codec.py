"""Plain-text point format.

    dense-orbits-point 1
    radix 2 3
    dim 2
    depth 2
    level 1 3/2 0
    level 2 7/2 4

Coordinates are exact fraction strings, so a dump/load round trip is exact.
"""

from __future__ import annotations

from fractions import Fraction

from shared.exact import parse_fraction
from solenoid.point import SolenoidPoint
from solenoid.radix import RadixSequence

POINT_FORMAT_TAG = "dense-orbits-point"
POINT_FORMAT_VERSION = 1


class PointFormatError(ValueError):
    pass


def dump_point(p: SolenoidPoint) -> str:
    lines = [
        f"{POINT_FORMAT_TAG} {POINT_FORMAT_VERSION}",
        "radix " + " ".join(str(entry) for entry in p.radix.r),
        f"dim {p.dim}",
        f"depth {p.depth}",
    ]
    for n, level in enumerate(p.levels, start=1):
        lines.append(f"level {n} " + " ".join(str(Fraction(c)) for c in level))
    return "\n".join(lines) + "\n"


def _field(line: str, name: str) -> list[str]:
    parts = line.split()
    if not parts or parts[0] != name:
        raise PointFormatError(f"expected '{name}' line, got {line!r}")
    return parts[1:]


def load_point(text: str) -> SolenoidPoint:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if len(lines) < 4:
        raise PointFormatError("point text is truncated")
    header = lines[0].split()
    if header != [POINT_FORMAT_TAG, str(POINT_FORMAT_VERSION)]:
        raise PointFormatError(f"unsupported header {lines[0]!r}")
    try:
        radix = RadixSequence(tuple(int(x) for x in _field(lines[1], "radix")), dim=int(_field(lines[2], "dim")[0]))
        depth = int(_field(lines[3], "depth")[0])
        if len(lines) != 4 + depth:
            raise PointFormatError(f"expected {depth} level lines, got {len(lines) - 4}")
        levels = []
        for n, line in enumerate(lines[4:], start=1):
            values = _field(line, "level")
            if int(values[0]) != n:
                raise PointFormatError(f"level lines out of order at {line!r}")
            levels.append(tuple(parse_fraction(v) for v in values[1:]))
        return SolenoidPoint(radix, tuple(levels))
    except PointFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise PointFormatError(f"malformed point text: {exc}") from exc
