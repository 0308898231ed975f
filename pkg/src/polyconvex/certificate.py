"""Hyperplane-split certificates and their replay.

A certificate is a flat list of split steps forming a binary tree. Each step
cuts the leaves of its node by a hyperplane {x_axis = coordinate}; leaves are
listed in depth-first order (lower side first). Levels run grid → host →
local; within a level the axes run from the highest down, and a split on the
same axis and level may only continue on the lower side of its parent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from polyconvex.boxes import Box, component_count
from shared.constants import REPLAY_GAP_TOLERANCE
from shared.exact import format_fraction, parse_fraction
from shared.logging import get_logger

logger = get_logger("polyconvex.certificate")

LEVELS = ("grid", "host", "local")
_RANK = {name: rank for rank, name in enumerate(LEVELS)}


class CertificateStructureError(ValueError):
    pass


@dataclass
class SplitStep:
    step_id: int
    parent: Optional[int]
    side: Optional[str]
    level: str
    axis: int
    coordinate: Fraction
    lower: list[int] = field(default_factory=list)
    upper: list[int] = field(default_factory=list)
    polynomial: Optional[dict] = None
    bounds: Optional[dict] = None

    def to_record(self) -> dict:
        return {
            "step_id": self.step_id,
            "parent": self.parent,
            "side": self.side,
            "level": self.level,
            "axis": self.axis,
            "coordinate": format_fraction(self.coordinate),
            "lower": list(self.lower),
            "upper": list(self.upper),
            "polynomial": self.polynomial,
            "bounds": self.bounds,
        }

    @classmethod
    def from_record(cls, record: dict) -> "SplitStep":
        return cls(
            step_id=int(record["step_id"]),
            parent=record["parent"],
            side=record["side"],
            level=record["level"],
            axis=int(record["axis"]),
            coordinate=parse_fraction(record["coordinate"]),
            lower=[int(i) for i in record["lower"]],
            upper=[int(i) for i in record["upper"]],
            polynomial=record.get("polynomial"),
            bounds=record.get("bounds"),
        )


@dataclass(frozen=True)
class TaggedBox:
    """A leaf box with the enclosing unit it belongs to at each level (None: no split there)."""

    box: Box
    tags: tuple[Optional[Box], ...]


# ---------------------------------------------------------------------------
# building
# ---------------------------------------------------------------------------

class _Builder:
    def __init__(self, delta: Fraction, dim: int) -> None:
        self.delta = delta
        self.dim = dim
        self.steps: list[SplitStep] = []
        self.leaves: list[Box] = []

    def build(
        self, items: Sequence[TaggedBox], level: int, top_axis: int, parent: Optional[int], side: Optional[str]
    ) -> None:
        if level == len(LEVELS):
            if len(items) != 1:
                raise CertificateStructureError(f"{len(items)} boxes share one leaf slot")
            self.leaves.append(items[0].box)
            return
        units = sorted({item.tags[level] for item in items if item.tags[level] is not None}, key=lambda b: b.intervals)
        if len(units) <= 1:
            self.build(items, level + 1, self.dim, parent, side)
            return
        for axis in range(top_axis, 0, -1):
            clusters = _clusters(units, axis)
            if len(clusters) > 1:
                groups = [[item for item in items if item.tags[level] in members] for members, _ in clusters]
                self._chain(groups, [lo for _, lo in clusters], len(clusters) - 1, level, axis, parent, side)
                return
        raise CertificateStructureError(f"no axis separates the {len(units)} units at level {LEVELS[level]}")

    def _chain(
        self, groups: list[list[TaggedBox]], los: list[Fraction], k: int, level: int, axis: int,
        parent: Optional[int], side: Optional[str],
    ) -> None:
        if k == 0:
            self.build(groups[0], level, axis - 1, parent, side)
            return
        step = SplitStep(
            step_id=len(self.steps), parent=parent, side=side, level=LEVELS[level], axis=axis,
            coordinate=los[k] - self.delta,
        )
        self.steps.append(step)
        start = len(self.leaves)
        self._chain(groups, los, k - 1, level, axis, step.step_id, "lower")
        middle = len(self.leaves)
        self.build(groups[k], level, axis - 1, step.step_id, "upper")
        step.lower = list(range(start, middle))
        step.upper = list(range(middle, len(self.leaves)))


def _clusters(units: list[Box], axis: int) -> list[tuple[set, Fraction]]:
    """Units grouped by overlapping projections on ``axis``, sorted; each with its lowest edge."""
    ordered = sorted(units, key=lambda b: (b.lo(axis), b.hi(axis)))
    clusters: list[tuple[set, Fraction]] = []
    current: set = set()
    lo = hi = None
    for unit in ordered:
        if current and unit.lo(axis) > hi:
            clusters.append((current, lo))
            current = set()
        if not current:
            lo, hi = unit.lo(axis), unit.hi(axis)
        current.add(unit)
        hi = max(hi, unit.hi(axis))
    clusters.append((current, lo))
    return clusters


def build_certificate(items: Sequence[TaggedBox], delta: Fraction, dim: int) -> tuple[list[Box], list[SplitStep]]:
    if not items:
        raise CertificateStructureError("nothing to certify: the retained set is empty")
    builder = _Builder(delta, dim)
    builder.build(items, 0, dim, None, None)
    return builder.leaves, builder.steps


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

@dataclass
class ReplayReport:
    passed: bool
    checks: dict[str, bool] = field(default_factory=dict)
    first_violation: Optional[str] = None

    def fail(self, check: str, message: str) -> "ReplayReport":
        self.checks[check] = False
        if self.passed:
            self.passed = False
            self.first_violation = f"{check}: {message}"
        return self

    def to_record(self) -> dict:
        return {"passed": self.passed, "checks": dict(self.checks), "first_violation": self.first_violation}


def _check_structure(leaves: Sequence[Box], steps: Sequence[SplitStep]) -> None:
    if not leaves:
        raise CertificateStructureError("certificate has no leaves")
    if not steps:
        if len(leaves) != 1:
            raise CertificateStructureError(f"{len(leaves)} leaves but no splits")
        return
    children: dict[tuple[int, str], int] = {}
    for position, step in enumerate(steps):
        if step.step_id != position:
            raise CertificateStructureError(f"step {position} carries id {step.step_id}")
        if step.level not in _RANK:
            raise CertificateStructureError(f"step {position} has unknown level {step.level!r}")
        if not step.lower or not step.upper:
            raise CertificateStructureError(f"step {position} has an empty side")
        if set(step.lower) & set(step.upper):
            raise CertificateStructureError(f"step {position} puts a leaf on both sides")
        if step.parent is None:
            if position != 0:
                raise CertificateStructureError(f"step {position} is a second root")
            if sorted(step.lower + step.upper) != list(range(len(leaves))):
                raise CertificateStructureError("root step does not cover every leaf")
            continue
        if not 0 <= step.parent < position or step.side not in ("lower", "upper"):
            raise CertificateStructureError(f"step {position} has a bad parent link")
        key = (step.parent, step.side)
        if key in children:
            raise CertificateStructureError(f"two steps split side {step.side} of step {step.parent}")
        children[key] = position
        parent = steps[step.parent]
        parent_side = parent.lower if step.side == "lower" else parent.upper
        if sorted(step.lower + step.upper) != sorted(parent_side):
            raise CertificateStructureError(f"step {position} does not split its parent's side")
    for step in steps:
        for side_name, side in (("lower", step.lower), ("upper", step.upper)):
            if len(side) > 1 and (step.step_id, side_name) not in children:
                raise CertificateStructureError(
                    f"side {side_name} of step {step.step_id} holds several leaves but is not split"
                )


def _order_violation(steps: Sequence[SplitStep]) -> Optional[str]:
    for step in steps:
        if step.parent is None:
            continue
        parent = steps[step.parent]
        if _RANK[step.level] < _RANK[parent.level]:
            return f"step {step.step_id} returns to level {step.level} after {parent.level}"
        if step.level == parent.level:
            if step.axis > parent.axis:
                return f"step {step.step_id} raises the axis from {parent.axis} to {step.axis}"
            if step.axis == parent.axis and step.side != "lower":
                return f"step {step.step_id} continues a chain on the upper side"
    return None


def _gap_violation(leaves: Sequence[Box], steps: Sequence[SplitStep], delta: Fraction) -> Optional[str]:
    needed = 2 * delta * (1 - REPLAY_GAP_TOLERANCE)
    for step in steps:
        lower_hi = max(leaves[i].hi(step.axis) for i in step.lower)
        upper_lo = min(leaves[i].lo(step.axis) for i in step.upper)
        if not lower_hi < step.coordinate < upper_lo:
            return f"step {step.step_id}: hyperplane x_{step.axis} = {step.coordinate} does not separate its sides"
        if upper_lo - lower_hi < needed:
            return f"step {step.step_id}: gap {upper_lo - lower_hi} below {needed}"
    return None


def replay(
    leaves: Sequence[Box],
    steps: Sequence[SplitStep],
    delta: Fraction,
    containers: Sequence[Box],
    u_measure: Fraction,
    removed_measure: Fraction,
    expected: Optional[Sequence[Box]] = None,
) -> ReplayReport:
    """Re-verify a split certificate against the boxes it claims to separate.

    With ``expected`` given, leaf i must equal expected[i] exactly.
    """
    _check_structure(leaves, steps)
    report = ReplayReport(passed=True)
    report.checks["structure"] = True

    violation = _order_violation(steps)
    if violation:
        report.fail("order", violation)
    else:
        report.checks["order"] = True

    violation = _gap_violation(leaves, steps, delta)
    if violation:
        report.fail("splits", violation)
    else:
        report.checks["splits"] = True

    total = sum((leaf.volume for leaf in leaves), Fraction(0))
    container_volume = sum((box.volume for box in containers), Fraction(0))
    if total != u_measure:
        report.fail("tiling", f"leaf volume {total} differs from recorded measure {u_measure}")
    elif container_volume - u_measure != removed_measure:
        report.fail("tiling", f"removed measure {removed_measure} inconsistent with {container_volume - u_measure}")
    else:
        report.checks["tiling"] = True

    stray = [i for i, leaf in enumerate(leaves) if not any(box.contains(leaf) for box in containers)]
    if stray:
        report.fail("containment", f"leaf {stray[0]} lies in no input cube")
    else:
        report.checks["containment"] = True

    if component_count(leaves) != len(leaves):
        report.fail("components", "some connected component of U is not a single box")
    else:
        report.checks["components"] = True

    if expected is not None:
        if len(leaves) != len(expected):
            report.fail("leaves", f"{len(leaves)} leaves where the cubes give {len(expected)} cells")
        else:
            moved = [i for i, (leaf, cell) in enumerate(zip(leaves, expected)) if leaf != cell]
            if moved:
                first = moved[0]
                report.fail(
                    "leaves", f"leaf {first} is {leaves[first].to_record()}, expected {expected[first].to_record()}"
                )
            else:
                report.checks["leaves"] = True

    logger.info("certificate_replayed", extra={"extra": {"passed": report.passed, "steps": len(steps),
                                                          "first_violation": report.first_violation}})
    return report
