"""Return sets and δ-fine partitions of the tower bases.

For x ∈ B_n the return set R_n^ℓ(x) collects the z ∈ S_n with T_z x in the
cell B_{n-1}^ℓ of the previous partition. A partition of B_n is δ-fine when
points sharing a cell have return sets within Hausdorff distance δ for every ℓ.
Return times are integer vectors here, so distances are integers and any
δ <= 1 groups exactly the points with identical return patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from shared.constants import MAX_PARTITION_CELLS
from shared.exact import RationalLike, format_fraction, format_tuple, parse_fraction
from shared.logging import get_logger
from towers.model import ActionModel
from towers.tower import DomainError, PartitionResourceError, TowerParameterError, Vector, linf

logger = get_logger("towers.partition")

Signature = tuple[tuple[int, tuple[Vector, ...]], ...]


@dataclass(frozen=True)
class ReturnSet:
    owner: tuple
    cell: int
    points: tuple[Vector, ...]

    def min_spacing(self) -> Optional[Fraction]:
        return min_spacing(self.points)

    def to_record(self) -> dict:
        return {"cell": self.cell, "points": [format_tuple(p) for p in self.points]}


def min_spacing(points: Sequence[Vector]) -> Optional[Fraction]:
    if len(points) < 2:
        return None
    return min(linf(points[i], points[j]) for i in range(len(points)) for j in range(i + 1, len(points)))


def hausdorff_distance(a: Sequence[Vector], b: Sequence[Vector]) -> float:
    """Hausdorff distance in the sup norm; infinite when exactly one side is empty."""
    if not a and not b:
        return 0.0
    if not a or not b:
        return math.inf
    forward = max(min(linf(p, q) for q in b) for p in a)
    backward = max(min(linf(p, q) for p in a) for q in b)
    return float(max(forward, backward))


def signature_distance(s: Signature, t: Signature) -> float:
    left, right = dict(s), dict(t)
    cells = set(left) | set(right)
    if not cells:
        return 0.0
    return max(hausdorff_distance(left.get(c, ()), right.get(c, ())) for c in cells)


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

@dataclass
class PartitionData:
    """Cells B_n^j given by lists of return-pattern signatures, with representatives x_n^j."""

    level: int
    delta: Fraction
    cells: list[list[Signature]]
    representatives: list[Any]
    members: list[list[tuple]] = field(default_factory=list)
    previous: Optional["PartitionData"] = None
    _lookup: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._lookup = {sig: j for j, sigs in enumerate(self.cells) for sig in sigs}

    @property
    def size(self) -> int:
        return len(self.cells)

    def signature(self, model: ActionModel, x: Any) -> Signature:
        if self.level == 1:
            return ()
        key = model.encode(x)
        if key not in self._cache:
            returns = _scan_returns(model, x, self.level, self.previous)
            self._cache[key] = tuple((r.cell, r.points) for r in returns)
        return self._cache[key]

    def cell_of(self, model: ActionModel, x: Any) -> int:
        if not model.in_base(self.level, x):
            raise DomainError(f"state is not in the base B_{self.level}")
        sig = self.signature(model, x)
        if sig not in self._lookup:
            raise DomainError(f"return pattern of the state is not represented in the level-{self.level} partition")
        return self._lookup[sig]

    def to_record(self) -> dict:
        return {
            "level": self.level,
            "delta": format_fraction(self.delta),
            "cells": [
                {"signatures": len(sigs), "members": len(self.members[j]) if self.members else None}
                for j, sigs in enumerate(self.cells)
            ],
        }


def trivial_partition(model: ActionModel) -> PartitionData:
    """The one-cell partition of B_1."""
    return PartitionData(1, Fraction(1), [[()]], [model.base_classes(1)[0]], [[model.encode(model.base_classes(1)[0])]])


def _scan_returns(model: ActionModel, x: Any, n: int, previous: PartitionData) -> list[ReturnSet]:
    found: dict[int, list[Vector]] = {}
    for z in model.return_candidates(n):
        y = model.apply(z, x)
        if model.in_base(n - 1, y):
            found.setdefault(previous.cell_of(model, y), []).append(tuple(Fraction(v) for v in z))
    owner = model.encode(x)
    return [ReturnSet(owner, cell, tuple(sorted(points))) for cell, points in sorted(found.items())]


def return_sets(x: Any, n: int, part: PartitionData, tower_model: ActionModel) -> list[ReturnSet]:
    """R_n^ℓ(x) for every cell ℓ of ``part`` (the partition of B_{n-1}) that x returns to."""
    tower = tower_model.tower
    if n < 2 or n > tower.depth:
        raise DomainError(f"return sets need 2 <= n <= {tower.depth}, got {n}")
    if part.level != n - 1:
        raise DomainError(f"partition is of level {part.level}, expected {n - 1}")
    if not tower_model.in_base(n, x):
        raise DomainError(f"state is not in the base B_{n}")
    returns = _scan_returns(tower_model, x, n, part)
    spacing = min_spacing([p for r in returns for p in r.points])
    if spacing is not None and spacing < tower.side(n - 1):
        raise TowerParameterError(f"return times {spacing} apart, less than a_{n - 1} = {tower.side(n - 1)}")
    return returns


def delta_fine_partition(
    n: int,
    delta: RationalLike,
    model: ActionModel,
    previous: Optional[PartitionData] = None,
    max_cells: int = MAX_PARTITION_CELLS,
) -> PartitionData:
    """δ-fine partition of B_n over the model's return-pattern classes.

    Classes are visited in order of their canonical encoding; each joins the
    first cell whose leader is within δ/2, so cell members stay within δ of
    one another.
    """
    delta = parse_fraction(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n == 1:
        return trivial_partition(model)
    if previous is None or previous.level != n - 1:
        raise DomainError(f"the level-{n} partition needs the level-{n - 1} partition")

    scratch = PartitionData(n, delta, [], [], previous=previous)
    grouped: dict[Signature, list[tuple[tuple, Any]]] = {}
    for x in model.base_classes(n):
        grouped.setdefault(scratch.signature(model, x), []).append((model.encode(x), x))

    ordered = sorted(grouped.items(), key=lambda item: min(key for key, _ in item[1]))
    leaders: list[Signature] = []
    cells: list[list[Signature]] = []
    for sig, _ in ordered:
        for j, leader in enumerate(leaders):
            if signature_distance(sig, leader) < float(delta) / 2:
                cells[j].append(sig)
                break
        else:
            if len(cells) >= max_cells:
                raise PartitionResourceError(
                    f"level-{n} partition needs more than {max_cells} cells",
                    {"level": n, "delta": str(delta), "signatures": len(grouped), "cells": len(cells)},
                )
            leaders.append(sig)
            cells.append([sig])

    members, representatives = [], []
    for sigs in cells:
        entries = sorted((entry for sig in sigs for entry in grouped[sig]), key=lambda entry: entry[0])
        members.append([key for key, _ in entries])
        representatives.append(entries[0][1])
    part = PartitionData(n, delta, cells, representatives, members, previous)
    part._cache.update(scratch._cache)
    logger.info("partition_built", extra={"extra": {"level": n, "delta": str(delta), "cells": len(cells),
                                                    "signatures": len(grouped)}})
    return part


@dataclass
class PartitionReport:
    passed: bool
    checked_pairs: int
    sampled: int
    first_violation: Optional[str] = None

    def to_record(self) -> dict:
        return {"passed": self.passed, "checked_pairs": self.checked_pairs, "sampled": self.sampled,
                "first_violation": self.first_violation}


def validate_partition(part: PartitionData, model: ActionModel, samples: int = 20, seed: int = 0) -> PartitionReport:
    """Pairwise δ-fineness inside every cell, and classification of sampled base points."""
    report = PartitionReport(passed=True, checked_pairs=0, sampled=0)
    for j, sigs in enumerate(part.cells):
        for i in range(len(sigs)):
            for k in range(i + 1, len(sigs)):
                report.checked_pairs += 1
                distance = signature_distance(sigs[i], sigs[k])
                if distance >= float(part.delta):
                    report.passed = False
                    report.first_violation = f"cell {j}: return patterns {distance} apart, delta {part.delta}"
                    return report
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        x = model.sample_base(part.level, rng)
        try:
            part.cell_of(model, x)
        except DomainError as exc:
            report.passed = False
            report.first_violation = f"sampled base point: {exc}"
            return report
        report.sampled += 1
    return report


def refines(fine: PartitionData, coarse: PartitionData) -> bool:
    """Every cell of ``fine`` lies inside one cell of ``coarse`` (compared through signatures)."""
    lookup = {sig: j for j, sigs in enumerate(coarse.cells) for sig in sigs}
    for sigs in fine.cells:
        if len({lookup.get(sig) for sig in sigs}) != 1 or any(sig not in lookup for sig in sigs):
            return False
    return True
