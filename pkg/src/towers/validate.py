"""Validation of nested towers: growth condition, S-set disjointness, nesting and coverage."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from shared.exact import format_fraction
from shared.logging import get_logger
from towers.model import ActionModel, SolenoidActionModel
from towers.tower import TowerData, TowerParameterError

logger = get_logger("towers.validate")

# normal quantile for the reported 95% intervals
_Z95 = 1.96


@dataclass
class CoverageEstimate:
    level: int
    inside: int
    samples: int
    expected: Optional[Fraction] = None
    exact: bool = False

    @property
    def fraction(self) -> float:
        return self.inside / self.samples if self.samples else 0.0

    @property
    def half_width(self) -> float:
        if self.exact or not self.samples:
            return 0.0
        p = self.fraction
        return _Z95 * math.sqrt(max(p * (1 - p), 1.0 / self.samples) / self.samples)

    def consistent(self, sigmas: float = 4.0) -> bool:
        """Estimate agrees with the expected coverage within ``sigmas`` standard errors."""
        if self.expected is None:
            return True
        p = float(self.expected)
        if self.exact:
            return self.fraction == p
        sigma = math.sqrt(max(p * (1 - p), 1.0 / self.samples) / self.samples)
        return abs(self.fraction - p) <= sigmas * sigma

    def to_record(self) -> dict:
        return {
            "level": self.level,
            "inside": self.inside,
            "samples": self.samples,
            "fraction": self.fraction,
            "half_width": self.half_width,
            "expected": format_fraction(self.expected) if self.expected is not None else None,
            "exact": self.exact,
        }


@dataclass
class TowerReport:
    tower: TowerData
    model: str
    exact: bool
    growth_condition: bool
    growth_exempt: bool = False
    disjoint: bool = True
    nested: bool = True
    group_law: bool = True
    coverage: list[CoverageEstimate] = field(default_factory=list)
    checked_translates: int = 0
    first_violation: Optional[str] = None

    @property
    def increasing(self) -> bool:
        fractions = [c.fraction for c in self.coverage]
        return all(a <= b for a, b in zip(fractions, fractions[1:]))

    @property
    def coverage_consistent(self) -> bool:
        return all(c.consistent() for c in self.coverage)

    @property
    def passed(self) -> bool:
        growth_ok = self.growth_condition or self.growth_exempt
        return (
            growth_ok and self.disjoint and self.nested and self.group_law
            and self.increasing and self.coverage_consistent
        )

    def fail(self, check: str, message: str) -> None:
        setattr(self, check, False)
        if self.first_violation is None:
            self.first_violation = f"{check}: {message}"

    def coverage_at(self, n: int) -> float:
        return self.coverage[n - 1].fraction

    def to_record(self) -> dict:
        return {
            "tower": self.tower.to_record(),
            "model": self.model,
            "exact": self.exact,
            "ratio_sum": format_fraction(self.tower.ratio_sum),
            "growth_condition": self.growth_condition,
            "growth_exempt": self.growth_exempt,
            "disjoint": self.disjoint,
            "nested": self.nested,
            "group_law": self.group_law,
            "increasing": self.increasing,
            "coverage_consistent": self.coverage_consistent,
            "coverage": [c.to_record() for c in self.coverage],
            "checked_translates": self.checked_translates,
            "passed": self.passed,
            "first_violation": self.first_violation,
        }


def _sample_translations(rng: np.random.Generator, side: int, dim: int, count: int) -> list[tuple[Fraction, ...]]:
    count = min(count, (4 * side) ** dim)
    offsets = {tuple(Fraction(0) for _ in range(dim))}
    while len(offsets) < count:
        ticks = rng.integers(0, 4 * side, size=dim)
        offsets.add(tuple(Fraction(int(t), 4) for t in ticks))
    return sorted(offsets)


def check_action_laws(
    model: ActionModel, samples: int = 16, seed: int = 0
) -> Optional[str]:
    """T_0 x = x, T_u T_v x = T_{u+v} x and T_z x ≠ x for z ≠ 0 on sampled states; the first failure or None."""
    rng = np.random.default_rng([seed, 1])
    zero = tuple(Fraction(0) for _ in range(model.dim))
    # a finite-depth solenoid has period a_N, so translations stay inside (-a_N, a_N)
    top = model.tower.side(model.tower.depth)
    for _ in range(samples):
        x = model.sample(rng)
        u, v = (tuple(Fraction(int(t), 8) for t in rng.integers(1 - 8 * top, 8 * top, size=model.dim))
                for _ in range(2))
        if model.encode(model.apply(zero, x)) != model.encode(x):
            return "translation by zero moves a state"
        left = model.apply(u, model.apply(v, x))
        right = model.apply(tuple(a + b for a, b in zip(u, v)), x)
        if model.encode(left) != model.encode(right):
            return f"T_u T_v differs from T_(u+v) for u={[str(c) for c in u]}, v={[str(c) for c in v]}"
        if u != zero and model.encode(model.apply(u, x)) == model.encode(x):
            return f"translation by {[str(c) for c in u]} fixes a state"
    return None


def estimate_coverage(model: ActionModel, n: int, samples: int, seed: int = 0) -> CoverageEstimate:
    rng = np.random.default_rng(seed)
    inside = sum(model.tower_coordinates(n, model.sample(rng)) is not None for _ in range(samples))
    return CoverageEstimate(n, int(inside), samples, model.expected_coverage(n), model.exact)


def validate_tower(
    tower: TowerData,
    model: ActionModel,
    samples: int = 1000,
    seed: int = 0,
    base_points: int = 4,
    translates: int = 16,
) -> TowerReport:
    """Check the tower hypotheses on ``model``.

    Raises TowerParameterError when a supplied tower violates the growth
    condition Σ a_n/a_{n+1} < 1/2. On a SolenoidActionModel the condition is
    only reported, since its coverage is complete by construction; the
    exemption follows the model type, not the ``source`` label on ``tower``.
    """
    if tower.a != model.tower.a or tower.dim != model.dim:
        raise TowerParameterError(f"tower {list(tower.a)} does not match the model's tower {list(model.tower.a)}")
    growth = tower.growth_condition()
    exempt = isinstance(model, SolenoidActionModel)
    if not growth and not exempt:
        raise TowerParameterError(f"sum of a_n/a_(n+1) is {tower.ratio_sum}; it must be below 1/2")
    report = TowerReport(tower, model.name, model.exact, growth, growth_exempt=exempt)
    rng = np.random.default_rng(seed)
    violation = check_action_laws(model, seed=seed)
    if violation is not None:
        report.fail("group_law", violation)

    for n in range(1, tower.depth + 1):
        for _ in range(base_points):
            x = model.sample_base(n, rng)
            key = model.encode(x)
            images = set()
            offsets = _sample_translations(rng, tower.side(n), tower.dim, translates)
            for z in offsets:
                y = model.apply(z, x)
                images.add(model.encode(y))
                coords = model.tower_coordinates(n, y)
                report.checked_translates += 1
                if coords is None or coords[0] != z or model.encode(coords[1]) != key:
                    report.fail("disjoint", f"level {n}: translate by {[str(v) for v in z]} is not recovered")
                    break
            if len(images) != len(offsets) and report.disjoint:
                report.fail("disjoint", f"level {n}: distinct translations collide")

    points = [model.sample(rng) for _ in range(samples)]
    membership = [[model.tower_coordinates(n, y) is not None for y in points] for n in range(1, tower.depth + 1)]
    for n in range(1, tower.depth):
        if any(low and not high for low, high in zip(membership[n - 1], membership[n])):
            report.fail("nested", f"a sample of S_{n}B_{n} lies outside S_{n + 1}B_{n + 1}")
    report.coverage = [
        CoverageEstimate(n, sum(membership[n - 1]), samples, model.expected_coverage(n), model.exact)
        for n in range(1, tower.depth + 1)
    ]
    logger.info(
        "tower_validated",
        extra={"extra": {"model": model.name, "a": list(tower.a), "passed": report.passed,
                         "coverage": [c.fraction for c in report.coverage],
                         "first_violation": report.first_violation}},
    )
    return report
