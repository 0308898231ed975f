"""Dense-orbit witnesses: where each planted p_k survives inside q_n."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from construction.plan import StagePlan, chain_translation, margin_width
from construction.stage import Stage
from runge.polynomial import ComplexPolynomial
from runge.regions import Rect
from shared.constants import MEASUREMENT_GRID_MIN
from shared.exact import ComplexRational, format_fraction
from shared.logging import get_logger
from solenoid.sampling import HaarSampler

logger = get_logger("construction.density")


class ChainBrokenError(RuntimeError):
    pass


@dataclass(frozen=True)
class DensityCertificate:
    k: int
    n: int
    translation: ComplexRational
    square: Rect
    radius: Fraction
    measured: float
    bound: Fraction
    grid: int

    @property
    def holds(self) -> bool:
        return self.measured <= float(self.bound)

    def to_record(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "translation": self.translation.to_record(),
            "square": self.square.to_record(),
            "radius": format_fraction(self.radius),
            "measured": self.measured,
            "bound": format_fraction(self.bound),
            "grid": self.grid,
            "holds": self.holds,
        }


@dataclass(frozen=True)
class TelescopingReport:
    m: int
    n: int
    measured: float
    bound: Fraction

    @property
    def holds(self) -> bool:
        return self.measured <= float(self.bound)


def _shrink(m: int, n: int) -> Fraction:
    """Σ_{l=m}^{n-1} 10^-l."""
    return sum((margin_width(l + 1) for l in range(m, n)), Fraction(0))


def _chain_square(plan: StagePlan, k: int, n: int) -> Rect:
    if k >= 2:
        side = Fraction(plan.radix.modulus(k - 1))
        s = _shrink(k - 1, n)
    else:
        side = Fraction(plan.radix.modulus(1))
        s = _shrink(1, n)
    if 2 * s >= side:
        raise ChainBrokenError(f"measurement square for k={k}, n={n} is empty")
    return Rect(s, side - s, s, side - s)


def _verify_chain(stages: Sequence[Stage], plan: StagePlan, k: int, n: int, square: Rect, planted: bool) -> None:
    first = k if planted and k >= 2 else k + 1
    for m in range(first, n + 1):
        index = (0, 0) if m == k else (1, 0)
        moved = square.translated(chain_translation(plan, k, m))
        host = stages[m - 1].square(index)
        if not (host.x0 <= moved.x0 and moved.x1 <= host.x1 and host.y0 <= moved.y0 and moved.y1 <= host.y1):
            raise ChainBrokenError(f"stage-{k} square leaves K_{index} at stage {m}")


def _grid(square: Rect, grid: int) -> np.ndarray:
    xs = np.linspace(float(square.x0), float(square.x1), grid)
    ys = np.linspace(float(square.y0), float(square.y1), grid)
    xx, yy = np.meshgrid(xs, ys)
    return (xx + 1j * yy).ravel()


def _measure(outer: ComplexPolynomial, inner: ComplexPolynomial, w: ComplexRational, square: Rect, grid: int) -> float:
    z = _grid(square, grid)
    return float(np.max(np.abs(outer.evaluate_array(z + w.to_complex()) - inner.evaluate_array(z))))


def density_check(
    stages: Sequence[Stage], plan: StagePlan, k: int, grid: int = MEASUREMENT_GRID_MIN
) -> DensityCertificate:
    """Sup of |q_n(w + z) − p_k(z)| over the shrunken stage-k square, with its telescoping bound."""
    n = stages[-1].n
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in 1..{n}, got {k}")
    grid = max(grid, MEASUREMENT_GRID_MIN)
    square = _chain_square(plan, k, n)
    _verify_chain(stages, plan, k, n, square, planted=True)
    w = chain_translation(plan, k, n)
    measured = _measure(stages[-1].poly, plan.poly_at(k), w, square, grid)
    bound = sum((plan.eps_at(l) for l in range(k, n + 1)), Fraction(0))
    certificate = DensityCertificate(
        k=k, n=n, translation=w, square=square, radius=square.width / 2,
        measured=measured, bound=bound, grid=grid,
    )
    logger.info(
        "density_certificate",
        extra={"extra": {"k": k, "n": n, "measured": measured, "bound": str(bound), "holds": certificate.holds}},
    )
    return certificate


def telescoping_check(
    stages: Sequence[Stage], plan: StagePlan, m: int, n: int, grid: int = MEASUREMENT_GRID_MIN
) -> TelescopingReport:
    """Sup of |q_n(w + z) − q_m(z)| along the chain from stage m, bounded by Σ_{l=m+1}^{n} eps_l."""
    if not 1 <= m < n <= len(stages):
        raise ValueError(f"need 1 <= m < n <= {len(stages)}")
    s = _shrink(m, n)
    side = Fraction(plan.radix.modulus(m))
    square = Rect(s, side - s, s, side - s)
    _verify_chain(stages, plan, m, n, square, planted=False)
    w = chain_translation(plan, m, n)
    measured = _measure(stages[n - 1].poly, stages[m - 1].poly, w, square, max(grid, MEASUREMENT_GRID_MIN))
    bound = sum((plan.eps_at(l) for l in range(m + 1, n + 1)), Fraction(0))
    return TelescopingReport(m=m, n=n, measured=measured, bound=bound)


@dataclass(frozen=True)
class PatchReport:
    n: int
    radius: Fraction
    samples: int
    inside: int
    expected: float

    @property
    def fraction(self) -> float:
        return self.inside / self.samples

    @property
    def half_width(self) -> float:
        p = self.fraction
        return 1.96 * math.sqrt(max(p * (1 - p), 1e-12) / self.samples)


def orbit_patch_fraction(
    stage: Stage, plan: StagePlan, radius: Fraction, samples: int, seed: int, resolution: int = 64
) -> PatchReport:
    """Fraction of Haar points whose orbit patch t_n + [−ρ, ρ]² lies in one K-square of stage n."""
    if stage.n < 2:
        raise ValueError("stage 1 has no K-squares")
    radius = Fraction(radius)
    sampler = HaarSampler(plan.radix, stage.n, resolution, seed)
    inside = 0
    for g in sampler.sample_many(samples):
        x, y = g.level(stage.n)
        for _, square in stage.squares:
            inside_x = square.x0 <= x - radius and x + radius <= square.x1
            if inside_x and square.y0 <= y - radius and y + radius <= square.y1:
                inside += 1
                break
    r_n = plan.radix.radix(stage.n)
    side = Fraction(plan.radix.modulus(stage.n - 1)) - 2 * margin_width(stage.n) - 2 * radius
    expected = float(r_n * r_n * max(side, Fraction(0)) ** 2 / Fraction(plan.radix.modulus(stage.n)) ** 2)
    return PatchReport(n=stage.n, radius=radius, samples=samples, inside=inside, expected=expected)
