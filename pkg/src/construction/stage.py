from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import mpmath

from construction.plan import StagePlan
from runge.fit import ApproximationError, ApproxReport, Piece, PiecewiseTarget, fit_polynomial
from runge.polynomial import ComplexPolynomial
from runge.regions import Rect
from shared.exact import ComplexRational, RationalLike
from shared.logging import get_logger
from shared.retry import Attempt, RetryConfig, call_with_retry
from solenoid.point import SolenoidPoint, factor, translate

logger = get_logger("construction.stage")


class StageError(ValueError):
    pass


@dataclass(frozen=True)
class Stage:
    """q_n, the single polynomial realizing F_n on S_n, with its K-square layout."""

    n: int
    poly: ComplexPolynomial
    squares: tuple[tuple[tuple[int, int], Rect], ...]
    report: ApproxReport
    eps: Fraction
    prev_digest: Optional[str] = None

    def square(self, index: tuple[int, int]) -> Rect:
        for key, rect in self.squares:
            if key == index:
                return rect
        raise StageError(f"stage {self.n} has no square {index}")


def first_stage(plan: StagePlan) -> Stage:
    """F_1(z, b) = p_1(z) on all of S_1; nothing to fit."""
    p1 = plan.poly_at(1)
    report = ApproxReport(
        method="exact", eps=plan.eps_at(1), degree=p1.degree, achieved_eps=0.0,
        precision_bits=plan.precision_bits, history=[(p1.degree, 0.0)], certified=True,
    )
    return Stage(n=1, poly=p1, squares=(), report=report, eps=plan.eps_at(1))


def stage_target(plan: StagePlan, prev: Stage, p_n: ComplexPolynomial) -> PiecewiseTarget:
    n = prev.n + 1
    r_prev = Fraction(plan.radix.modulus(n - 1))
    pieces = []
    for (i, j), square in plan.squares(n):
        if (i, j) == (0, 0):
            pieces.append(Piece(square, p_n))
        else:
            pieces.append(Piece(square, prev.poly, ComplexRational(i * r_prev, j * r_prev)))
    return PiecewiseTarget(tuple(pieces))


def build_stage(
    plan: StagePlan,
    prev: Stage,
    p_n: ComplexPolynomial,
    r_n: int,
    degree_cap: int,
    precision_bits: Optional[int] = None,
    prev_digest: Optional[str] = None,
) -> Stage:
    n = prev.n + 1
    if n > plan.stages:
        raise StageError(f"plan has {plan.stages} stages, cannot build stage {n}")
    if r_n != plan.radix.radix(n):
        raise StageError(f"stage {n} expects r_n = {plan.radix.radix(n)}, got {r_n}")
    eps = plan.eps_at(n)
    target = stage_target(plan, prev, p_n)
    try:
        poly, report = fit_polynomial(
            target, eps, degree_cap=degree_cap, grid_density=plan.grid_density,
            precision_bits=precision_bits or plan.precision_bits,
        )
    except ApproximationError as exc:
        raise ApproximationError(f"stage {n}: {exc}", exc.report) from exc
    logger.info(
        "stage_certified",
        extra={"extra": {"stage": n, "degree": report.degree, "achieved": report.achieved_eps,
                         "eps": str(eps), "method": report.method}},
    )
    return Stage(
        n=n, poly=poly, squares=tuple(plan.squares(n)), report=report, eps=eps, prev_digest=prev_digest,
    )


def build(
    plan: StagePlan,
    retry: Optional[RetryConfig] = None,
    existing: Optional[list[Stage]] = None,
    on_stage: Optional[Callable[[Stage], Optional[str]]] = None,
    last_digest: Optional[str] = None,
) -> list[Stage]:
    """Stages 1..N in order. ``on_stage`` may persist a stage and return its digest."""
    stages = list(existing or [])
    digest = last_digest
    if not stages:
        stage = first_stage(plan)
        stages.append(stage)
        digest = on_stage(stage) if on_stage else None
    else:
        logger.info("resuming_build", extra={"extra": {"completed": len(stages)}})

    while len(stages) < plan.stages:
        prev = stages[-1]
        n = prev.n + 1

        def attempt(a: Attempt, prev: Stage = prev, n: int = n) -> Stage:
            return build_stage(plan, prev, plan.poly_at(n), plan.radix.radix(n), a.degree_cap,
                               a.precision_bits, prev_digest=digest)

        stage = call_with_retry(
            f"build_stage_{n}",
            attempt,
            lambda exc: isinstance(exc, ApproximationError),
            degree_cap=plan.cap_at(n),
            precision_bits=plan.precision_bits,
            config=retry,
        )
        stages.append(stage)
        digest = on_stage(stage) if on_stage else None
    return stages


def evaluate(g: SolenoidPoint, stage: Stage, z: ComplexRational | RationalLike = 0) -> mpmath.mpc:
    """F_n along the orbit of g: q_n at the level-n offset of g translated by z."""
    if g.depth < stage.n:
        raise StageError(f"point depth {g.depth} is below stage {stage.n}")
    if g.dim != 2:
        raise StageError("stage evaluation needs a one complex dimensional solenoid")
    z = ComplexRational.of(z)
    offset, _ = factor(translate(g, (z.re, z.im)), stage.n)
    return stage.poly.evaluate(ComplexRational(offset[0], offset[1]))
