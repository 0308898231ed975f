"""Staged construction over nested towers.

Stage n works cell by cell. For the representative x of a cell it collects
the return copies λ + S_{n-1}, clears one center copy per sub-cube of S_n for
the planted polynomial p_n, removes thin strips so the remaining boxes are
separated, and (for d = 1) fits one polynomial F_n^j that is p_n(z − w) on
the centers and F_{n-1}^ℓ(z − λ) on the return copies. The error set of the
stage is accounted in a ledger and every planted polynomial is re-measured
through the chain of translations that carries it to stage n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from construction.density import ChainBrokenError
from polyconvex import Box, DecompositionResult, decompose, rescale_result
from runge import ApproximationError, ApproxReport, ComplexPolynomial, Piece, PiecewiseTarget, Rect, fit_polynomial
from shared.constants import (
    DEFAULT_DEGREE_CAP,
    DEFAULT_GRID_DENSITY,
    DEFAULT_PRECISION_BITS,
    MEASUREMENT_GRID_MIN,
    RANDOM_POINTS,
)
from shared.exact import ComplexRational, format_fraction, format_tuple
from shared.logging import get_logger
from towers.centers import CubeCollection, assemble_collection, choose_centers
from towers.model import ActionModel
from towers.partition import PartitionData, delta_fine_partition, return_sets, trivial_partition
from towers.tower import BudgetViolationError, ConditionDError, DomainError, StageFitError, Vector
from towers.validate import estimate_coverage

logger = get_logger("towers.stage")

COVERAGE_SAMPLES = 2000


def dyadic(n: int) -> Fraction:
    return Fraction(1, 2**n)


def condition_d_bound(k: int, n: int) -> Fraction:
    """Planting error 2^-k (none for k = 1) plus the telescoped Σ_{ℓ=k+1}^n 2^-ℓ."""
    planting = Fraction(0) if k == 1 else dyadic(k)
    return planting + sum((dyadic(m) for m in range(k + 1, n + 1)), Fraction(0))


@dataclass
class ConditionDCertificate:
    k: int
    n: int
    cell: int
    translation: Vector
    region: Box
    measured: float
    bound: Fraction
    grid: int
    random_points: int

    @property
    def holds(self) -> bool:
        return self.measured <= float(self.bound)

    def to_record(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "cell": self.cell,
            "translation": format_tuple(self.translation),
            "region": self.region.to_record(),
            "measured": self.measured,
            "bound": format_fraction(self.bound),
            "grid": self.grid,
            "random_points": self.random_points,
            "holds": self.holds,
        }


@dataclass
class ErrorLedger:
    """Upper estimate of the error set E_n split into its three sources."""

    n: int
    decomposition_loss: Fraction
    replaced_measured: float
    replaced_bound: Fraction
    uncovered: float
    budget: Fraction

    @property
    def total(self) -> float:
        return float(self.decomposition_loss) + self.replaced_measured + self.uncovered

    @property
    def holds(self) -> bool:
        return self.total < float(self.budget)

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "decomposition_loss": format_fraction(self.decomposition_loss),
            "replaced_measured": self.replaced_measured,
            "replaced_bound": format_fraction(self.replaced_bound),
            "uncovered": self.uncovered,
            "total": self.total,
            "budget": format_fraction(self.budget),
            "holds": self.holds,
        }


@dataclass
class CellStage:
    cell: int
    representative: Any
    weight: Fraction
    poly: Optional[ComplexPolynomial]
    anchors: dict[int, Vector]
    report: Optional[ApproxReport] = None
    collection: Optional[CubeCollection] = None
    decomposition: Optional[DecompositionResult] = None
    boxes: list[Box] = field(default_factory=list)
    removed: Fraction = Fraction(0)

    def to_record(self) -> dict:
        return {
            "cell": self.cell,
            "weight": format_fraction(self.weight),
            "polynomial": self.poly.to_record() if self.poly is not None else None,
            "report": self.report.to_record() if self.report is not None else None,
            "anchors": {str(k): format_tuple(w) for k, w in sorted(self.anchors.items())},
            "collection": self.collection.to_record() if self.collection is not None else None,
            "boxes": len(self.boxes),
            "removed": format_fraction(self.removed),
        }


@dataclass
class GeneralStage:
    n: int
    model: ActionModel
    partition: PartitionData
    planted: dict[int, ComplexPolynomial]
    cells: list[CellStage]
    delta: Fraction
    fitted: bool
    ledger: Optional[ErrorLedger] = None
    certificates: list[ConditionDCertificate] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def side(self) -> int:
        return self.model.tower.side(self.n)

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "side": self.side,
            "delta": format_fraction(self.delta),
            "fitted": self.fitted,
            "partition": self.partition.to_record(),
            "cells": [cell.to_record() for cell in self.cells],
            "ledger": self.ledger.to_record() if self.ledger is not None else None,
            "certificates": [cert.to_record() for cert in self.certificates],
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# measurement helpers
# ---------------------------------------------------------------------------

def _plane_points(region: Box, grid: int, count: int, rng: np.random.Generator) -> np.ndarray:
    (x0, x1), (y0, y1) = [(float(lo), float(hi)) for lo, hi in region.intervals]
    xs, ys = np.meshgrid(np.linspace(x0, x1, grid), np.linspace(y0, y1, grid))
    lattice = (xs + 1j * ys).ravel()
    if not count:
        return lattice
    random = rng.uniform(x0, x1, count) + 1j * rng.uniform(y0, y1, count)
    return np.concatenate([lattice, random])


def _as_complex(w: Vector) -> complex:
    return complex(float(w[0]), float(w[1]))


def modulus_delta(stage: "GeneralStage", n: int, grid: int = MEASUREMENT_GRID_MIN) -> Fraction:
    """δ_n in (0, 1) with |F(z) − F(w)| < 10^{-2n}/2 whenever |z − w| < δ_n on S_{n-1}^{+1}.

    Uses the derivative bound |F(z) − F(w)| <= sup|F'|·|z − w| with sup|F'|
    sampled on a grid and inflated by 1%.
    """
    target = 1 / (2 * 10 ** (2 * n))
    side = stage.side
    region = Box(((Fraction(-1), Fraction(side + 1)),) * 2)
    points = _plane_points(region, grid, 0, np.random.default_rng(0))
    slope = 0.0
    for cell in stage.cells:
        if cell.poly is not None:
            slope = max(slope, float(np.max(np.abs(cell.poly.derivative().evaluate_array(points)))))
    if slope == 0.0:
        return Fraction(1, 2)
    return min(Fraction(1, 2), Fraction(target / (slope * 1.01)).limit_denominator(10**15))


# ---------------------------------------------------------------------------
# Condition (D)
# ---------------------------------------------------------------------------

def _condition_region(stage: GeneralStage, k: int, translation: Vector) -> Box:
    tower = stage.model.tower
    side = tower.side(k - 1) if k >= 2 else tower.side(1)
    inset = sum((dyadic(m) for m in range(max(k, 2), stage.n + 1)), Fraction(0))
    if 2 * inset >= side:
        raise ChainBrokenError(f"stage {stage.n}: the inset {inset} leaves nothing of the level-{k} cube")
    return Box(tuple((w + inset, w + side - inset) for w in translation))


def condition_d_check(
    stage: GeneralStage,
    k: int,
    grid: int = MEASUREMENT_GRID_MIN,
    random_points: int = RANDOM_POINTS,
    seed: int = 0,
) -> list[ConditionDCertificate]:
    """Measure sup |F_n^j(w + z) − p_k(z)| on the shrunken planted cube of every cell.

    Raises ConditionDError on the first cell whose measurement exceeds the bound.
    """
    if not 1 <= k <= stage.n:
        raise DomainError(f"Condition (D) needs 1 <= k <= {stage.n}, got {k}")
    if not stage.fitted:
        raise DomainError("Condition (D) is measured only on fitted stages (d = 1)")
    rng = np.random.default_rng([seed, stage.n, k])
    bound = condition_d_bound(k, stage.n)
    p_k = stage.planted[k]
    certificates = []
    for cell in stage.cells:
        if k not in cell.anchors:
            raise ChainBrokenError(f"stage {stage.n} cell {cell.cell}: no chain of copies carries p_{k}")
        w = cell.anchors[k]
        region = _condition_region(stage, k, w)
        if cell.boxes and not any(box.contains(region) for box in cell.boxes):
            raise ChainBrokenError(f"stage {stage.n} cell {cell.cell}: the p_{k} cube is cut by the removed strips")
        z = _plane_points(region, grid, random_points, rng)
        measured = float(np.max(np.abs(cell.poly.evaluate_array(z) - p_k.evaluate_array(z - _as_complex(w)))))
        cert = ConditionDCertificate(k, stage.n, cell.cell, w, region, measured, bound, grid, random_points)
        logger.info("condition_d", extra={"extra": {"n": stage.n, "k": k, "cell": cell.cell,
                                                    "measured": measured, "bound": str(bound)}})
        if not cert.holds:
            raise ConditionDError(
                f"stage {stage.n} cell {cell.cell}: Condition (D) for p_{k} measured {measured:.3e} > {bound}"
            )
        certificates.append(cert)
    return certificates


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def first_general_stage(p_1: ComplexPolynomial, model: ActionModel) -> GeneralStage:
    """F_1(T_z x) = p_1(z) on all of S_1B_1."""
    zero = tuple(Fraction(0) for _ in range(model.dim))
    partition = trivial_partition(model)
    cell = CellStage(0, partition.representatives[0], Fraction(1), p_1, {1: zero})
    fitted = model.tower.d == 1
    stage = GeneralStage(1, model, partition, {1: p_1}, [cell], Fraction(1), fitted)
    if fitted:
        stage.certificates = condition_d_check(stage, 1)
    else:
        stage.notes.append("numeric fitting skipped: polynomial approximation is one-variable (d = 1 only)")
    return stage


def _owner(box: Box, collection: CubeCollection) -> tuple[Vector, Optional[int]]:
    side = collection.side
    for corner in collection.centers:
        if Box(tuple((c, c + side) for c in corner)).contains(box):
            return corner, None
    for corner, cell in collection.returns:
        if Box(tuple((c, c + side) for c in corner)).contains(box):
            return corner, cell
    raise ChainBrokenError(f"box {box.to_record()} lies in no cube of the collection")


def _fit_cell(
    n: int, j: int, boxes: Sequence[Box], collection: CubeCollection, p_n: ComplexPolynomial,
    prev: GeneralStage, degree_cap: int, grid_density: int, precision_bits: int,
) -> tuple[ComplexPolynomial, ApproxReport]:
    pieces = []
    for box in boxes:
        corner, source = _owner(box, collection)
        target = p_n if source is None else prev.cells[source].poly
        (x0, x1), (y0, y1) = box.intervals
        pieces.append(Piece(Rect(x0, x1, y0, y1), target, ComplexRational(corner[0], corner[1])))
    try:
        return fit_polynomial(PiecewiseTarget(tuple(pieces)), dyadic(n), degree_cap, grid_density, precision_bits)
    except ApproximationError as exc:
        raise StageFitError(f"stage {n} cell {j}: {exc}") from exc


def _replaced_fraction(
    cell: CellStage, prev: GeneralStage, eps: Fraction, grid: int
) -> float:
    """Share of the displaced return copies where |F_n − F_{n-1}| exceeds eps."""
    side = cell.collection.side
    bad = 0
    total = 0
    rng = np.random.default_rng(0)
    for corner, source in cell.collection.dropped:
        region = Box(tuple((c, c + side) for c in corner))
        z = _plane_points(region, grid, 0, rng)
        old = prev.cells[source].poly.evaluate_array(z - _as_complex(corner))
        new = cell.poly.evaluate_array(z)
        bad += int(np.count_nonzero(np.abs(new - old) > float(eps)))
        total += z.size
    return bad / total if total else 0.0


def general_stage(
    prev: GeneralStage,
    p_n: ComplexPolynomial,
    model: ActionModel,
    part: Optional[PartitionData] = None,
    *,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    grid_density: int = DEFAULT_GRID_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    coverage: Optional[Mapping[int, float]] = None,
    seed: int = 0,
    partition_delta: Optional[Fraction] = None,
) -> GeneralStage:
    """Stage n over the nested towers.

    Without an explicit ``part`` the partition mesh is the modulus δ when the
    cells are fitted and 1/2 otherwise; ``partition_delta`` may only refine
    the modulus δ, and replaces 1/2 outright.
    """
    n = prev.n + 1
    tower = model.tower
    if n > tower.depth:
        raise DomainError(f"the tower has only {tower.depth} levels")
    fitted = prev.fitted and tower.d == 1
    if part is None:
        delta = modulus_delta(prev, n) if fitted else Fraction(1, 2)
        if partition_delta is not None:
            delta = min(delta, partition_delta) if fitted else partition_delta
        part = delta_fine_partition(n, delta, model, prev.partition)
    delta = part.delta
    side, top, dim = tower.side(n - 1), tower.side(n), tower.dim
    eps = dyadic(n)
    centers = choose_centers(tower, n)
    total_members = sum(len(m) for m in part.members) or 1

    cells = []
    for j, x in enumerate(part.representatives):
        returns = return_sets(x, n, prev.partition, model)
        collection = assemble_collection(returns, centers, tower, n)
        result = decompose(collection.unit_cubes(), eps)
        boxes, removed = rescale_result(result, Fraction(side), tuple(Fraction(side, 2) for _ in range(dim)))
        anchors = {n: centers[0]}
        if collection.returns:
            corner, source = collection.returns[0]
            for k, w in prev.cells[source].anchors.items():
                anchors[k] = tuple(c + v for c, v in zip(corner, w))
        if part.members:
            weight = Fraction(len(part.members[j]), total_members)
        else:
            weight = Fraction(1, len(part.representatives))
        cell = CellStage(j, x, weight, None, anchors, None, collection, result, boxes, removed)
        if fitted:
            cell.poly, cell.report = _fit_cell(
                n, j, boxes, collection, p_n, prev, degree_cap, grid_density, precision_bits
            )
        cells.append(cell)

    stage = GeneralStage(n, model, part, {**prev.planted, n: p_n}, cells, delta, fitted)
    if not fitted:
        stage.notes.append("numeric fitting skipped: polynomial approximation is one-variable (d = 1 only)")

    volume = Fraction(top) ** dim
    loss = sum((cell.weight * cell.removed / volume for cell in cells), Fraction(0))
    replaced_bound = sum(
        (cell.weight * len(cell.collection.dropped) * Fraction(side) ** dim / volume for cell in cells), Fraction(0)
    )
    if fitted:
        replaced = sum(
            float(cell.weight) * _replaced_fraction(cell, prev, eps, MEASUREMENT_GRID_MIN)
            * len(cell.collection.dropped) * side**dim / top**dim
            for cell in cells
        )
    else:
        replaced = float(replaced_bound)
    if model.exact:
        uncovered = float(1 - model.expected_coverage(n - 1))
    elif coverage is not None and n - 1 in coverage:
        uncovered = 1.0 - coverage[n - 1]
    else:
        uncovered = 1.0 - estimate_coverage(model, n - 1, COVERAGE_SAMPLES, seed).fraction
    stage.ledger = ErrorLedger(n, loss, replaced, replaced_bound, uncovered, eps)
    logger.info("stage_ledger", extra={"extra": stage.ledger.to_record()})
    if not stage.ledger.holds:
        raise BudgetViolationError(
            f"stage {n}: error-set estimate {stage.ledger.total:.3e} is not below {eps}"
            f" (loss {float(loss):.3e}, replaced {replaced:.3e}, uncovered {uncovered:.3e})"
        )

    if fitted:
        for k in range(1, n + 1):
            stage.certificates.extend(condition_d_check(stage, k, seed=seed))
    logger.info(
        "general_stage_certified",
        extra={"extra": {"n": n, "cells": len(cells), "fitted": fitted, "certificates": len(stage.certificates)}},
    )
    return stage


def build_general(
    polys: Sequence[ComplexPolynomial],
    model: ActionModel,
    *,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    grid_density: int = DEFAULT_GRID_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    coverage: Optional[Mapping[int, float]] = None,
    seed: int = 0,
    partition_delta: Optional[Fraction] = None,
) -> list[GeneralStage]:
    if not polys:
        raise DomainError("need at least one polynomial")
    if len(polys) > model.tower.depth:
        raise DomainError(f"{len(polys)} stages requested but the tower has {model.tower.depth} levels")
    stages = [first_general_stage(polys[0], model)]
    for p_n in polys[1:]:
        stages.append(general_stage(
            stages[-1], p_n, model, degree_cap=degree_cap, grid_density=grid_density,
            precision_bits=precision_bits, coverage=coverage, seed=seed, partition_delta=partition_delta,
        ))
    return stages


@dataclass
class BudgetReport:
    totals: dict[int, float]
    budgets: dict[int, Fraction]

    @property
    def total(self) -> float:
        return sum(self.totals.values())

    @property
    def holds(self) -> bool:
        return all(self.totals[n] < float(self.budgets[n]) for n in self.totals) and self.total < 1.0

    def to_record(self) -> dict:
        return {
            "totals": {str(n): v for n, v in sorted(self.totals.items())},
            "budgets": {str(n): format_fraction(b) for n, b in sorted(self.budgets.items())},
            "total": self.total,
            "holds": self.holds,
        }


def budget_ledger(stages: Sequence[GeneralStage]) -> BudgetReport:
    """Σ_n of the error-set estimates against Σ 2^-n = 1."""
    ledgers = [stage.ledger for stage in stages if stage.ledger is not None]
    return BudgetReport({l.n: l.total for l in ledgers}, {l.n: l.budget for l in ledgers})
