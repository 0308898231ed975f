"""Separating polynomials for hyperplane splits and for unions of products.

A hyperplane split between two families of boxes is instantiated by a
polynomial in the single complex coordinate containing the split axis: it is
small on one side and close to 1 on the other. Unions of products K_i × L_j
of planar squares are certified by the double induction: first each column
K_1 ∪ … ∪ K_a at a fixed L_j, then the columns against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from polyconvex.boxes import Box
from polyconvex.certificate import ReplayReport
from polyconvex.cubes import DisjointnessError
from runge.fit import ApproximationError, ApproxReport, separating_polynomial
from runge.polynomial import ComplexPolynomial
from runge.regions import Rect, separated
from shared.constants import CERTIFICATION_SAFETY, DEFAULT_DEGREE_CAP, DEFAULT_GRID_DENSITY, DEFAULT_PRECISION_BITS
from shared.exact import RationalLike, format_fraction, parse_fraction
from shared.logging import get_logger

logger = get_logger("polyconvex.kallin")

HYPERPLANE_BOUND = Fraction(1, 3)
PRODUCT_BOUND = Fraction(1, 10)


class KallinPreconditionError(ValueError):
    pass


def _hull(boxes: Sequence[Box]) -> Box:
    dim = boxes[0].dim
    return Box(tuple(
        (min(b.lo(axis) for b in boxes), max(b.hi(axis) for b in boxes)) for axis in range(1, dim + 1)
    ))


def _plane_rect(box: Box, plane: int) -> Rect:
    x0, x1 = box.intervals[2 * plane - 2]
    y0, y1 = box.intervals[2 * plane - 1]
    return Rect(x0, x1, y0, y1)


@dataclass(frozen=True)
class KallinWitness:
    """p(z⃗) = p_0(z_plane), |p| < bound on the lower family, |p − 1| < bound on the upper one."""

    axis: int
    coordinate: Fraction
    plane: int
    poly: ComplexPolynomial
    report: ApproxReport
    bound: Fraction

    @property
    def certified_below(self) -> Fraction:
        """bound·safety, the level the node grid certifies."""
        return self.bound * self.report.safety

    @property
    def lower_error(self) -> float:
        return self.report.piece_errors[0]

    @property
    def upper_error(self) -> float:
        return self.report.piece_errors[1]

    def evaluate(self, point: Sequence[Fraction]) -> complex:
        z = complex(float(point[2 * self.plane - 2]), float(point[2 * self.plane - 1]))
        return complex(self.poly.evaluate_array(np.array([z]))[0])

    def to_record(self) -> dict:
        return {
            "axis": self.axis,
            "coordinate": format_fraction(self.coordinate),
            "plane": self.plane,
            "bound": format_fraction(self.bound),
            "certified_below": format_fraction(self.certified_below),
            "lower_error": self.lower_error,
            "upper_error": self.upper_error,
            "polynomial": self.poly.to_record(),
            "report": self.report.to_record(),
        }


def kallin_witness(
    lower: Sequence[Box],
    upper: Sequence[Box],
    axis: int,
    coordinate: RationalLike,
    bound: RationalLike = HYPERPLANE_BOUND,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    grid_density: int = DEFAULT_GRID_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    safety: Fraction = CERTIFICATION_SAFETY,
) -> KallinWitness:
    """Witness for the split x_axis = coordinate.

    The fit is certified below bound·safety, so with the default safety a unit
    gap needs a higher degree than the raw bound would; ``safety=1`` certifies
    against the bound itself.
    """
    coordinate = parse_fraction(coordinate)
    bound = parse_fraction(bound)
    if not lower or not upper:
        raise KallinPreconditionError("both sides of a split need at least one box")
    dim = lower[0].dim
    if dim % 2 or any(b.dim != dim for b in list(lower) + list(upper)):
        raise KallinPreconditionError("boxes must share one even dimension")
    if not 1 <= axis <= dim:
        raise KallinPreconditionError(f"axis {axis} outside 1..{dim}")
    if any(b.hi(axis) >= coordinate for b in lower) or any(b.lo(axis) <= coordinate for b in upper):
        raise KallinPreconditionError(f"x_{axis} = {coordinate} does not strictly separate the two families")

    plane = math.ceil(axis / 2)
    a_rect = _plane_rect(_hull(lower), plane)
    b_rect = _plane_rect(_hull(upper), plane)
    poly, report = separating_polynomial(
        [a_rect], [b_rect], bound, degree_cap, grid_density, precision_bits, safety=safety
    )
    logger.info("kallin_witness", extra={"extra": {"axis": axis, "plane": plane, "degree": poly.degree,
                                                   "achieved": report.achieved_eps, "safety": str(safety)}})
    return KallinWitness(axis, coordinate, plane, poly, report, bound)


# ---------------------------------------------------------------------------
# unions of products
# ---------------------------------------------------------------------------

@dataclass
class ProductStep:
    step_id: int
    kind: str
    index: int
    column: Optional[int]
    lower: list[int]
    upper: list[int]
    poly: ComplexPolynomial
    report: ApproxReport

    def to_record(self) -> dict:
        return {
            "step_id": self.step_id,
            "kind": self.kind,
            "index": self.index,
            "column": self.column,
            "lower": list(self.lower),
            "upper": list(self.upper),
            "polynomial": self.poly.to_record(),
            "report": self.report.to_record(),
        }


@dataclass
class ProductCertificate:
    ks: list[Rect]
    ls: list[Rect]
    bound: Fraction
    leaves: list[Box] = field(default_factory=list)
    steps: list[ProductStep] = field(default_factory=list)

    def leaf_index(self, i: int, j: int) -> int:
        return j * len(self.ks) + i

    def to_record(self) -> dict:
        return {
            "ks": [rect.to_record() for rect in self.ks],
            "ls": [rect.to_record() for rect in self.ls],
            "bound": format_fraction(self.bound),
            "leaves": [leaf.to_record() for leaf in self.leaves],
            "steps": [step.to_record() for step in self.steps],
        }


def _check_family(rects: Sequence[Rect], name: str) -> None:
    if not rects:
        raise DisjointnessError(f"{name} is empty")
    for i, a in enumerate(rects):
        for j in range(i + 1, len(rects)):
            if not separated(a, rects[j]):
                raise DisjointnessError(f"{name}[{i}] and {name}[{j}] are not separated")


def _product_box(k: Rect, l: Rect) -> Box:
    return Box(((k.x0, k.x1), (k.y0, k.y1), (l.x0, l.x1), (l.y0, l.y1)))


def product_union_certificate(
    ks: Sequence[Rect],
    ls: Sequence[Rect],
    bound: RationalLike = PRODUCT_BOUND,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    grid_density: int = DEFAULT_GRID_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> ProductCertificate:
    bound = parse_fraction(bound)
    ks, ls = list(ks), list(ls)
    _check_family(ks, "Ks")
    _check_family(ls, "Ls")
    a, b = len(ks), len(ls)
    cert = ProductCertificate(ks, ls, bound)
    cert.leaves = [_product_box(ks[i], ls[j]) for j in range(b) for i in range(a)]

    def separate(family: list[Rect], u: int, step_id: int) -> tuple[ComplexPolynomial, ApproxReport]:
        try:
            return separating_polynomial(family[:u], [family[u]], bound, degree_cap, grid_density, precision_bits)
        except ApproximationError as exc:
            raise ApproximationError(f"product step {step_id}: {exc}", exc.report) from exc

    column_witness: dict[int, tuple[ComplexPolynomial, ApproxReport]] = {}
    for j in range(b):
        for u in range(1, a):
            step_id = len(cert.steps)
            if u not in column_witness:
                column_witness[u] = separate(ks, u, step_id)
            poly, report = column_witness[u]
            cert.steps.append(ProductStep(
                step_id=step_id, kind="product-k", index=u, column=j,
                lower=[cert.leaf_index(i, j) for i in range(u)], upper=[cert.leaf_index(u, j)],
                poly=poly, report=report,
            ))
    for v in range(1, b):
        step_id = len(cert.steps)
        poly, report = separate(ls, v, step_id)
        cert.steps.append(ProductStep(
            step_id=step_id, kind="product-l", index=v, column=None,
            lower=[cert.leaf_index(i, j) for j in range(v) for i in range(a)],
            upper=[cert.leaf_index(i, v) for i in range(a)],
            poly=poly, report=report,
        ))
    logger.info("product_certificate", extra={"extra": {"a": a, "b": b, "steps": len(cert.steps)}})
    return cert


def _sup(poly: ComplexPolynomial, rects: Sequence[Rect], target: float, density: int) -> float:
    return max(float(np.max(np.abs(poly.evaluate_array(r.validation_array(density)) - target))) for r in rects)


def replay_product_certificate(cert: ProductCertificate, density: int = 2 * DEFAULT_GRID_DENSITY + 1) -> ReplayReport:
    """Count, order and bounds of a product chain, with bounds re-measured on sample grids."""
    report = ReplayReport(passed=True)
    a, b = len(cert.ks), len(cert.ls)
    expected = b * (a - 1) + (b - 1)
    if len(cert.steps) != expected:
        return report.fail("count", f"{len(cert.steps)} steps, expected {expected}")
    report.checks["count"] = True

    order = [("product-k", u, j) for j in range(b) for u in range(1, a)] + [("product-l", v, None) for v in range(1, b)]
    for step, (kind, index, column) in zip(cert.steps, order):
        if (step.kind, step.index, step.column) != (kind, index, column):
            return report.fail("order", f"step {step.step_id} is {step.kind} {step.index}, expected {kind} {index}")
        if kind == "product-k":
            lower = [cert.leaf_index(i, column) for i in range(index)]
            upper = [cert.leaf_index(index, column)]
        else:
            lower = [cert.leaf_index(i, j) for j in range(index) for i in range(a)]
            upper = [cert.leaf_index(i, index) for i in range(a)]
        if step.lower != lower or step.upper != upper:
            return report.fail("order", f"step {step.step_id} splits the wrong leaves")
    report.checks["order"] = True

    limit = float(cert.bound)
    for step in cert.steps:
        family = cert.ks if step.kind == "product-k" else cert.ls
        if not step.report.certified:
            return report.fail("bounds", f"step {step.step_id} carries an uncertified witness")
        small = _sup(step.poly, family[: step.index], 0.0, density)
        near_one = _sup(step.poly, [family[step.index]], 1.0, density)
        if small >= limit or near_one >= limit:
            return report.fail("bounds", f"step {step.step_id}: measured {max(small, near_one):.3e} vs bound {limit}")
    report.checks["bounds"] = True
    return report
