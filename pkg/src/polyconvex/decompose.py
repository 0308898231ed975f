"""Almost-polynomially-convex decomposition of a disjoint family of unit cubes.

Around every grid hyperplane and every face hyperplane of the cubes meeting
a grid cube, an open strip of half-width δ = eps/(M·2^{7d}) is removed. What
remains inside the cubes is a finite set of closed boxes, each pair split by
some hyperplane with a gap of at least 2δ, so the union is certified by a
split tree whose order follows the grid induction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from polyconvex.boxes import Box, Interval, Strip, rescale_boxes
from polyconvex.certificate import ReplayReport, SplitStep, TaggedBox, build_certificate, replay
from polyconvex.cubes import GridKey, SubCubeIndex, UnitCube, grid_box, grid_incidence, host_grid_cube
from shared.exact import RationalLike, format_fraction, parse_fraction
from shared.logging import get_logger

logger = get_logger("polyconvex.decompose")


class DecompositionParameterError(ValueError):
    pass


@dataclass(frozen=True)
class RetainedCube:
    cube: int
    grid: GridKey
    sub_cube: SubCubeIndex
    box: Box
    inset_in_u: bool

    def to_record(self) -> dict:
        return {
            "cube": self.cube,
            "grid": list(self.grid),
            "sub_cube": list(self.sub_cube.index),
            "box": self.box.to_record(),
            "inset_in_u": self.inset_in_u,
        }


@dataclass
class DecompositionResult:
    cubes: list[UnitCube]
    eps: Fraction
    delta: Fraction
    boxes: list[Box]
    strips: list[Strip]
    retained: list[RetainedCube]
    removed_measure: Fraction
    u_measure: Fraction
    per_cube_loss: list[Fraction]
    certificate: list[SplitStep]
    grid_cubes_in_u: dict[int, bool] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.cubes[0].dim

    @property
    def loss_bound(self) -> Fraction:
        """δ·2^{7d}, the per-cube loss allowance."""
        return self.delta * 2 ** (7 * (self.dim // 2))

    def to_record(self) -> dict:
        return {
            "dim": self.dim,
            "half_open": any(cube.half_open for cube in self.cubes),
            "cubes": [cube.to_record() for cube in self.cubes],
            "eps": format_fraction(self.eps),
            "delta": format_fraction(self.delta),
            "boxes": [box.to_record() for box in self.boxes],
            "strips": [strip.to_record() for strip in self.strips],
            "retained": [entry.to_record() for entry in self.retained],
            "removed_measure": format_fraction(self.removed_measure),
            "u_measure": format_fraction(self.u_measure),
            "per_cube_loss": [format_fraction(loss) for loss in self.per_cube_loss],
            "loss_bound": format_fraction(self.loss_bound),
            "certificate": [step.to_record() for step in self.certificate],
        }


def slabs(lo: Fraction, hi: Fraction, planes: Iterable[Fraction], delta: Fraction) -> list[Interval]:
    """Closed pieces of [lo, hi] left after removing the open strips |x − a| < δ."""
    pieces: list[Interval] = []
    current = lo
    for a in sorted(set(planes)):
        strip_lo, strip_hi = a - delta, a + delta
        if strip_hi <= lo or strip_lo >= hi:
            continue
        if strip_lo > current:
            pieces.append((current, strip_lo))
        current = max(current, strip_hi)
    if current < hi:
        pieces.append((current, hi))
    return pieces


def _cells(region: Box, cubes: Sequence[UnitCube], delta: Fraction) -> list[Box]:
    per_axis = []
    for axis, (lo, hi) in enumerate(region.intervals, start=1):
        planes = [p for cube in cubes for p in cube.face_planes(axis)]
        per_axis.append(slabs(lo, hi, planes, delta))
    return [Box(tuple(combo)) for combo in itertools.product(*per_axis)]


def _covered(box: Box, leaves: Sequence[Box]) -> bool:
    covered = Fraction(0)
    for leaf in leaves:
        part = leaf.intersection(box)
        if part is not None:
            covered += part.volume
    return covered == box.volume


def strip_half_width(eps: Fraction, cubes: Sequence[UnitCube]) -> Fraction:
    """δ = eps/(M·2^{7d})."""
    return eps / (len(cubes) * 2 ** (7 * (cubes[0].dim // 2)))


def _tagged_cells(
    cubes: Sequence[UnitCube], delta: Fraction,
) -> tuple[list[TaggedBox], set[tuple[int, Fraction]], list[tuple[GridKey, SubCubeIndex]]]:
    """Cells of U tagged with their grid and host units, the strip planes, and each cube's host."""
    dim = cubes[0].dim
    incidence = grid_incidence(cubes)
    hosts = [host_grid_cube(cube) for cube in cubes]
    host_of: dict[GridKey, int] = {}
    for j, (g, _) in enumerate(hosts):
        if g in host_of:
            raise DecompositionParameterError(f"cubes {host_of[g]} and {j} share host grid cube {g}")
        host_of[g] = j

    strips: set[tuple[int, Fraction]] = set()
    items: list[TaggedBox] = []
    for g, members in incidence.items():
        grid_cell = grid_box(g).inset(delta)
        for axis in range(1, dim + 1):
            center = Fraction(g[axis - 1])
            strips.update({(axis, center - Fraction(1, 2)), (axis, center + Fraction(1, 2))})
        member_cubes = [cubes[j] for j in members]
        host = host_of.get(g)
        if host is not None:
            host_cells = _cells(grid_cell, [cubes[host]], delta)
        else:
            host_cells = [grid_cell]
        for host_cell in host_cells:
            local = [cube for cube in member_cubes if cube.box().overlaps(host_cell)]
            for cube in local:
                for axis in range(1, dim + 1):
                    strips.update((axis, plane) for plane in cube.face_planes(axis))
            for cell in _cells(host_cell, local, delta):
                if any(cube.box().contains(cell) for cube in local):
                    items.append(TaggedBox(cell, (grid_cell, host_cell if host is not None else None, cell)))
    return items, strips, hosts


def decompose(cubes: Sequence[UnitCube], eps: RationalLike) -> DecompositionResult:
    eps = parse_fraction(eps)
    if eps <= 0:
        raise DecompositionParameterError(f"eps must be positive, got {eps}")
    cubes = list(cubes)
    if not cubes:
        raise DecompositionParameterError("need at least one cube")
    dim = cubes[0].dim
    if dim % 2 or dim < 2:
        raise DecompositionParameterError(f"cubes live in R^(2d); got dimension {dim}")
    m = len(cubes)
    delta = strip_half_width(eps, cubes)

    items, strips, hosts = _tagged_cells(cubes, delta)
    leaves, steps = build_certificate(items, delta, dim)
    u_measure = sum((leaf.volume for leaf in leaves), Fraction(0))
    removed = Fraction(m) - u_measure

    per_cube_loss = []
    for cube in cubes:
        closure = cube.box()
        kept = sum((leaf.volume for leaf in leaves if closure.contains(leaf)), Fraction(0))
        per_cube_loss.append(Fraction(1) - kept)

    retained = []
    grid_cubes_in_u: dict[int, bool] = {}
    for j, (cube, (g, index)) in enumerate(zip(cubes, hosts)):
        sub = index.box(cube)
        retained.append(RetainedCube(j, g, index, sub, _covered(sub.inset(delta), leaves)))
        if all(c.denominator == 1 for c in cube.center):
            grid_cubes_in_u[j] = _covered(cube.box().inset(delta), leaves)

    result = DecompositionResult(
        cubes=cubes,
        eps=eps,
        delta=delta,
        boxes=leaves,
        strips=[Strip(axis, center, delta) for axis, center in sorted(strips)],
        retained=retained,
        removed_measure=removed,
        u_measure=u_measure,
        per_cube_loss=per_cube_loss,
        certificate=steps,
        grid_cubes_in_u=grid_cubes_in_u,
    )
    logger.info(
        "decomposition_complete",
        extra={"extra": {"cubes": m, "dim": dim, "delta": str(delta), "boxes": len(leaves),
                         "steps": len(steps), "removed_measure": float(removed)}},
    )
    return result


def certificate_replay(result: DecompositionResult, leaves: Optional[Sequence[Box]] = None) -> ReplayReport:
    """Replay the split certificate of ``result`` (optionally against substituted leaves).

    The leaves are also compared one by one with the cells rebuilt from the
    cubes and δ, so a moved or resized leaf fails even when every other
    check still balances.
    """
    items, _, _ = _tagged_cells(result.cubes, result.delta)
    rebuilt, _ = build_certificate(items, result.delta, result.dim)
    report = replay(
        leaves if leaves is not None else result.boxes,
        result.certificate,
        result.delta,
        [cube.box() for cube in result.cubes],
        result.u_measure,
        result.removed_measure,
        expected=rebuilt,
    )
    expected_delta = strip_half_width(result.eps, result.cubes)
    if result.delta != expected_delta:
        report.fail("delta", f"recorded delta {result.delta} differs from eps/(M*2^(7d)) = {expected_delta}")
    else:
        report.checks["delta"] = True
    return report


def rescale_result(
    result: DecompositionResult, factor: Fraction, offset: Sequence[Fraction]
) -> tuple[list[Box], Fraction]:
    """Boxes of U mapped by x ↦ factor·x + offset, and the removed measure in the new scale."""
    factor = Fraction(factor)
    boxes = rescale_boxes(result.boxes, factor, offset)
    return boxes, result.removed_measure * factor ** result.dim
