"""Records for cube lists, product inputs and decomposition results."""

from __future__ import annotations

from fractions import Fraction

from polyconvex.boxes import Box, Strip
from polyconvex.certificate import SplitStep
from polyconvex.cubes import SubCubeIndex, UnitCube
from polyconvex.decompose import DecompositionResult, RetainedCube
from runge.regions import Rect, RegionError, region_from_record
from shared.artifacts import ArtifactError
from shared.exact import fraction_tuple, parse_fraction


def cubes_from_record(record: dict) -> list[UnitCube]:
    """``{"dim": 2, "half_open": false, "cubes": [[q1, q2], ...]}``; half-open cubes list lower corners."""
    dim = int(record["dim"])
    half_open = bool(record.get("half_open", False))
    cubes = []
    for index, coords in enumerate(record["cubes"]):
        if len(coords) != dim:
            raise ArtifactError(f"cube {index} has {len(coords)} coordinates, expected {dim}")
        try:
            values = fraction_tuple(coords)
        except ValueError as exc:
            raise ArtifactError(f"cube {index}: {exc}") from exc
        cubes.append(UnitCube.from_corner(values) if half_open else UnitCube(values))
    if not cubes:
        raise ArtifactError("cube list is empty")
    return cubes


def cubes_to_record(cubes: list[UnitCube]) -> dict:
    return {
        "dim": cubes[0].dim,
        "half_open": cubes[0].half_open,
        "cubes": [cube.to_record() for cube in cubes],
    }


def products_from_record(record: dict) -> tuple[list[Rect], list[Rect]]:
    families = []
    for name in ("ks", "ls"):
        rects = []
        for entry in record[name]:
            try:
                region = region_from_record({"kind": "rect", **entry})
            except (RegionError, ValueError) as exc:
                raise ArtifactError(f"{name}: {exc}") from exc
            rects.append(region)
        families.append(rects)
    return families[0], families[1]


def result_from_record(record: dict) -> DecompositionResult:
    half_open = bool(record["half_open"])
    cubes = [
        UnitCube.from_corner(fraction_tuple(c)) if half_open else UnitCube(fraction_tuple(c))
        for c in record["cubes"]
    ]
    delta = parse_fraction(record["delta"])
    return DecompositionResult(
        cubes=cubes,
        eps=parse_fraction(record["eps"]),
        delta=delta,
        boxes=[Box.from_record(b) for b in record["boxes"]],
        strips=[
            Strip(int(s["axis"]), parse_fraction(s["center"]), parse_fraction(s["half_width"]))
            for s in record["strips"]
        ],
        retained=[
            RetainedCube(
                cube=int(r["cube"]), grid=tuple(r["grid"]), sub_cube=SubCubeIndex(tuple(r["sub_cube"])),
                box=Box.from_record(r["box"]), inset_in_u=bool(r["inset_in_u"]),
            )
            for r in record["retained"]
        ],
        removed_measure=parse_fraction(record["removed_measure"]),
        u_measure=parse_fraction(record["u_measure"]),
        per_cube_loss=[Fraction(parse_fraction(x)) for x in record["per_cube_loss"]],
        certificate=[SplitStep.from_record(s) for s in record["certificate"]],
    )
