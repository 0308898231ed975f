from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from polyconvex import (
    Box,
    CertificateStructureError,
    DecompositionParameterError,
    DisjointnessError,
    KallinPreconditionError,
    SubCubeIndex,
    UnitCube,
    certificate_replay,
    component_count,
    decompose,
    grid_incidence,
    host_grid_cube,
    kallin_witness,
    measure_of_box_union,
    nearest_lattice,
    product_union_certificate,
    replay_product_certificate,
)
from polyconvex.certificate import replay
from polyconvex.codec import cubes_from_record, result_from_record
from polyconvex.cubes import grid_box
from runge import Rect
from shared.exact import ComplexRational as CR


def _cube(*center) -> UnitCube:
    return UnitCube(tuple(F(c) for c in center))


def _greedy_disjoint(centers: list[tuple[F, ...]], half_open: bool = False) -> list[UnitCube]:
    kept: list[UnitCube] = []
    for center in centers:
        cube = UnitCube(center, half_open)
        if all(any(abs(a - b) > 1 for a, b in zip(cube.center, other.center)) for other in kept):
            kept.append(cube)
    return kept


def _centers(dim: int, max_size: int):
    coord = st.integers(min_value=-12, max_value=12).map(lambda k: F(k, 4))
    return st.lists(st.tuples(*[coord] * dim), min_size=1, max_size=max_size)


# ---------------------------------------------------------------------------
# lattice rule and host grid cubes
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    ("q", "expected"),
    [
        ((F(3, 10), F(-2, 10)), (0, 0)),
        ((F(1, 2), F(1, 2)), (0, 0)),
        ((F(6, 10), F(12, 10)), (1, 1)),
    ],
)
def test_nearest_lattice(q: tuple, expected: tuple) -> None:
    assert nearest_lattice(q) == expected


@given(st.tuples(st.fractions(min_value=-50, max_value=50), st.fractions(min_value=-50, max_value=50)))
def test_nearest_lattice_is_within_half(q: tuple) -> None:
    g = nearest_lattice(q)
    assert all(abs(x - k) <= F(1, 2) for x, k in zip(q, g))


def test_host_of_grid_cube_is_itself() -> None:
    g, index = host_grid_cube(_cube(2, -1))
    assert g == (2, -1)
    assert index == SubCubeIndex((0, 0))


def test_host_of_offset_cube_brute_force() -> None:
    cube = _cube(F(5, 4), F(1, 4))
    g, index = host_grid_cube(cube)
    assert g == (1, 0)
    fits = [
        SubCubeIndex((i, j)) for i in (-1, 0) for j in (-1, 0)
        if grid_box(g).contains(SubCubeIndex((i, j)).box(cube))
    ]
    assert index in fits


def test_host_of_corner_centered_cube() -> None:
    cube = _cube(F(1, 2), F(1, 2))
    g, index = host_grid_cube(cube)
    assert g == (0, 0)
    assert grid_box(g).contains(index.box(cube))
    homes = set()
    for i in (-1, 0):
        for j in (-1, 0):
            sub = SubCubeIndex((i, j)).box(cube)
            homes.add(nearest_lattice([(lo + hi) / 2 for lo, hi in sub.intervals]))
    assert len(homes) == 4


# ---------------------------------------------------------------------------
# grid incidence
# ---------------------------------------------------------------------------


def test_incidence_of_single_grid_cube() -> None:
    assert grid_incidence([_cube(0, 0)]) == {(0, 0): [0]}


def test_incidence_of_corner_centered_cube_is_tight() -> None:
    incidence = grid_incidence([_cube(F(1, 2), F(1, 2))])
    assert sorted(incidence) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_incidence_rejects_overlap_and_contact() -> None:
    with pytest.raises(DisjointnessError):
        grid_incidence([_cube(0, 0), _cube(F(1, 2), 0)])
    with pytest.raises(DisjointnessError):
        grid_incidence([_cube(0, 0), _cube(1, 0)])


def test_half_open_cubes_may_touch() -> None:
    cubes = [UnitCube.from_corner((0, 0)), UnitCube.from_corner((1, 0))]
    assert len(grid_incidence(cubes)) == 6


@settings(max_examples=40, deadline=None)
@given(_centers(2, 60))
def test_incidence_lists_are_bounded(centers: list) -> None:
    cubes = _greedy_disjoint(centers)[:20]
    for members in grid_incidence(cubes).values():
        assert len(members) <= 4


# ---------------------------------------------------------------------------
# box measure
# ---------------------------------------------------------------------------


def test_measure_of_box_union_by_hand() -> None:
    assert measure_of_box_union([Box(((0, 1), (0, 1)))]) == 1
    assert measure_of_box_union([Box(((0, 1), (0, 1))), Box(((F(1, 2), F(3, 2)), (F(1, 2), F(3, 2))))]) == F(7, 4)


def test_measure_of_box_union_against_monte_carlo() -> None:
    rng = np.random.default_rng(11)
    boxes = []
    for _ in range(10):
        lo = rng.integers(0, 8, size=2)
        size = rng.integers(1, 4, size=2)
        boxes.append(Box(tuple((F(int(a), 4), F(int(a + s), 4)) for a, s in zip(lo, size))))
    exact = measure_of_box_union(boxes)
    points = rng.uniform(0, 3, size=(1_000_000, 2))
    inside = np.zeros(len(points), dtype=bool)
    for box in boxes:
        (x0, x1), (y0, y1) = [(float(lo), float(hi)) for lo, hi in box.intervals]
        inside |= (points[:, 0] >= x0) & (points[:, 0] <= x1) & (points[:, 1] >= y0) & (points[:, 1] <= y1)
    p = float(exact) / 9
    sigma = math.sqrt(p * (1 - p) / len(points))
    assert abs(inside.mean() - p) <= 3 * sigma


def test_component_count_joins_touching_boxes() -> None:
    boxes = [Box(((0, 1), (0, 1))), Box(((1, 2), (0, 1))), Box(((3, 4), (0, 1)))]
    assert component_count(boxes) == 2


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------


def test_single_grid_cube_keeps_its_inset() -> None:
    result = decompose([_cube(0, 0)], F(1, 10))
    delta = F(1, 1280)
    assert result.delta == delta
    assert result.removed_measure == 4 * delta - 4 * delta ** 2
    assert result.removed_measure < F(1, 10)
    assert result.grid_cubes_in_u == {0: True}
    assert result.boxes == [Box.cube((F(0), F(0))).inset(delta)]
    assert certificate_replay(result).passed


def test_two_cubes_match_box_union_oracle() -> None:
    cubes = [_cube(0, 0), _cube(F(5, 4), F(1, 4))]
    result = decompose(cubes, F(1, 10))
    oracle = measure_of_box_union([c.box() for c in cubes]) - measure_of_box_union(result.boxes)
    assert result.removed_measure == oracle
    assert all(isinstance(box, Box) for box in result.boxes)
    assert all(entry.inset_in_u for entry in result.retained)
    assert all(loss <= result.loss_bound for loss in result.per_cube_loss)
    report = certificate_replay(result)
    assert report.passed, report.first_violation
    assert component_count(result.boxes) == len(result.boxes)


def test_certificate_levels_and_leaf_order() -> None:
    result = decompose([_cube(0, 0), _cube(F(5, 4), F(1, 4))], F(1, 10))
    assert result.certificate[0].parent is None
    assert {step.level for step in result.certificate} <= {"grid", "host", "local"}
    assert result.certificate[0].level == "grid"
    covered = sorted(result.certificate[0].lower + result.certificate[0].upper)
    assert covered == list(range(len(result.boxes)))


def test_widened_leaf_fails_at_its_split() -> None:
    result = decompose([_cube(0, 0), _cube(F(5, 4), F(1, 4))], F(1, 10))
    step = result.certificate[0]
    neighbour = max(step.lower, key=lambda i: result.boxes[i].hi(step.axis))
    leaves = list(result.boxes)
    leaves[neighbour] = leaves[neighbour].widened(step.axis, result.delta / 2)
    report = certificate_replay(result, leaves)
    assert not report.passed
    assert report.first_violation.startswith("splits")


def test_any_widened_leaf_fails_replay() -> None:
    result = decompose([_cube(0, 0), _cube(F(5, 4), F(1, 4))], F(1, 10))
    for index in range(len(result.boxes)):
        for axis in (1, 2):
            leaves = list(result.boxes)
            leaves[index] = leaves[index].widened(axis, result.delta / 2)
            assert not certificate_replay(result, leaves).passed


def test_any_translated_leaf_fails_replay() -> None:
    result = decompose([_cube(0, 0), _cube(F(5, 4), F(1, 4))], F(1, 10))
    shift = result.delta / 2
    for index in range(len(result.boxes)):
        for axis in (1, 2):
            for sign in (1, -1):
                offset = tuple(sign * shift if k == axis else F(0) for k in (1, 2))
                leaves = list(result.boxes)
                leaves[index] = leaves[index].translated(offset)
                report = certificate_replay(result, leaves)
                assert not report.passed, (index, axis, sign)
                assert report.checks["leaves"] is False


def test_any_shrunk_leaf_fails_replay() -> None:
    result = decompose([_cube(0, 0), _cube(F(5, 4), F(1, 4))], F(1, 10))
    for index in range(len(result.boxes)):
        leaves = list(result.boxes)
        leaves[index] = leaves[index].inset(result.delta / 2)
        assert not certificate_replay(result, leaves).passed


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(_centers(2, 20), st.data())
def test_random_single_leaf_moves_fail_replay(centers: list, data: st.DataObject) -> None:
    result = decompose(_greedy_disjoint(centers)[:6], F(1, 10))
    index = data.draw(st.integers(min_value=0, max_value=len(result.boxes) - 1))
    axis = data.draw(st.sampled_from([1, 2]))
    step = data.draw(st.sampled_from([F(1, 2), F(-1, 2), F(3, 2), F(-3, 2)])) * result.delta
    leaves = list(result.boxes)
    leaves[index] = leaves[index].translated(tuple(step if k == axis else F(0) for k in (1, 2)))
    assert not certificate_replay(result, leaves).passed


def test_replay_rejects_a_recorded_delta_that_does_not_match_eps() -> None:
    record = decompose([_cube(0, 0)], F(1, 10)).to_record()
    record["eps"] = "1/5"
    report = certificate_replay(result_from_record(record))
    assert not report.passed
    assert report.first_violation.startswith("delta")


def test_replay_of_empty_leaf_list_is_structural_error() -> None:
    with pytest.raises(CertificateStructureError):
        replay([], [], F(1, 100), [Box(((0, 1), (0, 1)))], F(0), F(1))


def test_decompose_parameter_errors() -> None:
    with pytest.raises(DecompositionParameterError):
        decompose([_cube(0, 0)], 0)
    with pytest.raises(DecompositionParameterError):
        decompose([], F(1, 10))
    with pytest.raises(DisjointnessError):
        decompose([_cube(0, 0), _cube(F(1, 2), F(1, 2))], F(1, 10))


def test_half_open_cubes_decompose_like_closed_ones() -> None:
    cubes = [UnitCube.from_corner((0, 0)), UnitCube.from_corner((1, 0)), UnitCube.from_corner((F(1, 3), F(3, 2)))]
    result = decompose(cubes, F(1, 10))
    assert result.removed_measure < F(1, 10)
    assert certificate_replay(result).passed
    assert all(entry.inset_in_u for entry in result.retained)


def _check_decomposition(cubes: list[UnitCube], eps: F) -> None:
    result = decompose(cubes, eps)
    assert result.removed_measure < eps
    assert all(loss <= result.loss_bound for loss in result.per_cube_loss)
    assert all(entry.inset_in_u for entry in result.retained)
    assert all(result.grid_cubes_in_u.values())
    report = certificate_replay(result)
    assert report.passed, report.first_violation


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(_centers(2, 60), st.sampled_from([F(1, 10), F(1, 2), F(1)]))
def test_random_planar_decompositions(centers: list, eps: F) -> None:
    _check_decomposition(_greedy_disjoint(centers)[:20], eps)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(_centers(4, 24))
def test_random_four_dimensional_decompositions(centers: list) -> None:
    _check_decomposition(_greedy_disjoint(centers)[:6], F(1, 10))


# ---------------------------------------------------------------------------
# Kallin witnesses
# ---------------------------------------------------------------------------


def test_wide_gap_needs_only_an_affine_witness() -> None:
    witness = kallin_witness([Box(((0, 1), (0, 1)))], [Box(((3, 4), (0, 1)))], axis=1, coordinate=2)
    assert witness.poly.degree == 1
    assert witness.lower_error < F(1, 3) and witness.upper_error < F(1, 3)
    assert abs(witness.evaluate((F(1, 2), F(1, 2)))) < 1 / 3


def test_unit_gap_witness_is_certified() -> None:
    witness = kallin_witness(
        [Box(((0, 1), (0, 1)))], [Box(((2, 3), (0, 1)))], axis=1, coordinate=F(3, 2), degree_cap=16
    )
    assert witness.report.certified
    assert max(witness.lower_error, witness.upper_error) < 1 / 3


def test_witness_reports_the_level_it_is_certified_below() -> None:
    lower, upper = [Box(((0, 1), (0, 1)))], [Box(((2, 3), (0, 1)))]
    default = kallin_witness(lower, upper, axis=1, coordinate=F(3, 2), degree_cap=16)
    record = default.to_record()
    assert record["bound"] == "1/3"
    assert record["certified_below"] == "3/10"
    assert max(default.lower_error, default.upper_error) < 0.3
    raw = kallin_witness(lower, upper, axis=1, coordinate=F(3, 2), degree_cap=16, safety=F(1))
    assert raw.certified_below == F(1, 3)
    assert raw.poly.degree <= default.poly.degree


def test_kallin_precondition() -> None:
    box = Box(((0, 1), (0, 1)))
    with pytest.raises(KallinPreconditionError):
        kallin_witness([box], [box], axis=1, coordinate=F(1, 2))


def test_witness_in_four_dimensions_uses_second_plane() -> None:
    lower = [Box(((0, 1), (0, 1), (0, 1), (0, 1)))]
    upper = [Box(((0, 1), (0, 1), (3, 4), (0, 1)))]
    witness = kallin_witness(lower, upper, axis=3, coordinate=2)
    assert witness.plane == 2
    a = witness.evaluate((F(0), F(0), F(1, 2), F(1, 2)))
    b = witness.evaluate((F(7), F(-3), F(1, 2), F(1, 2)))
    assert a == b
    assert abs(witness.evaluate((F(0), F(0), F(7, 2), F(1, 2))) - 1) < 1 / 3


# ---------------------------------------------------------------------------
# unions of products
# ---------------------------------------------------------------------------


def _squares(*centers: int) -> list[Rect]:
    return [Rect.square(CR(c), 1) for c in centers]


def test_single_product_needs_no_steps() -> None:
    cert = product_union_certificate(_squares(0), _squares(0))
    assert cert.steps == []
    assert len(cert.leaves) == 1
    assert replay_product_certificate(cert).passed


def test_two_by_one_product_chain() -> None:
    cert = product_union_certificate(_squares(0, 3), _squares(0))
    assert [step.kind for step in cert.steps] == ["product-k"]
    assert cert.steps[0].report.achieved_eps < 0.1
    assert replay_product_certificate(cert).passed


def test_two_by_two_product_chain_order() -> None:
    cert = product_union_certificate(_squares(0, 3), _squares(0, 3))
    assert [(step.kind, step.index, step.column) for step in cert.steps] == [
        ("product-k", 1, 0), ("product-k", 1, 1), ("product-l", 1, None),
    ]
    assert replay_product_certificate(cert).passed
    cert.steps[0], cert.steps[1] = cert.steps[1], cert.steps[0]
    assert not replay_product_certificate(cert).passed


def test_product_families_must_be_disjoint() -> None:
    with pytest.raises(DisjointnessError):
        product_union_certificate([Rect(0, 2, 0, 1), Rect(1, 3, 0, 1)], _squares(0))


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


def test_result_record_replays_after_reload() -> None:
    result = decompose([_cube(0, 0), _cube(F(5, 4), F(1, 4))], F(1, 10))
    restored = result_from_record(result.to_record())
    assert restored.boxes == result.boxes
    assert certificate_replay(restored).passed


def test_half_open_cube_record() -> None:
    cubes = cubes_from_record({"dim": 2, "half_open": True, "cubes": [["0", "0"], ["1", "0"]]})
    assert cubes[0].center == (F(1, 2), F(1, 2))
    assert cubes[1].half_open
