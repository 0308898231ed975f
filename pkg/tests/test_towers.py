from __future__ import annotations

import math
from fractions import Fraction as F

import pytest

from polyconvex import Box, UnitCube, decompose, rescale_result
from polyconvex.cubes import check_disjoint
from runge import ComplexPolynomial
from solenoid import SolenoidPoint, radix_products, translate
from towers import (
    BudgetViolationError,
    ConditionDError,
    DomainError,
    NoRoomError,
    PartitionData,
    PartitionResourceError,
    SampledActionModel,
    SolenoidActionModel,
    StageFitError,
    TowerData,
    TowerParameterError,
    assemble_collection,
    budget_ledger,
    build_general,
    check_action_laws,
    choose_centers,
    condition_d_bound,
    condition_d_check,
    delta_fine_partition,
    first_general_stage,
    general_stage,
    hausdorff_distance,
    modulus_delta,
    refines,
    return_sets,
    trivial_partition,
    validate_partition,
    validate_tower,
)


def _solenoid(r, dim: int = 2) -> SolenoidActionModel:
    return SolenoidActionModel(radix_products(list(r), dim))


def _const(value) -> ComplexPolynomial:
    return ComplexPolynomial.constant(F(value))


@pytest.fixture(scope="module")
def sampled() -> SampledActionModel:
    return SampledActionModel((1, 5, 25), pieces=4, omit=F(1, 4), seed=0)


# ---------------------------------------------------------------------------
# TowerData
# ---------------------------------------------------------------------------


def test_tower_rejects_non_integer_ratio() -> None:
    with pytest.raises(TowerParameterError, match="not an integer"):
        TowerData((2, 5))


def test_tower_rejects_fractional_sides() -> None:
    with pytest.raises(TowerParameterError, match="must be integers"):
        TowerData((2, F(17, 2)))
    assert TowerData((F(2), F(8))).a == (2, 8)


def test_tower_rejects_odd_dimension() -> None:
    with pytest.raises(TowerParameterError):
        TowerData((1, 4), dim=3)


def test_tower_ratio_sum_and_growth() -> None:
    assert TowerData((1, 5, 25)).ratio_sum == F(2, 5)
    assert TowerData((1, 5, 25)).growth_condition()
    assert not TowerData((1, 4, 16)).growth_condition()


def test_tower_side_outside_range() -> None:
    with pytest.raises(DomainError):
        TowerData((2, 8)).side(3)


# ---------------------------------------------------------------------------
# validate_tower
# ---------------------------------------------------------------------------


def test_validate_solenoid_is_exact() -> None:
    model = _solenoid((2, 2, 2))
    report = validate_tower(model.tower, model, samples=200, seed=1)
    assert model.tower.a == (2, 4, 8)
    assert report.passed
    assert report.exact
    assert not report.growth_condition
    assert [c.fraction for c in report.coverage] == [1.0, 1.0, 1.0]
    assert all(c.half_width == 0.0 for c in report.coverage)
    assert report.checked_translates > 0


@pytest.mark.parametrize("a", [(1, 3, 9), (1, 4, 16)])
def test_validate_rejects_slow_growth(a) -> None:
    model = SampledActionModel(a, pieces=2)
    with pytest.raises(TowerParameterError, match="below 1/2"):
        validate_tower(TowerData(a), model)


def test_solenoid_label_does_not_exempt_a_sampled_model() -> None:
    model = SampledActionModel((1, 4, 16), pieces=2)
    with pytest.raises(TowerParameterError, match="below 1/2"):
        validate_tower(TowerData((1, 4, 16), source="solenoid"), model)


def test_solenoid_model_is_exempt_whatever_the_label() -> None:
    model = _solenoid((2, 2))
    report = validate_tower(TowerData((2, 4), source="supplied"), model, samples=50)
    assert not report.growth_condition
    assert report.growth_exempt
    assert report.passed, report.first_violation


def test_validate_rejects_mismatched_model() -> None:
    with pytest.raises(TowerParameterError):
        validate_tower(TowerData((2, 8)), _solenoid((2, 2)))


def test_validate_sampled_model(sampled: SampledActionModel) -> None:
    report = validate_tower(sampled.tower, sampled, samples=1000, seed=3)
    assert report.passed, report.first_violation
    assert not report.exact
    assert report.increasing
    fractions = [c.fraction for c in report.coverage]
    assert 0 < fractions[-1] <= 1
    assert all(c.half_width > 0 for c in report.coverage)


def test_validate_flags_a_model_that_ignores_translations() -> None:
    class Frozen(SolenoidActionModel):
        def apply(self, z, x):
            return x

    model = Frozen(radix_products([2, 2]))
    report = validate_tower(model.tower, model, samples=20)
    assert not report.passed
    assert report.first_violation.startswith("group_law")


def test_action_laws_hold_on_both_models(sampled: SampledActionModel) -> None:
    assert check_action_laws(_solenoid((2, 4))) is None
    assert check_action_laws(sampled) is None


# ---------------------------------------------------------------------------
# return sets
# ---------------------------------------------------------------------------


def test_return_sets_solenoid_lattice() -> None:
    model = _solenoid((2, 2))
    x = SolenoidPoint.identity(model.radix, 2)
    returns = return_sets(x, 2, trivial_partition(model), model)
    assert len(returns) == 1
    assert returns[0].cell == 0
    assert set(returns[0].points) == {(F(0), F(0)), (F(0), F(2)), (F(2), F(0)), (F(2), F(2))}
    assert returns[0].min_spacing() == 2


@pytest.mark.parametrize("r,dim,count", [((2, 4), 2, 16), ((2, 2), 4, 16), ((3, 3), 2, 9)])
def test_return_set_size_is_ratio_power(r, dim, count) -> None:
    model = _solenoid(r, dim)
    x = SolenoidPoint.identity(model.radix, 2)
    (rset,) = return_sets(x, 2, trivial_partition(model), model)
    assert len(rset.points) == count
    assert rset.min_spacing() >= model.tower.side(1)


def test_return_sets_need_a_base_point() -> None:
    model = _solenoid((2, 2))
    x = translate(SolenoidPoint.identity(model.radix, 2), (1, 0))
    with pytest.raises(DomainError, match="base"):
        return_sets(x, 2, trivial_partition(model), model)


def test_return_sets_need_the_previous_level() -> None:
    model = _solenoid((2, 2, 2))
    x = SolenoidPoint.identity(model.radix, 3)
    with pytest.raises(DomainError, match="level"):
        return_sets(x, 3, trivial_partition(model), model)


def test_return_sets_sampled_spacing(sampled: SampledActionModel) -> None:
    part = trivial_partition(sampled)
    for x in sampled.base_classes(2)[:6]:
        for rset in return_sets(x, 2, part, sampled):
            assert all(all(v.denominator == 1 for v in p) for p in rset.points)
            spacing = rset.min_spacing()
            assert spacing is None or spacing >= 1


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


def test_hausdorff_distance_examples() -> None:
    origin = (F(0), F(0))
    assert hausdorff_distance([origin], [origin, (F(2), F(0))]) == 2
    assert hausdorff_distance([], []) == 0
    assert math.isinf(hausdorff_distance([origin], []))


def test_solenoid_partition_has_one_cell() -> None:
    model = _solenoid((2, 4))
    part = delta_fine_partition(2, F(1, 2), model, trivial_partition(model))
    assert part.size == 1
    assert validate_partition(part, model, samples=5).passed
    x = SolenoidPoint.identity(model.radix, 2)
    assert part.cell_of(model, x) == 0


def test_partition_needs_previous_level() -> None:
    model = _solenoid((2, 4))
    with pytest.raises(DomainError):
        delta_fine_partition(2, F(1, 2), model)


def test_sampled_partition_is_fine(sampled: SampledActionModel) -> None:
    part = delta_fine_partition(2, F(1, 2), sampled, trivial_partition(sampled))
    assert part.size >= 2
    assert sum(len(m) for m in part.members) == len(sampled.base_classes(2))
    report = validate_partition(part, sampled, samples=10)
    assert report.passed, report.first_violation


def test_merged_cells_fail_validation(sampled: SampledActionModel) -> None:
    part = delta_fine_partition(2, F(1, 2), sampled, trivial_partition(sampled))
    merged = PartitionData(
        part.level, part.delta, [part.cells[0] + part.cells[1]] + part.cells[2:],
        [part.representatives[0]] + part.representatives[2:], previous=part.previous,
    )
    report = validate_partition(merged, sampled, samples=0)
    assert not report.passed
    assert "cell 0" in report.first_violation


def test_finer_delta_refines_coarser(sampled: SampledActionModel) -> None:
    base = trivial_partition(sampled)
    fine = delta_fine_partition(2, F(1, 2), sampled, base)
    coarse = delta_fine_partition(2, 3, sampled, base)
    assert coarse.size <= fine.size
    assert refines(fine, coarse)


def test_partition_cell_cap(sampled: SampledActionModel) -> None:
    with pytest.raises(PartitionResourceError) as info:
        delta_fine_partition(2, F(1, 2), sampled, trivial_partition(sampled), max_cells=1)
    assert info.value.diagnostics["level"] == 2
    assert info.value.diagnostics["signatures"] >= 2


# ---------------------------------------------------------------------------
# centers and cube collections
# ---------------------------------------------------------------------------


def test_centers_one_per_quadrant() -> None:
    assert choose_centers(TowerData((2, 8)), 2) == [
        (F(0), F(0)), (F(0), F(4)), (F(4), F(0)), (F(4), F(4)),
    ]


def test_centers_ratio_two_fill_the_lattice() -> None:
    assert choose_centers(TowerData((2, 4)), 2) == [
        (F(0), F(0)), (F(0), F(2)), (F(2), F(0)), (F(2), F(2)),
    ]


def test_centers_pick_smaller_position_on_ties() -> None:
    centers = choose_centers(TowerData((1, 8)), 2)
    assert centers[0] == (F(1), F(1))
    assert centers[-1] == (F(5), F(5))


def test_centers_depend_on_ratio_only() -> None:
    unit = choose_centers(TowerData((1, 4)), 2)
    assert choose_centers(TowerData((3, 12)), 2) == [tuple(3 * c for c in w) for w in unit]


def test_centers_need_room() -> None:
    with pytest.raises(NoRoomError):
        choose_centers(TowerData((2, 2)), 2)
    with pytest.raises(NoRoomError):
        choose_centers(TowerData((2, 8)), 1)


def test_centers_in_four_dimensions() -> None:
    centers = choose_centers(TowerData((2, 8), dim=4), 2)
    assert len(centers) == 16
    assert len(set(centers)) == 16


@pytest.mark.parametrize("r,dim", [((2, 4), 2), ((2, 2), 4), ((2, 3), 4)])
def test_collection_displaces_one_cube_per_center(r, dim) -> None:
    model = _solenoid(r, dim)
    tower = model.tower
    x = SolenoidPoint.identity(model.radix, 2)
    returns = return_sets(x, 2, trivial_partition(model), model)
    collection = assemble_collection(returns, choose_centers(tower, 2), tower, 2)
    assert len(collection.dropped) == 2**dim
    assert len(collection.dropped) <= (2**dim) ** 2
    assert not collection.outside
    assert collection.size == len(returns[0].points)
    check_disjoint(collection.unit_cubes())


def test_collection_unit_cubes_are_grid_cubes() -> None:
    tower = TowerData((2, 8))
    model = _solenoid((2, 4))
    x = SolenoidPoint.identity(model.radix, 2)
    returns = return_sets(x, 2, trivial_partition(model), model)
    collection = assemble_collection(returns, choose_centers(tower, 2), tower, 2)
    cubes = collection.unit_cubes()
    assert all(cube.half_open for cube in cubes)
    assert {cube.corner for cube in cubes} == {(F(i) - F(1, 2), F(j) - F(1, 2)) for i in range(4) for j in range(4)}


# ---------------------------------------------------------------------------
# rescaling
# ---------------------------------------------------------------------------


def test_rescale_matches_decomposing_the_large_cube() -> None:
    result = decompose([UnitCube((F(0), F(0)))], F(1, 4))
    boxes, removed = rescale_result(result, F(2), (F(1), F(1)))
    large = Box(((F(0), F(2)), (F(0), F(2))))
    assert boxes == [large.inset(2 * result.delta)]
    assert removed == 4 * result.removed_measure
    assert removed == large.volume - boxes[0].volume


# ---------------------------------------------------------------------------
# general stages
# ---------------------------------------------------------------------------


def test_first_stage_is_exact() -> None:
    model = _solenoid((2, 4, 4))
    p1 = ComplexPolynomial.from_monomials([0, 1])
    stage = first_general_stage(p1, model)
    assert stage.cells[0].poly is p1
    (cert,) = stage.certificates
    assert cert.k == 1
    assert cert.measured == 0.0
    assert cert.bound == 0


def test_condition_d_bounds() -> None:
    assert condition_d_bound(1, 1) == 0
    assert condition_d_bound(1, 3) == F(1, 4) + F(1, 8)
    assert condition_d_bound(2, 3) == F(1, 4) + F(1, 8)
    assert condition_d_bound(3, 3) == F(1, 8)


def test_modulus_delta() -> None:
    model = _solenoid((2, 4))
    linear = first_general_stage(ComplexPolynomial.from_monomials([0, 1]), model)
    delta = modulus_delta(linear, 2)
    assert delta == pytest.approx(1 / (2 * 10**4 * 1.01), rel=1e-9)
    constant = first_general_stage(_const(F(1, 100)), model)
    assert modulus_delta(constant, 2) == F(1, 2)


def test_stage_two_plants_polynomial() -> None:
    model = _solenoid((2, 4))
    first = first_general_stage(_const(0), model)
    stage = general_stage(first, _const(F(1, 100)), model)
    (cell,) = stage.cells
    assert stage.fitted
    assert cell.report.certified
    assert cell.anchors[2] == (0, 0)
    assert cell.anchors[1] == (0, 2)
    assert len(cell.boxes) == 16
    assert sorted((c.k, c.holds) for c in stage.certificates) == [(1, True), (2, True)]
    ledger = stage.ledger
    assert ledger.replaced_measured == 0.0
    assert ledger.replaced_bound == F(1, 4)
    assert ledger.uncovered == 0.0
    assert 0 < ledger.decomposition_loss < F(1, 4)
    assert ledger.holds


def test_three_stage_solenoid_ledger() -> None:
    model = _solenoid((2, 4, 4))
    assert model.tower.a == (2, 8, 32)
    c = _const(F(1, 100))
    stages = build_general([c, c, c], model)
    assert [s.n for s in stages] == [1, 2, 3]
    assert [len(s.certificates) for s in stages] == [1, 2, 3]
    for stage in stages[1:]:
        assert stage.ledger.total < 2.0**-stage.n
        assert all(cert.measured <= float(cert.bound) for cert in stage.certificates)
    report = budget_ledger(stages)
    assert report.holds
    assert report.total < 1


def test_condition_d_on_a_least_squares_stage() -> None:
    model = _solenoid((2, 4))
    first = first_general_stage(ComplexPolynomial.from_monomials([0, F(1, 100)]), model)
    stage = general_stage(first, _const(0), model, degree_cap=16)
    (cell,) = stage.cells
    assert cell.report.method == "least-squares"
    assert cell.report.certified
    assert sorted(c.k for c in stage.certificates) == [1, 2]
    assert all(c.holds and c.measured <= float(c.bound) for c in stage.certificates)
    assert max(c.measured for c in stage.certificates) > 0
    assert stage.delta < F(1, 2)


def test_condition_d_detects_a_wrong_polynomial() -> None:
    model = _solenoid((2, 4))
    stage = general_stage(first_general_stage(_const(0), model), _const(F(1, 100)), model)
    stage.cells[0].poly = _const(5)
    with pytest.raises(ConditionDError, match="p_1"):
        condition_d_check(stage, 1)


def test_condition_d_index_range() -> None:
    model = _solenoid((2, 4))
    stage = first_general_stage(_const(0), model)
    with pytest.raises(DomainError):
        condition_d_check(stage, 2)


def test_stage_fit_failure_names_the_cell() -> None:
    model = _solenoid((2, 4))
    first = first_general_stage(_const(0), model)
    with pytest.raises(StageFitError, match="stage 2 cell 0"):
        general_stage(first, _const(10), model, degree_cap=2)


def test_uncovered_mass_breaks_the_budget() -> None:
    class Leaky(SolenoidActionModel):
        exact = False

    model = Leaky(radix_products([2, 4]))
    first = first_general_stage(_const(0), model)
    with pytest.raises(BudgetViolationError, match="uncovered"):
        general_stage(first, _const(0), model, coverage={1: 0.5})


def test_stage_beyond_tower_depth() -> None:
    model = _solenoid((2, 4))
    with pytest.raises(DomainError):
        build_general([_const(0)] * 3, model)


def test_four_dimensional_stage_skips_fitting() -> None:
    model = _solenoid((2, 3), dim=4)
    stages = build_general([_const(0), _const(1)], model)
    stage = stages[-1]
    assert not stage.fitted
    assert stage.certificates == []
    assert any("skipped" in note for note in stage.notes)
    assert stage.ledger.replaced_bound == F(16, 81)
    assert stage.ledger.holds
    assert stage.to_record()["cells"][0]["polynomial"] is None


def test_partition_delta_replaces_the_default_mesh_when_unfitted() -> None:
    model = _solenoid((2, 3), dim=4)
    stages = build_general([_const(0), _const(1)], model, partition_delta=F(1, 8))
    assert not stages[-1].fitted
    assert stages[-1].delta == F(1, 8)
    assert stages[-1].partition.delta == F(1, 8)


def test_partition_delta_only_refines_the_modulus_mesh() -> None:
    model = _solenoid((2, 4))
    first = first_general_stage(_const(0), model)
    finer = general_stage(first, _const(F(1, 100)), model, partition_delta=F(1, 4))
    assert finer.delta == F(1, 4)
    coarser = general_stage(first, _const(F(1, 100)), model, partition_delta=F(2))
    assert coarser.delta == modulus_delta(first, 2) == F(1, 2)
