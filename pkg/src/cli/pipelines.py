"""One function per pipeline. Each writes its artifacts under the run directory and returns an outcome.

Domain failures propagate as exceptions and are mapped to exit codes by
``cli.app``; a pipeline that completes but whose certificates do not all
hold returns ``passed=False`` with the first failing check named.
"""

from __future__ import annotations

import math
import pathlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

import numpy as np

from construction.density import density_check, orbit_patch_fraction, telescoping_check
from construction.plan import StagePlan, first_polynomials
from construction.stage import Stage, build
from construction.store import load_stages, plan_from_record, save_stage
from polyconvex import certificate_replay, decompose, product_union_certificate, replay_product_certificate
from polyconvex.codec import cubes_from_record, products_from_record
from runge import ComplexPolynomial
from shared.artifacts import ArtifactError, artifact_header, read_artifact, write_artifact, write_csv
from shared.constants import DEFAULT_DEGREE_CAP
from shared.exact import ComplexRational, RationalLike, exact_int, format_fraction, format_tuple, parse_fraction
from shared.logging import get_logger
from shared.retry import RetryConfig
from shared.schema import RunConfig
from solenoid import HaarSampler, RadixSequence, dump_point, radix_products
from towers import (
    SampledActionModel,
    SolenoidActionModel,
    TowerData,
    TowerParameterError,
    budget_ledger,
    build_general,
    validate_tower,
)
from towers.model import ActionModel

logger = get_logger("cli.pipelines")


@dataclass
class PipelineOutcome:
    passed: bool
    summary: dict[str, Any]
    artifacts: list[str] = field(default_factory=list)
    first_failure: Optional[str] = None

    def add(self, root: pathlib.Path, path: pathlib.Path) -> None:
        self.artifacts.append(path.relative_to(root).as_posix())

    def check(self, name: str, ok: bool, message: str) -> None:
        if not ok:
            self.passed = False
            if self.first_failure is None:
                self.first_failure = f"{name}: {message}"


@dataclass(frozen=True)
class RunContext:
    config: RunConfig
    out: pathlib.Path
    config_hash: str


# ---------------------------------------------------------------------------
# solenoid-sample
# ---------------------------------------------------------------------------

def _tile_chi_square(points, radix: RadixSequence, depth: int) -> tuple[float, int]:
    """χ² of the tile indices of S_depth by copies of S_{depth-1} against the uniform law."""
    ratio = radix.radix(depth)
    modulus = radix.modulus(depth - 1)
    counts = np.zeros(ratio**radix.dim, dtype=np.int64)
    for p in points:
        index = 0
        for c in p.level(depth):
            index = index * ratio + c // modulus
        counts[index] += 1
    expected = len(points) / counts.size
    return float(np.sum((counts - expected) ** 2 / expected)), counts.size - 1


def run_solenoid_sample(ctx: RunContext) -> PipelineOutcome:
    config = ctx.config
    radix = radix_products(config.radix, config.dim)
    depth = config.depth or radix.length
    points = HaarSampler(radix, depth, config.resolution, config.seed).sample_many(config.count)

    outcome = PipelineOutcome(True, {"radix": list(radix.r), "dim": radix.dim, "depth": depth, "count": len(points)})
    text_path = ctx.out / "points.txt"
    text_path.parent.mkdir(parents=True, exist_ok=True)
    text_path.write_text("\n".join(dump_point(p) for p in points), encoding="utf-8")
    outcome.add(ctx.out, text_path)
    rows = [
        [i, n, " ".join(str(c) for c in p.level(n))]
        for i, p in enumerate(points)
        for n in range(1, depth + 1)
    ]
    outcome.add(ctx.out, write_csv(ctx.out / "samples.csv", ["sample", "level", "coordinates"], rows))

    if depth >= 2:
        chi2, dof = _tile_chi_square(points, radix, depth)
        limit = dof + 3 * math.sqrt(2 * dof)
        outcome.summary.update({"chi_square": chi2, "degrees_of_freedom": dof, "chi_square_limit": limit})
        outcome.check("uniformity", chi2 <= limit, f"tile chi-square {chi2:.2f} exceeds {limit:.2f}")
    return outcome


# ---------------------------------------------------------------------------
# build / density-report
# ---------------------------------------------------------------------------

def _monomials(config: RunConfig) -> Optional[list[list[ComplexRational]]]:
    if config.polys is None:
        return None
    return [[ComplexRational.of(c) for c in coeffs] for coeffs in config.polys]


def plan_from_config(config: RunConfig) -> StagePlan:
    return StagePlan.default(
        radix_products(config.radix, config.dim),
        config.stages,
        eps=config.eps_values(),
        monomials=_monomials(config),
        degree_caps=config.degree_caps,
        grid_density=config.grid_density,
        precision_bits=config.precision_bits,
    )


def _density_artifacts(
    ctx: RunContext, outcome: PipelineOutcome, stages: list[Stage], plan: StagePlan, ks: list[int]
) -> None:
    certificates = [density_check(stages, plan, k) for k in ks]
    n = stages[-1].n
    telescoping = [telescoping_check(stages, plan, m, n) for m in range(1, n)]
    record = artifact_header("density", ctx.config_hash)
    record.update({
        "stage": n,
        "certificates": [c.to_record() for c in certificates],
        "telescoping": [
            {"m": t.m, "n": t.n, "measured": t.measured, "bound": format_fraction(t.bound), "holds": t.holds}
            for t in telescoping
        ],
    })
    if n >= 2:
        patch = orbit_patch_fraction(
            stages[-1], plan, parse_fraction(ctx.config.patch_radius), ctx.config.samples, ctx.config.seed
        )
        record["orbit_patch"] = {
            "radius": format_fraction(patch.radius), "samples": patch.samples, "inside": patch.inside,
            "fraction": patch.fraction, "half_width": patch.half_width, "expected": patch.expected,
        }
    outcome.add(ctx.out, write_artifact(ctx.out / "density.json", record))
    rows = [[c.k, c.n, c.measured, format_fraction(c.bound), c.holds] for c in certificates]
    outcome.add(ctx.out, write_csv(ctx.out / "density.csv", ["k", "n", "measured", "bound", "holds"], rows))
    for c in certificates:
        outcome.check("density", c.holds, f"k={c.k}, n={c.n}: measured {c.measured:.3e} > {c.bound}")
    for t in telescoping:
        outcome.check("telescoping", t.holds, f"m={t.m}, n={t.n}: measured {t.measured:.3e} > {t.bound}")
    outcome.summary["density"] = [{"k": c.k, "measured": c.measured, "holds": c.holds} for c in certificates]


def run_build(ctx: RunContext) -> PipelineOutcome:
    config = ctx.config
    plan = plan_from_config(config)
    stages_dir = ctx.out / "stages"
    existing: list[Stage] = []
    last_digest = None
    if config.resume:
        existing, plan_record, last_digest = load_stages(stages_dir)
        if plan_record is not None and plan_record != plan.to_record():
            raise ArtifactError(f"{stages_dir} holds stages of a different plan")
        logger.info("build_resuming", extra={"extra": {"stages_on_disk": len(existing), "dir": str(stages_dir)}})

    stages = build(
        plan,
        RetryConfig(max_attempts=config.max_attempts),
        existing=existing,
        on_stage=lambda stage: save_stage(stages_dir, stage, plan, ctx.config_hash),
        last_digest=last_digest,
    )
    outcome = PipelineOutcome(True, {
        "stages": [
            {"n": s.n, "method": s.report.method, "degree": s.report.degree,
             "achieved_eps": s.report.achieved_eps, "eps": format_fraction(s.eps)}
            for s in stages
        ],
        "resumed": len(existing),
    })
    for path in sorted(stages_dir.glob("stage_*.json")):
        outcome.add(ctx.out, path)
    for s in stages:
        outcome.check("fit", s.report.certified, f"stage {s.n} is not certified")
    _density_artifacts(ctx, outcome, stages, plan, list(range(1, plan.stages + 1)))
    return outcome


def run_density_report(ctx: RunContext) -> PipelineOutcome:
    stages, plan_record, _ = load_stages(pathlib.Path(ctx.config.stages_dir))
    if not stages:
        raise ArtifactError(f"no stage files in {ctx.config.stages_dir}")
    plan = plan_from_record(plan_record)
    if ctx.config.density_k is not None:
        ks = [ctx.config.density_k]
    else:
        ks = list(range(1, stages[-1].n + 1))
    outcome = PipelineOutcome(True, {"stages": len(stages)})
    _density_artifacts(ctx, outcome, stages, plan, ks)
    return outcome


# ---------------------------------------------------------------------------
# polyconvex pipelines
# ---------------------------------------------------------------------------

def run_decompose_cubes(ctx: RunContext) -> PipelineOutcome:
    from cli.plot import plot_decomposition

    config = ctx.config
    cubes = cubes_from_record(read_artifact(pathlib.Path(config.input_path), "cubes.schema.json"))
    eps = parse_fraction(config.eps)
    result = decompose(cubes, eps)
    replay = certificate_replay(result)
    checks = {
        "removed_below_eps": result.removed_measure < eps,
        "per_cube_loss_within_bound": all(loss <= result.loss_bound for loss in result.per_cube_loss),
        "sub_cubes_retained": all(entry.inset_in_u for entry in result.retained),
        "grid_cubes_retained": all(result.grid_cubes_in_u.values()),
    }
    record = artifact_header("decomposition", ctx.config_hash)
    record.update({"result": result.to_record(), "replay": replay.to_record(), "checks": checks})

    outcome = PipelineOutcome(True, {
        "cubes": len(cubes), "dim": result.dim, "delta": format_fraction(result.delta),
        "removed_measure": format_fraction(result.removed_measure), "boxes": len(result.boxes),
        "steps": len(result.certificate), "checks": checks,
    })
    outcome.add(ctx.out, write_artifact(ctx.out / "decomposition.json", record, "decomposition.schema.json"))
    rows = [
        [j, format_fraction(loss), format_fraction(result.loss_bound), entry.inset_in_u]
        for j, (loss, entry) in enumerate(zip(result.per_cube_loss, result.retained))
    ]
    outcome.add(ctx.out, write_csv(ctx.out / "per_cube.csv", ["cube", "loss", "loss_bound", "sub_cube_in_u"], rows))
    outcome.check("replay", replay.passed, replay.first_violation or "")
    for name, ok in checks.items():
        outcome.check(name, ok, "violated")
    if config.svg:
        summary = plot_decomposition(result, ctx.out / "decomposition.svg", config.projection)
        outcome.add(ctx.out, pathlib.Path(summary.path))
        outcome.summary["plot"] = {key: value for key, value in summary.to_record().items() if key != "path"}
    return outcome


def run_certify_products(ctx: RunContext) -> PipelineOutcome:
    config = ctx.config
    ks, ls = products_from_record(read_artifact(pathlib.Path(config.input_path), "products.schema.json"))
    cap = config.degree_caps[0] if config.degree_caps else DEFAULT_DEGREE_CAP
    cert = product_union_certificate(
        ks, ls, degree_cap=cap, grid_density=config.grid_density, precision_bits=config.precision_bits
    )
    replay = replay_product_certificate(cert)
    record = artifact_header("products", ctx.config_hash)
    record.update({"certificate": cert.to_record(), "replay": replay.to_record()})
    outcome = PipelineOutcome(True, {
        "a": len(ks), "b": len(ls),
        "steps": [{"kind": s.kind, "index": s.index, "column": s.column} for s in cert.steps],
        "bound": format_fraction(cert.bound),
    })
    outcome.add(ctx.out, write_artifact(ctx.out / "products.json", record, "products_certificate.schema.json"))
    outcome.check("replay", replay.passed, replay.first_violation or "")
    return outcome


# ---------------------------------------------------------------------------
# towers
# ---------------------------------------------------------------------------

def radix_for_tower(a: Sequence[RationalLike], dim: int) -> RadixSequence:
    """The solenoid whose kernel towers have sides a_n = R_n.

    Ratios are taken in exact arithmetic; a side or ratio that is not a whole
    number raises TowerParameterError instead of being truncated.
    """
    try:
        sides = [exact_int(entry) for entry in a]
    except ValueError as exc:
        raise TowerParameterError(f"tower sides must be integers: {exc}") from exc
    if not sides or any(side < 1 for side in sides):
        raise TowerParameterError(f"tower sides must be positive integers, got {list(a)}")
    ratios = [Fraction(sides[0])] + [Fraction(sides[n], sides[n - 1]) for n in range(1, len(sides))]
    if any(q.denominator != 1 or q < 2 for q in ratios):
        raise TowerParameterError(f"{sides} is not a sequence of solenoid moduli R_n (ratios must be integers >= 2)")
    radix = radix_products([q.numerator for q in ratios], dim)
    if list(radix.R) != sides:
        raise TowerParameterError(f"cumulative products {list(radix.R)} differ from the sides {sides}")
    return radix


def model_from_config(config: RunConfig) -> tuple[TowerData, ActionModel]:
    if config.model == "solenoid":
        model = SolenoidActionModel(radix_for_tower(config.a, config.dim), resolution=config.resolution)
    else:
        model = SampledActionModel(config.a, config.dim, seed=config.seed)
    return model.tower, model


def run_towers_validate(ctx: RunContext) -> PipelineOutcome:
    config = ctx.config
    tower, model = model_from_config(config)
    report = validate_tower(tower, model, samples=config.samples, seed=config.seed)
    record = artifact_header("tower_report", ctx.config_hash)
    record["report"] = report.to_record()
    outcome = PipelineOutcome(True, {
        "a": list(tower.a), "model": model.name, "growth_condition": report.growth_condition,
        "coverage": [c.fraction for c in report.coverage],
    })
    outcome.add(ctx.out, write_artifact(ctx.out / "tower_report.json", record, "tower_report.schema.json"))
    rows = [[c.level, c.inside, c.samples, c.fraction, c.half_width] for c in report.coverage]
    header = ["level", "inside", "samples", "fraction", "half_width"]
    outcome.add(ctx.out, write_csv(ctx.out / "coverage.csv", header, rows))
    outcome.check("tower", report.passed, report.first_violation or "coverage or growth check failed")
    return outcome


def _tower_polys(config: RunConfig, depth: int) -> list[ComplexPolynomial]:
    count = min(config.stages, depth)
    monomials = _monomials(config)
    if monomials is None:
        return first_polynomials(count, config.precision_bits)
    return [ComplexPolynomial.from_monomials(coeffs, config.precision_bits) for coeffs in monomials[:count]]


def run_towers_build(ctx: RunContext) -> PipelineOutcome:
    config = ctx.config
    tower, model = model_from_config(config)
    cap = config.degree_caps[0] if config.degree_caps else DEFAULT_DEGREE_CAP
    mesh = parse_fraction(config.partition_delta) if config.partition_delta is not None else None
    stages = build_general(
        _tower_polys(config, tower.depth), model, degree_cap=cap, grid_density=config.grid_density,
        precision_bits=config.precision_bits, seed=config.seed, partition_delta=mesh,
    )
    outcome = PipelineOutcome(True, {"a": list(tower.a), "dim": tower.dim, "stages": len(stages)})
    outcome.summary["partition_deltas"] = {str(s.n): format_fraction(s.delta) for s in stages}
    for stage in stages:
        record = artifact_header("tower_stage", ctx.config_hash)
        record.update({"tower": tower.to_record(), "stage": stage.to_record()})
        path = ctx.out / "tower_stages" / f"tower_stage_{stage.n:03d}.json"
        outcome.add(ctx.out, write_artifact(path, record, "tower_stage.schema.json"))
        for cert in stage.certificates:
            outcome.check("condition_d", cert.holds, f"n={cert.n}, k={cert.k}, cell {cert.cell}")
    budget = budget_ledger(stages)
    rows = [
        [s.ledger.n, format_fraction(s.ledger.decomposition_loss), s.ledger.replaced_measured,
         format_fraction(s.ledger.replaced_bound), s.ledger.uncovered, s.ledger.total, format_fraction(s.ledger.budget)]
        for s in stages if s.ledger is not None
    ]
    outcome.add(ctx.out, write_csv(
        ctx.out / "ledger.csv",
        ["n", "decomposition_loss", "replaced_measured", "replaced_bound", "uncovered", "total", "budget"],
        rows,
    ))
    outcome.summary["budget"] = budget.to_record()
    outcome.summary["fitted"] = [s.fitted for s in stages]
    outcome.summary["anchors"] = {
        str(s.n): {str(k): format_tuple(w) for k, w in s.cells[0].anchors.items()} for s in stages
    }
    outcome.check("budget", budget.holds, f"error-set estimates total {budget.total:.3e}")
    return outcome


PIPELINES: dict[str, Callable[[RunContext], PipelineOutcome]] = {
    "solenoid-sample": run_solenoid_sample,
    "build": run_build,
    "density-report": run_density_report,
    "decompose-cubes": run_decompose_cubes,
    "certify-products": run_certify_products,
    "towers-validate": run_towers_validate,
    "towers-build": run_towers_build,
}

__all__ = ["PIPELINES", "PipelineOutcome", "RunContext", "model_from_config", "plan_from_config", "radix_for_tower"]
