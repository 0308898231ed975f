"""Stage files: one versioned JSON record per stage, chained by digests."""

from __future__ import annotations

import hashlib
import pathlib
from typing import Optional

from construction.plan import StagePlan
from construction.stage import Stage
from runge.fit import ApproxReport
from runge.polynomial import ComplexPolynomial
from runge.regions import Rect, region_from_record
from shared.artifacts import ArtifactError, artifact_header, dump_json, read_artifact, write_artifact
from shared.exact import ComplexRational, format_fraction, parse_fraction
from shared.logging import get_logger
from solenoid.radix import RadixSequence

logger = get_logger("construction.store")

STAGE_SCHEMA = "stage.schema.json"


def record_digest(record: dict) -> str:
    body = {key: value for key, value in record.items() if key != "digest"}
    return hashlib.sha256(dump_json(body).encode("utf-8")).hexdigest()


def plan_from_record(record: dict) -> StagePlan:
    return StagePlan.default(
        RadixSequence.from_record(record["radix"]),
        int(record["stages"]),
        eps=[parse_fraction(e) for e in record["eps"]],
        monomials=[[ComplexRational.of(c) for c in coeffs] for coeffs in record["monomials"]] or None,
        degree_caps=[int(c) for c in record["degree_caps"]],
        grid_density=int(record["grid_density"]),
        precision_bits=int(record["precision_bits"]),
    )


def stage_to_record(stage: Stage, plan: StagePlan, config_hash: str) -> dict:
    record = artifact_header("stage", config_hash)
    record.update({
        "stage": stage.n,
        "eps": format_fraction(stage.eps),
        "poly": stage.poly.to_record(),
        "squares": [{"index": list(index), "rect": rect.to_record()} for index, rect in stage.squares],
        "report": stage.report.to_record(),
        "plan": plan.to_record(),
        "prev_digest": stage.prev_digest,
    })
    record["digest"] = record_digest(record)
    return record


def stage_from_record(record: dict) -> Stage:
    if record.get("digest") != record_digest(record):
        raise ArtifactError(f"stage {record.get('stage')} digest mismatch")
    squares = []
    for entry in record["squares"]:
        rect = region_from_record(entry["rect"])
        if not isinstance(rect, Rect):
            raise ArtifactError("stage squares must be rectangles")
        squares.append((tuple(entry["index"]), rect))
    return Stage(
        n=int(record["stage"]),
        poly=ComplexPolynomial.from_record(record["poly"]),
        squares=tuple(squares),
        report=ApproxReport.from_record(record["report"]),
        eps=parse_fraction(record["eps"]),
        prev_digest=record["prev_digest"],
    )


def stage_path(directory: pathlib.Path, n: int) -> pathlib.Path:
    return directory / f"stage_{n:03d}.json"


def save_stage(directory: pathlib.Path, stage: Stage, plan: StagePlan, config_hash: str) -> str:
    record = stage_to_record(stage, plan, config_hash)
    write_artifact(stage_path(directory, stage.n), record, STAGE_SCHEMA)
    logger.info("stage_saved", extra={"extra": {"stage": stage.n, "digest": record["digest"]}})
    return record["digest"]


def load_stages(directory: pathlib.Path) -> tuple[list[Stage], Optional[dict], Optional[str]]:
    """Stages found in ``directory`` with their plan record and the last digest.

    The digest chain and stage numbering are checked; a break raises ArtifactError.
    """
    stages: list[Stage] = []
    plan_record: Optional[dict] = None
    digest: Optional[str] = None
    n = 1
    while stage_path(directory, n).exists():
        record = read_artifact(stage_path(directory, n), STAGE_SCHEMA)
        stage = stage_from_record(record)
        if stage.n != n:
            raise ArtifactError(f"{stage_path(directory, n)} holds stage {stage.n}")
        if stage.prev_digest != digest:
            raise ArtifactError(f"stage {n} does not continue the stored stage {n - 1}")
        if plan_record is not None and record["plan"] != plan_record:
            raise ArtifactError(f"stage {n} was built from a different plan")
        plan_record = record["plan"]
        digest = record["digest"]
        stages.append(stage)
        n += 1
    return stages, plan_record, digest
