"""Command-line entry: parse a run config, execute one pipeline, write report.json and print it.

Exit codes: 0 when every certificate holds, 1 on a domain failure or a failed
certificate, 2 when the config or an input artifact is rejected.
"""

from __future__ import annotations

import argparse
import json
import pathlib
from typing import Any, Optional, Sequence

from cli.pipelines import PIPELINES, PipelineOutcome, RunContext
from shared.artifacts import ArtifactError, artifact_header, write_artifact
from shared.logging import get_logger
from shared.schema import ConfigError, RunConfig, config_hash, parse_run_config

logger = get_logger("cli.app")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2


def _report(config: RunConfig, digest: str, exit_code: int, outcome: PipelineOutcome) -> dict:
    report = artifact_header("report", digest)
    report.update({
        "pipeline": config.pipeline,
        "passed": outcome.passed and exit_code == EXIT_OK,
        "exit_code": exit_code,
        "summary": outcome.summary,
        "artifacts": outcome.artifacts,
        "first_failure": outcome.first_failure,
    })
    return report


def run_pipeline(config: RunConfig) -> tuple[int, dict]:
    """Run ``config.pipeline``; returns the exit code and the report written to ``report.json``."""
    digest = config_hash(config)
    out = pathlib.Path(config.output_dir)
    log = logger.bind(pipeline=config.pipeline, config_hash=digest)
    log.info("pipeline_started", extra={"extra": {"output_dir": str(out)}})

    try:
        outcome = PIPELINES[config.pipeline](RunContext(config, out, digest))
        exit_code = EXIT_OK if outcome.passed else EXIT_FAILED
    except (ConfigError, ArtifactError) as exc:
        outcome = PipelineOutcome(False, {}, first_failure=f"{type(exc).__name__}: {exc}")
        exit_code = EXIT_INPUT
    except (ValueError, RuntimeError) as exc:
        outcome = PipelineOutcome(False, {}, first_failure=f"{type(exc).__name__}: {exc}")
        exit_code = EXIT_FAILED

    report = _report(config, digest, exit_code, outcome)
    write_artifact(out / "report.json", report, "report.schema.json")
    log.info(
        "pipeline_finished",
        extra={"extra": {"exit_code": exit_code, "passed": report["passed"], "first_failure": outcome.first_failure}},
    )
    return exit_code, report


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _int_list(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from exc


def _str_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output-dir", dest="output_dir", help="Directory for artifacts and report.json")
    parser.add_argument("--seed", type=int, help="Seed for every random draw")
    parser.add_argument("--precision-bits", dest="precision_bits", type=int, help="mpmath working precision")
    parser.add_argument("--grid-density", dest="grid_density", type=int, help="Certification grid density per unit")
    parser.add_argument("--degree-caps", dest="degree_caps", type=_int_list, help="Comma-separated degree caps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dense-orbits",
        description="Certified constructions of functions with dense translation orbits",
    )
    parser.add_argument("--config", help="JSON run config; subcommand flags override its fields")
    sub = parser.add_subparsers(dest="pipeline")

    p = sub.add_parser("solenoid-sample", help="Haar samples of a finite-depth solenoid")
    _common(p)
    p.add_argument("--radix", type=_int_list, help="Comma-separated r_1,...,r_N")
    p.add_argument("--dim", type=int, help="Real dimension 2d")
    p.add_argument("--depth", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--count", type=int)

    p = sub.add_parser("build", help="Staged one-variable construction with density certificates")
    _common(p)
    p.add_argument("--radix", type=_int_list)
    p.add_argument("--stages", type=int)
    p.add_argument("--eps-schedule", dest="eps_schedule", type=_str_list, help="Comma-separated eps_1,...,eps_N")
    p.add_argument("--max-attempts", dest="max_attempts", type=int)
    p.add_argument("--resume", action="store_true", default=None)
    p.add_argument("--patch-radius", dest="patch_radius")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("density-report", help="Density certificates for stored stages")
    _common(p)
    p.add_argument("--stages-dir", dest="stages_dir")
    p.add_argument("--k", dest="density_k", type=int)
    p.add_argument("--patch-radius", dest="patch_radius")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("decompose-cubes", help="Almost polynomially convex decomposition of unit cubes")
    _common(p)
    p.add_argument("--input", dest="input_path")
    p.add_argument("--eps")
    p.add_argument("--svg", action="store_true", default=None)
    p.add_argument("--projection", type=_int_list, help="Two 1-based axes, e.g. 1,2")

    p = sub.add_parser("certify-products", help="Separation chain for a union of products K_i x L_j")
    _common(p)
    p.add_argument("--input", dest="input_path")

    for name, help_text in (
        ("towers-validate", "Check nested tower hypotheses on an action model"),
        ("towers-build", "General staged construction over nested towers"),
    ):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        p.add_argument("--a", type=_int_list, help="Comma-separated tower sides a_1,...,a_N")
        p.add_argument("--dim", type=int)
        p.add_argument("--model", choices=["solenoid", "sampled"])
        p.add_argument("--samples", type=int)
        p.add_argument("--resolution", type=int)
        p.add_argument("--stages", type=int)
        if name == "towers-build":
            p.add_argument("--partition-delta", dest="partition_delta", help="Partition mesh; refines the modulus mesh")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, Any] = {}
    if args.config:
        try:
            raw = json.loads(pathlib.Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Run config could not be read: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("Run config must be a JSON object")
    overrides = {key: value for key, value in vars(args).items() if key != "config" and value is not None}
    raw.update(overrides)
    if "pipeline" not in raw:
        raise ConfigError("Run config failed schema validation: no pipeline given")
    raw.setdefault("output_dir", str(pathlib.Path("runs") / raw["pipeline"]))
    return parse_run_config(raw)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        logger.error("config_rejected", extra={"extra": {"error": str(exc)}})
        print(json.dumps({"exit_code": EXIT_INPUT, "first_failure": str(exc)}, indent=2))
        return EXIT_INPUT
    exit_code, report = run_pipeline(config)
    print(json.dumps(report, indent=2, sort_keys=True))
    return exit_code
