from __future__ import annotations

import json
import re
from fractions import Fraction as F
from pathlib import Path

import pytest

from cli.app import config_from_args, build_parser, main, run_pipeline
from cli.pipelines import radix_for_tower
from cli.plot import PlotParameterError, load_decomposition, plot_decomposition
from polyconvex import UnitCube, decompose
from shared.artifacts import ArtifactError
from shared.schema import ConfigError, parse_run_config
from towers import TowerParameterError


def _write(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _gids(svg: str, kind: str) -> int:
    return len(re.findall(rf'id="{kind}-\d+"', svg))


def _two_cubes(tmp_path: Path) -> Path:
    return _write(tmp_path / "cubes.json", {"dim": 2, "cubes": [["0", "0"], ["5/4", "1/4"]]})


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------


def test_plot_of_two_cube_example(tmp_path: Path) -> None:
    result = decompose([UnitCube((F(0), F(0))), UnitCube((F(5, 4), F(1, 4)))], F(1, 10))
    summary = plot_decomposition(result, tmp_path / "two.svg")
    assert summary.projection == (1, 2)
    assert summary.cubes == 2
    assert summary.grid_cells >= 4
    assert summary.strips > 0
    svg = (tmp_path / "two.svg").read_text(encoding="utf-8")
    assert _gids(svg, "cube") == 2
    assert _gids(svg, "grid") == summary.grid_cells
    assert _gids(svg, "strip") == summary.strips
    assert _gids(svg, "ubox") == summary.boxes


def test_plot_is_deterministic(tmp_path: Path) -> None:
    result = decompose([UnitCube((F(0), F(0)))], F(1, 10))
    plot_decomposition(result, tmp_path / "a.svg")
    plot_decomposition(result, tmp_path / "b.svg")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_plot_of_empty_result_is_an_error(tmp_path: Path) -> None:
    result = decompose([UnitCube((F(0), F(0)))], F(1, 10))
    result.boxes = []
    with pytest.raises(PlotParameterError):
        plot_decomposition(result, tmp_path / "empty.svg")


def test_four_dimensional_plot_needs_a_projection(tmp_path: Path) -> None:
    result = decompose([UnitCube((F(0),) * 4), UnitCube((F(2), F(0), F(0), F(1, 4)))], F(1, 10))
    with pytest.raises(PlotParameterError):
        plot_decomposition(result, tmp_path / "r4.svg")
    with pytest.raises(PlotParameterError):
        plot_decomposition(result, tmp_path / "r4.svg", (1, 5))
    summary = plot_decomposition(result, tmp_path / "r4.svg", (1, 2))
    shadows = {box.project((1, 2)) for box in result.boxes}
    assert summary.boxes == len(shadows)
    assert summary.cubes == 2
    svg = (tmp_path / "r4.svg").read_text(encoding="utf-8")
    assert _gids(svg, "ubox") == len(shadows)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def test_flags_override_config_file(tmp_path: Path) -> None:
    config_path = _write(tmp_path / "run.json", {"pipeline": "build", "output_dir": str(tmp_path), "stages": 3})
    args = build_parser().parse_args(["--config", str(config_path), "build", "--stages", "2", "--radix", "2,2"])
    config = config_from_args(args)
    assert config.pipeline == "build"
    assert config.stages == 2
    assert config.radix == [2, 2]


def test_missing_pipeline_is_a_config_error() -> None:
    with pytest.raises(ConfigError):
        config_from_args(build_parser().parse_args([]))


def test_zero_eps_entry_exits_with_two(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    config_path = _write(
        tmp_path / "run.json",
        {"pipeline": "build", "output_dir": str(tmp_path / "out"), "eps_schedule": ["1", "0", "1/100"]},
    )
    assert main(["--config", str(config_path)]) == 2
    printed = json.loads(capsys.readouterr().out)
    assert printed["exit_code"] == 2
    assert "eps_schedule" in printed["first_failure"]


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def test_feasible_build_passes_with_stage_files_and_density(tmp_path: Path) -> None:
    config = parse_run_config({
        "pipeline": "build",
        "output_dir": str(tmp_path),
        "radix": [2, 2],
        "stages": 2,
        "polys": [[["0", "0"]], [["1/50", "0"]]],
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 0, report["first_failure"]
    assert report["passed"]
    assert "stages/stage_001.json" in report["artifacts"]
    assert "stages/stage_002.json" in report["artifacts"]
    density = json.loads((tmp_path / "density.json").read_text(encoding="utf-8"))
    assert [c["k"] for c in density["certificates"]] == [1, 2]
    assert all(c["holds"] for c in density["certificates"])
    assert (tmp_path / "density.csv").read_text(encoding="utf-8").startswith("k,n,measured,bound,holds")
    saved = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
    assert saved == report


def test_density_report_reads_stored_stages(tmp_path: Path) -> None:
    build = parse_run_config({
        "pipeline": "build", "output_dir": str(tmp_path / "b"), "radix": [2, 2], "stages": 2,
        "polys": [[["1/3", "0"]], [["1/3", "0"]]],
    })
    assert run_pipeline(build)[0] == 0
    config = parse_run_config({
        "pipeline": "density-report", "output_dir": str(tmp_path / "d"),
        "stages_dir": str(tmp_path / "b" / "stages"), "density_k": 2,
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 0
    assert [entry["k"] for entry in report["summary"]["density"]] == [2]


def test_density_report_on_empty_directory_exits_with_two(tmp_path: Path) -> None:
    config = parse_run_config({
        "pipeline": "density-report", "output_dir": str(tmp_path / "d"), "stages_dir": str(tmp_path / "none"),
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 2
    assert report["first_failure"].startswith("ArtifactError")


def test_infeasible_build_exits_with_one_and_names_the_stage(tmp_path: Path) -> None:
    config = parse_run_config({
        "pipeline": "build", "output_dir": str(tmp_path), "radix": [2, 2], "stages": 2,
        "polys": [[["0", "0"]], [["1", "0"]]], "degree_caps": [8, 8],
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 1
    assert "stage 2" in report["first_failure"]
    assert not report["passed"]


def test_decompose_pipeline_writes_certificate_and_svg(tmp_path: Path) -> None:
    config = parse_run_config({
        "pipeline": "decompose-cubes", "output_dir": str(tmp_path / "out"),
        "input_path": str(_two_cubes(tmp_path)), "eps": "1/10", "svg": True,
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 0, report["first_failure"]
    assert set(report["artifacts"]) == {"decomposition.json", "per_cube.csv", "decomposition.svg"}
    assert all(report["summary"]["checks"].values())
    assert report["summary"]["plot"]["cubes"] == 2
    record = json.loads((tmp_path / "out" / "decomposition.json").read_text(encoding="utf-8"))
    assert record["replay"]["passed"]
    assert record["config_hash"] == report["config_hash"]


def test_saved_decomposition_can_be_replotted(tmp_path: Path) -> None:
    config = parse_run_config({
        "pipeline": "decompose-cubes", "output_dir": str(tmp_path / "out"),
        "input_path": str(_two_cubes(tmp_path)), "eps": "1/10", "svg": True,
    })
    _, report = run_pipeline(config)
    saved = tmp_path / "out" / "decomposition.json"
    assert load_decomposition(saved).delta == F(1, 10) / (2 * 2**7)
    summary = plot_decomposition(saved, tmp_path / "replot.svg")
    original = dict(report["summary"]["plot"], path=None)
    assert dict(summary.to_record(), path=None) == original
    svg = (tmp_path / "replot.svg").read_text(encoding="utf-8")
    assert _gids(svg, "ubox") == summary.boxes
    assert _gids(svg, "retained") == summary.retained


def test_replotting_a_missing_file_is_an_artifact_error(tmp_path: Path) -> None:
    with pytest.raises(ArtifactError):
        plot_decomposition(tmp_path / "absent.json", tmp_path / "absent.svg")


def test_rerun_reproduces_artifacts_byte_for_byte(tmp_path: Path) -> None:
    cubes = _two_cubes(tmp_path)
    outputs = []
    for name in ("first", "second"):
        config = parse_run_config({
            "pipeline": "decompose-cubes", "output_dir": str(tmp_path / name),
            "input_path": str(cubes), "eps": "1/10", "svg": True,
        })
        assert run_pipeline(config)[0] == 0
        outputs.append(tmp_path / name)
    files = sorted(p.relative_to(outputs[0]) for p in outputs[0].rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (outputs[0] / rel).read_bytes() == (outputs[1] / rel).read_bytes(), rel


def test_malformed_cube_file_exits_with_two(tmp_path: Path) -> None:
    bad = _write(tmp_path / "cubes.json", {"dim": 3, "cubes": [["0", "0", "0"]]})
    config = parse_run_config({
        "pipeline": "decompose-cubes", "output_dir": str(tmp_path / "o"), "input_path": str(bad),
    })
    assert run_pipeline(config)[0] == 2


def test_overlapping_cubes_exit_with_one(tmp_path: Path) -> None:
    cubes = _write(tmp_path / "cubes.json", {"dim": 2, "cubes": [["0", "0"], ["1/2", "0"]]})
    config = parse_run_config({
        "pipeline": "decompose-cubes", "output_dir": str(tmp_path / "o"), "input_path": str(cubes),
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 1
    assert report["first_failure"].startswith("DisjointnessError")


def test_certify_products_pipeline(tmp_path: Path) -> None:
    families = _write(tmp_path / "products.json", {
        "ks": [{"x": ["-1/2", "1/2"], "y": ["-1/2", "1/2"]}, {"x": ["5/2", "7/2"], "y": ["-1/2", "1/2"]}],
        "ls": [{"x": ["-1/2", "1/2"], "y": ["-1/2", "1/2"]}],
    })
    config = parse_run_config({
        "pipeline": "certify-products", "output_dir": str(tmp_path / "o"), "input_path": str(families),
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 0, report["first_failure"]
    assert [step["kind"] for step in report["summary"]["steps"]] == ["product-k"]


def test_solenoid_sample_writes_points_and_uniformity_statistic(tmp_path: Path) -> None:
    config = parse_run_config({"pipeline": "solenoid-sample", "output_dir": str(tmp_path), "count": 50, "seed": 3})
    _, report = run_pipeline(config)
    assert report["summary"]["count"] == 50
    assert report["summary"]["degrees_of_freedom"] == 3
    assert {"points.txt", "samples.csv"} <= set(report["artifacts"])
    rows = (tmp_path / "samples.csv").read_text(encoding="utf-8").splitlines()
    assert len(rows) == 1 + 50 * 3


def test_radix_for_tower() -> None:
    assert radix_for_tower([2, 8, 32], 2).r == (2, 4, 4)
    with pytest.raises(TowerParameterError):
        radix_for_tower([2, 5], 2)


def test_radix_for_tower_uses_exact_ratios() -> None:
    assert radix_for_tower([F(2), F(8), "32"], 2).R == (2, 8, 32)
    with pytest.raises(TowerParameterError, match="must be integers"):
        radix_for_tower([2, F(17, 2)], 2)
    with pytest.raises(TowerParameterError, match="ratios must be integers"):
        radix_for_tower([4, 6], 2)
    with pytest.raises(TowerParameterError, match="positive"):
        radix_for_tower([0, 4], 2)


def test_towers_validate_on_solenoid(tmp_path: Path) -> None:
    config = parse_run_config({"pipeline": "towers-validate", "output_dir": str(tmp_path), "a": [2, 4, 8]})
    exit_code, report = run_pipeline(config)
    assert exit_code == 0, report["first_failure"]
    assert report["summary"]["coverage"] == [1.0, 1.0, 1.0]
    assert report["summary"]["growth_condition"] is False
    assert "coverage.csv" in report["artifacts"]


def test_towers_validate_rejects_fast_growing_ratios(tmp_path: Path) -> None:
    config = parse_run_config({
        "pipeline": "towers-validate", "output_dir": str(tmp_path), "a": [1, 3, 9], "model": "sampled",
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 1
    assert "below 1/2" in report["first_failure"]


def test_towers_build_on_solenoid(tmp_path: Path) -> None:
    config = parse_run_config({
        "pipeline": "towers-build", "output_dir": str(tmp_path), "a": [2, 8], "stages": 2,
        "polys": [[["0", "0"]], [["1/100", "0"]]],
    })
    exit_code, report = run_pipeline(config)
    assert exit_code == 0, report["first_failure"]
    assert report["summary"]["budget"]["holds"]
    assert report["summary"]["anchors"]["2"] == {"1": ["0", "2"], "2": ["0", "0"]}
    assert "tower_stages/tower_stage_002.json" in report["artifacts"]
    assert (tmp_path / "ledger.csv").read_text(encoding="utf-8").count("\n") == 2


def test_towers_build_honours_partition_delta(tmp_path: Path) -> None:
    args = build_parser().parse_args([
        "towers-build", "--output-dir", str(tmp_path), "--a", "2,8", "--stages", "2", "--partition-delta", "1/4",
    ])
    config = config_from_args(args)
    assert config.partition_delta == "1/4"
    config = config.model_copy(update={"polys": [[["0", "0"]], [["1/100", "0"]]]})
    exit_code, report = run_pipeline(config)
    assert exit_code == 0, report["first_failure"]
    assert report["summary"]["partition_deltas"] == {"1": "1", "2": "1/4"}
