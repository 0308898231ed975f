import json
from fractions import Fraction

import pytest

from shared.schema import ConfigError, RunConfig, config_hash, load_run_config, parse_run_config


def test_schema_valid() -> None:
    config = parse_run_config({"pipeline": "build", "output_dir": "runs/x", "eps_schedule": ["1", "1/10", "1/100"]})
    assert config.radix == [2, 2, 2]
    assert config.stages == 3
    assert config.eps_values() == [Fraction(1), Fraction(1, 10), Fraction(1, 100)]


def test_schema_default_eps_schedule() -> None:
    config = parse_run_config({"pipeline": "build", "output_dir": "runs/x"})
    assert config.eps_values() is None


def test_schema_invalid_extra_field() -> None:
    with pytest.raises(ConfigError, match="Run config failed schema validation"):
        parse_run_config({"pipeline": "build", "output_dir": "x", "unexpected": True})


def test_schema_is_strict_about_types() -> None:
    with pytest.raises(ConfigError):
        parse_run_config({"pipeline": "build", "output_dir": "x", "stages": "3"})


@pytest.mark.parametrize(
    "changes",
    [
        {"eps_schedule": ["1", "0", "1/100"]},
        {"eps_schedule": ["1", "-1/10", "1/100"]},
        {"eps_schedule": ["1", "abc", "1/100"]},
        {"eps_schedule": []},
        {"radix": [2, 1, 2]},
        {"dim": 3},
        {"precision_bits": 32},
        {"degree_caps": [0, 4, 4]},
        {"stages": 4},
        {"projection": [1, 1]},
    ],
)
def test_schema_rejects_bad_build_fields(changes: dict) -> None:
    with pytest.raises(ConfigError):
        parse_run_config({"pipeline": "build", "output_dir": "x", **changes})


@pytest.mark.parametrize(
    ("pipeline", "missing"),
    [
        ("decompose-cubes", "input_path"),
        ("certify-products", "input_path"),
        ("density-report", "stages_dir"),
        ("towers-validate", "a"),
        ("towers-build", "a"),
    ],
)
def test_schema_requires_pipeline_fields(pipeline: str, missing: str) -> None:
    with pytest.raises(ConfigError, match=missing):
        parse_run_config({"pipeline": pipeline, "output_dir": "x"})


def test_config_hash_ignores_location_fields() -> None:
    a = parse_run_config({"pipeline": "build", "output_dir": "one"})
    b = parse_run_config({"pipeline": "build", "output_dir": "two", "resume": True})
    c = parse_run_config({"pipeline": "build", "output_dir": "one", "seed": 1})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 16


def test_load_run_config(tmp_path) -> None:
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"pipeline": "towers-validate", "output_dir": "x", "a": [2, 4, 8]}), encoding="utf-8")
    config = load_run_config(path)
    assert isinstance(config, RunConfig)
    assert config.model == "solenoid"

    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="JSON object"):
        load_run_config(path)
    with pytest.raises(ConfigError, match="could not be read"):
        load_run_config(tmp_path / "missing.json")
