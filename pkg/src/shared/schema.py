import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from shared.constants import DEFAULT_GRID_DENSITY, DEFAULT_PRECISION_BITS
from shared.exact import parse_fraction

PipelineName = Literal[
    "solenoid-sample",
    "build",
    "density-report",
    "decompose-cubes",
    "certify-products",
    "towers-validate",
    "towers-build",
]
ModelName = Literal["solenoid", "sampled"]

# Fields that locate a run rather than define it; kept out of the config hash.
_UNHASHED_FIELDS = {"output_dir", "resume"}


class ConfigError(ValueError):
    pass


def _positive_rational(value: str, field_name: str) -> str:
    try:
        parsed = parse_fraction(value)
    except ValueError as exc:
        raise ValueError(f"{field_name}: {exc}") from exc
    if parsed <= 0:
        raise ValueError(f"{field_name} must be positive, got {value}")
    return value


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)

    pipeline: PipelineName
    output_dir: str
    seed: int = 0

    radix: list[int] = Field(default_factory=lambda: [2, 2, 2])
    dim: int = 2
    depth: Optional[int] = None
    resolution: int = 8
    count: int = 10

    stages: int = 3
    eps_schedule: Union[Literal["default"], list[str]] = "default"
    polys: Optional[list[list[list[str]]]] = None
    """Monomial coefficient lists, each coefficient as [re, im] fraction strings."""
    degree_caps: Optional[list[int]] = None
    precision_bits: int = DEFAULT_PRECISION_BITS
    grid_density: int = DEFAULT_GRID_DENSITY
    max_attempts: int = 1
    resume: bool = False

    stages_dir: Optional[str] = None
    density_k: Optional[int] = None
    patch_radius: str = "1/2"

    input_path: Optional[str] = None
    eps: str = "1/10"
    svg: bool = False
    projection: Optional[list[int]] = None

    model: ModelName = "solenoid"
    a: Optional[list[int]] = None
    samples: int = 200
    partition_delta: Optional[str] = None

    @field_validator("radix")
    @classmethod
    def validate_radix(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("radix cannot be empty")
        if any(entry < 2 for entry in value):
            raise ValueError("radix entries must be >= 2")
        return value

    @field_validator("dim")
    @classmethod
    def validate_dim(cls, value: int) -> int:
        if value < 2 or value % 2:
            raise ValueError("dim is the real dimension 2d and must be even and >= 2")
        return value

    @field_validator("eps_schedule")
    @classmethod
    def validate_eps_schedule(cls, value: Union[str, list[str]]) -> Union[str, list[str]]:
        if isinstance(value, list):
            if not value:
                raise ValueError("eps_schedule list cannot be empty")
            for entry in value:
                _positive_rational(entry, "eps_schedule entry")
        return value

    @field_validator("eps", "partition_delta", "patch_radius")
    @classmethod
    def validate_rationals(cls, value: Optional[str], info) -> Optional[str]:
        if value is None:
            return value
        return _positive_rational(value, info.field_name)

    @field_validator("degree_caps")
    @classmethod
    def validate_caps(cls, value: Optional[list[int]]) -> Optional[list[int]]:
        if value is not None and any(cap < 1 for cap in value):
            raise ValueError("degree caps must be >= 1")
        return value

    @field_validator("precision_bits")
    @classmethod
    def validate_precision(cls, value: int) -> int:
        if value < 53:
            raise ValueError("precision_bits must be >= 53")
        return value

    @field_validator("grid_density")
    @classmethod
    def validate_grid_density(cls, value: int) -> int:
        if value < 2:
            raise ValueError("grid_density must be >= 2")
        return value

    @field_validator("stages", "count", "samples", "resolution", "max_attempts")
    @classmethod
    def validate_counts(cls, value: int, info) -> int:
        if value < 1:
            raise ValueError(f"{info.field_name} must be >= 1")
        return value

    @field_validator("projection")
    @classmethod
    def validate_projection(cls, value: Optional[list[int]]) -> Optional[list[int]]:
        if value is None:
            return value
        if len(value) != 2 or value[0] == value[1] or min(value) < 1:
            raise ValueError("projection must name two distinct 1-based axes")
        return value

    @model_validator(mode="after")
    def validate_pipeline_fields(self) -> "RunConfig":
        if self.pipeline in ("decompose-cubes", "certify-products") and not self.input_path:
            raise ValueError(f"{self.pipeline} requires input_path")
        if self.pipeline == "density-report" and not self.stages_dir:
            raise ValueError("density-report requires stages_dir")
        if self.pipeline in ("towers-validate", "towers-build") and not self.a:
            raise ValueError(f"{self.pipeline} requires the tower sequence a")
        if self.pipeline == "build":
            if self.dim != 2:
                raise ValueError("build runs in one complex variable (dim 2)")
            if len(self.radix) < self.stages:
                raise ValueError("radix must have at least as many entries as stages")
            if isinstance(self.eps_schedule, list) and len(self.eps_schedule) < self.stages:
                raise ValueError("eps_schedule must cover every stage")
            if self.degree_caps is not None and len(self.degree_caps) < self.stages:
                raise ValueError("degree_caps must cover every stage")
            if self.polys is not None and len(self.polys) < self.stages:
                raise ValueError("polys must cover every stage")
        if self.pipeline == "solenoid-sample" and self.depth is not None and self.depth > len(self.radix):
            raise ValueError("depth exceeds the radix length")
        return self

    def eps_values(self) -> Optional[list[Fraction]]:
        if isinstance(self.eps_schedule, list):
            return [parse_fraction(entry) for entry in self.eps_schedule]
        return None


def config_hash(config: RunConfig) -> str:
    payload = config.model_dump(exclude=_UNHASHED_FIELDS)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def parse_run_config(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"Run config failed schema validation: {exc}") from exc


def load_run_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Run config could not be read: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("Run config must be a JSON object")
    return parse_run_config(raw)
