"""Versioned, deterministic artifact files.

Every JSON artifact starts with the same header (format, format_version,
tool, tool_version, config_hash) and is written with sorted keys and no
timestamps, so replaying a config reproduces the files byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import pathlib
from typing import Any, Iterable, Optional, Sequence

import jsonschema

from shared.constants import ARTIFACT_FORMAT_VERSION, TOOL_NAME, TOOL_VERSION


class ArtifactError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Schema validation helper
# ---------------------------------------------------------------------------

_SCHEMA_CACHE: dict[str, dict] = {}


def _load_schema(schema_filename: str) -> dict:
    """Load a JSON schema from shared/schemas/, caching after first read."""
    if schema_filename not in _SCHEMA_CACHE:
        schema_path = pathlib.Path(__file__).parent / "schemas" / schema_filename
        with open(schema_path, encoding="utf-8") as fh:
            _SCHEMA_CACHE[schema_filename] = json.load(fh)
    return _SCHEMA_CACHE[schema_filename]


def validate_against_schema(data: dict, schema_filename: str) -> None:
    schema = _load_schema(schema_filename)
    try:
        jsonschema.validate(instance=data, schema=schema)
    except jsonschema.ValidationError as exc:
        raise ArtifactError(f"{schema_filename}: {exc.message}") from exc


# ---------------------------------------------------------------------------
# Writing / reading
# ---------------------------------------------------------------------------

def artifact_header(kind: str, config_hash: str) -> dict[str, Any]:
    return {
        "format": kind,
        "format_version": ARTIFACT_FORMAT_VERSION,
        "tool": TOOL_NAME,
        "tool_version": TOOL_VERSION,
        "config_hash": config_hash,
    }


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_artifact(path: pathlib.Path, data: dict, schema_filename: Optional[str] = None) -> pathlib.Path:
    if schema_filename:
        validate_against_schema(data, schema_filename)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(data), encoding="utf-8")
    return path


def read_artifact(path: pathlib.Path, schema_filename: Optional[str] = None) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ArtifactError(f"{path}: expected a JSON object")
    if schema_filename:
        validate_against_schema(data, schema_filename)
    return data


def write_csv(path: pathlib.Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> pathlib.Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path
