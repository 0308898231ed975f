"""Pipelines, reports and plots behind the dense-orbits command line."""

from cli.app import build_parser, main, run_pipeline
from cli.pipelines import PIPELINES, PipelineOutcome, RunContext

__all__ = ["PIPELINES", "PipelineOutcome", "RunContext", "build_parser", "main", "run_pipeline"]
