"""Shared helpers used by every pipeline: logging, config, artifacts, exact numbers."""
