"""Shared constants used across pipelines."""

from __future__ import annotations

import os
from fractions import Fraction

TOOL_NAME = "dense-orbits"
TOOL_VERSION = "0.1.0"
ARTIFACT_FORMAT_VERSION = 1

# Working precision for polynomial coefficients and certification
DEFAULT_PRECISION_BITS = int(os.getenv("DENSE_ORBITS_PRECISION_BITS", "64"))

# Grid certification compares against eps times this factor
CERTIFICATION_SAFETY = Fraction(9, 10)

DEFAULT_GRID_DENSITY = 12
DEFAULT_DEGREE_CAP = 64
DEFAULT_REFINEMENT_STEPS = 2

# Coefficient 1-norm above which double-precision evaluation defers to mpmath
FLOAT_EVAL_LIMIT = 1e6

# Minimum points per side for density / Condition (D) measurement grids
MEASUREMENT_GRID_MIN = 50
RANDOM_POINTS = 100

# Relative slack allowed on split gaps during certificate replay
REPLAY_GAP_TOLERANCE = Fraction(1, 10**6)

MAX_PARTITION_CELLS = 256
MAX_LATTICE_SCAN = 1_000_000
