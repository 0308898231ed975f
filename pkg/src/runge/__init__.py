"""Grid-certified polynomial approximation in one complex variable."""

from runge.fit import (
    ApproximationError,
    ApproxReport,
    Piece,
    PiecewiseTarget,
    birkhoff_pair,
    degree_schedule,
    fit_polynomial,
    separating_polynomial,
)
from runge.polynomial import ComplexPolynomial
from runge.regions import Disk, Rect, RegionError, separated

__all__ = [
    "ApproxReport",
    "ApproximationError",
    "ComplexPolynomial",
    "Disk",
    "Piece",
    "PiecewiseTarget",
    "Rect",
    "RegionError",
    "birkhoff_pair",
    "degree_schedule",
    "fit_polynomial",
    "separated",
    "separating_polynomial",
]
