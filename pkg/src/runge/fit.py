"""Constructive Runge approximation on unions of disjoint rectangles and disks.

The engine tries, in order: a global-polynomial shortcut (every piece already
agrees with one polynomial), an affine two-level candidate certified at the
extreme points of each region, and least squares with doubling degree. Every
least-squares candidate is validated on a node grid that never meets the
cell-centred fitting grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from runge.polynomial import ComplexPolynomial
from runge.regions import Disk, Region, RegionError, basis_frame, separated, union_bbox
from shared.constants import (
    CERTIFICATION_SAFETY,
    DEFAULT_DEGREE_CAP,
    DEFAULT_GRID_DENSITY,
    DEFAULT_PRECISION_BITS,
    DEFAULT_REFINEMENT_STEPS,
)
from shared.exact import ComplexRational, RationalLike, format_fraction, parse_fraction, to_mpf
from shared.logging import get_logger

logger = get_logger("runge.fit")


class ApproximationError(ValueError):
    def __init__(self, message: str, report: "ApproxReport") -> None:
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Piece:
    region: Region
    target: ComplexPolynomial
    shift: ComplexRational = ComplexRational()

    def shifted_target(self) -> ComplexPolynomial:
        """The function z ↦ target(z − shift)."""
        return self.target.shifted(self.shift)


@dataclass(frozen=True)
class PiecewiseTarget:
    pieces: tuple[Piece, ...]

    def __post_init__(self) -> None:
        pieces = tuple(self.pieces)
        if not pieces:
            raise RegionError("a piecewise target needs at least one piece")
        for i, a in enumerate(pieces):
            for b in pieces[i + 1:]:
                if not separated(a.region, b.region):
                    raise RegionError(f"regions {a.region} and {b.region} are not separated")
        object.__setattr__(self, "pieces", pieces)

    @property
    def regions(self) -> list[Region]:
        return [piece.region for piece in self.pieces]


@dataclass
class ApproxReport:
    method: str
    eps: Fraction
    degree: int = 0
    achieved_eps: float = math.inf
    piece_errors: list[float] = field(default_factory=list)
    grid_density: int = 0
    fit_density: int = 0
    condition: Optional[float] = None
    precision_bits: int = DEFAULT_PRECISION_BITS
    safety: Fraction = CERTIFICATION_SAFETY
    history: list[tuple[int, float]] = field(default_factory=list)
    certified: bool = False

    @property
    def best_so_far(self) -> list[float]:
        best, out = math.inf, []
        for _, achieved in self.history:
            best = min(best, achieved)
            out.append(best)
        return out

    def to_record(self) -> dict:
        return {
            "method": self.method,
            "eps": format_fraction(self.eps),
            "safety": format_fraction(self.safety),
            "degree": self.degree,
            "achieved_eps": self.achieved_eps,
            "piece_errors": list(self.piece_errors),
            "grid_density": self.grid_density,
            "fit_density": self.fit_density,
            "condition": self.condition,
            "precision_bits": self.precision_bits,
            "history": [[degree, achieved] for degree, achieved in self.history],
            "certified": self.certified,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ApproxReport":
        return cls(
            method=record["method"],
            eps=parse_fraction(record["eps"]),
            degree=int(record["degree"]),
            achieved_eps=float(record["achieved_eps"]),
            piece_errors=[float(e) for e in record["piece_errors"]],
            grid_density=int(record["grid_density"]),
            fit_density=int(record["fit_density"]),
            condition=record.get("condition"),
            precision_bits=int(record["precision_bits"]),
            safety=parse_fraction(record["safety"]),
            history=[(int(d), float(a)) for d, a in record["history"]],
            certified=bool(record["certified"]),
        )


def degree_schedule(degree_cap: int) -> list[int]:
    """2, 4, 8, … below the cap, then the cap itself."""
    if degree_cap < 1:
        raise ValueError("degree_cap must be >= 1")
    degrees, degree = [], 2
    while degree < degree_cap:
        degrees.append(degree)
        degree *= 2
    degrees.append(degree_cap)
    return degrees


# ---------------------------------------------------------------------------
# shortcut and affine candidates
# ---------------------------------------------------------------------------

def _global_shortcut(target: PiecewiseTarget) -> Optional[ComplexPolynomial]:
    first = target.pieces[0]
    if len(target.pieces) == 1 and first.shift == ComplexRational():
        return first.target
    reference = first.shifted_target()
    center, scale = basis_frame(target.regions)
    rebased = reference.rebase(center, scale)
    for piece in target.pieces[1:]:
        if not rebased.agrees_with(piece.shifted_target()):
            return None
    return reference


def _constant_value(poly: ComplexPolynomial) -> Optional[complex]:
    if poly.degree != 0:
        return None
    return poly.coeffs[0]


def _group_center(regions: Sequence[Region]) -> ComplexRational:
    x0, x1, y0, y1 = union_bbox(list(regions))
    return ComplexRational((x0 + x1) / 2, (y0 + y1) / 2)


def _affine_candidate(
    target: PiecewiseTarget, safe_eps: mpmath.mpf, precision_bits: int
) -> Optional[tuple[ComplexPolynomial, list[float], float]]:
    values: list = []
    groups: list[list[int]] = []
    for index, piece in enumerate(target.pieces):
        value = _constant_value(piece.target)
        if value is None:
            return None
        for slot, seen in enumerate(values):
            if seen == value:
                groups[slot].append(index)
                break
        else:
            values.append(value)
            groups.append([index])
    if len(values) != 2:
        return None

    alpha, beta = values
    ca = _group_center([target.pieces[i].region for i in groups[0]])
    cb = _group_center([target.pieces[i].region for i in groups[1]])
    if ca == cb:
        return None
    span = cb - ca
    # p(z) = alpha + (beta - alpha)(z - ca)/(cb - ca) in the basis centred at ca with scale 1
    slope = (beta - alpha) / span.to_mpc()
    poly = ComplexPolynomial(ca, Fraction(1), (alpha, slope), precision_bits)

    gain = abs(beta - alpha) / mpmath.sqrt(to_mpf(span.abs_squared()))
    errors = []
    for slot, group in enumerate(groups):
        anchor = ca if slot == 0 else cb
        for i in group:
            errors.append(gain * target.pieces[i].region.max_distance(anchor))
    worst = max(errors)
    if worst >= safe_eps:
        return None
    ordered = [0.0] * len(target.pieces)
    flat = [i for group in groups for i in group]
    for i, err in zip(flat, errors):
        ordered[i] = float(err)
    return poly, ordered, float(worst)


# ---------------------------------------------------------------------------
# least squares
# ---------------------------------------------------------------------------

def _fit_density(grid_density: int, degree: int) -> int:
    return max(grid_density, math.ceil((degree + 1) / 2))


def _arnoldi(u: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Basis of span{1, u, …, u^degree} on the fit points with columns of norm √m, and its Hessenberg recurrence."""
    m = u.size
    q = np.zeros((m, degree + 1), dtype=np.complex128)
    h = np.zeros((degree + 1, degree), dtype=np.complex128)
    q[:, 0] = 1.0
    for k in range(1, degree + 1):
        v = u * q[:, k - 1]
        for _ in range(2):
            proj = q[:, :k].conj().T @ v / m
            h[:k, k - 1] += proj
            v = v - q[:, :k] @ proj
        h[k, k - 1] = np.linalg.norm(v) / math.sqrt(m)
        if h[k, k - 1] == 0:
            raise RegionError(f"fit points span no polynomial space of degree {k}")
        q[:, k] = v / h[k, k - 1]
    return q, h


def _basis_monomials(h: np.ndarray, precision_bits: int) -> list[list]:
    """Monomial coefficients of every basis polynomial q_k(u), from q_k = (u·q_{k-1} − Σ h_jk q_j)/h_kk."""
    degree = h.shape[1]
    with mpmath.workprec(precision_bits):
        basis = [[mpmath.mpc(1)]]
        for k in range(1, degree + 1):
            nxt = [mpmath.mpc(0)] + list(basis[k - 1])
            for j in range(k):
                hj = mpmath.mpc(complex(h[j, k - 1]))
                for i, c in enumerate(basis[j]):
                    nxt[i] -= hj * c
            inv = 1 / mpmath.mpc(complex(h[k, k - 1]))
            basis.append([c * inv for c in nxt])
    return basis


def _combine(basis: list[list], weights: np.ndarray, precision_bits: int) -> list:
    with mpmath.workprec(precision_bits):
        out = [mpmath.mpc(0)] * len(basis)
        for d, q in zip(weights, basis):
            dk = mpmath.mpc(complex(d))
            for i, c in enumerate(q):
                out[i] += dk * c
    return out


def _stored_bits(coeffs: Sequence, precision_bits: int) -> int:
    """Working precision plus the bits a Horner evaluation loses to the largest coefficient."""
    with mpmath.workprec(precision_bits):
        norm = max(abs(c) for c in coeffs)
        extra = int(mpmath.ceil(mpmath.log(norm, 2))) if norm > 1 else 0
    return precision_bits + extra + 8


def _solve(
    target: PiecewiseTarget,
    center: ComplexRational,
    scale: Fraction,
    degree: int,
    density: int,
    precision_bits: int,
    refinement_steps: int,
) -> tuple[ComplexPolynomial, Optional[float]]:
    """Least squares in an orthonormalised Krylov basis, converted to monomials in mpmath.

    The monomial conversion runs with 4 guard bits per degree, since the
    monomial coefficients of a well-fitted polynomial can grow geometrically.
    """
    working_bits = precision_bits + 4 * degree + 32
    points, values_mp, points_mp = [], [], []
    for piece in target.pieces:
        pts = piece.region.fit_points(density)
        shifted = piece.shifted_target()
        points.append(pts)
        with mpmath.workprec(working_bits):
            mp_pts = [mpmath.mpc(complex(z)) for z in pts]
        points_mp.extend(mp_pts)
        values_mp.extend(shifted.evaluate_many(mp_pts))
    z = np.concatenate(points)
    u = (z - center.to_complex()) / float(scale)
    q, h = _arnoldi(u, degree)
    rhs = np.array([complex(v) for v in values_mp], dtype=np.complex128)
    weights, _, _, singular = np.linalg.lstsq(q, rhs, rcond=None)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else None

    basis = _basis_monomials(h, working_bits)
    coeffs = _combine(basis, weights, working_bits)
    with mpmath.workprec(working_bits):
        c0 = center.to_mpc()
        inv = 1 / to_mpf(scale)
        powers = [(p - c0) * inv for p in points_mp]
        for _ in range(refinement_steps):
            residual = []
            for u_k, value in zip(powers, values_mp):
                acc = mpmath.mpc(0)
                for c in reversed(coeffs):
                    acc = acc * u_k + c
                residual.append(value - acc)
            correction, _, _, _ = np.linalg.lstsq(
                q, np.array([complex(r) for r in residual], dtype=np.complex128), rcond=None
            )
            coeffs = [c + dc for c, dc in zip(coeffs, _combine(basis, correction, working_bits))]
    return ComplexPolynomial(center, scale, coeffs, _stored_bits(coeffs, precision_bits)), condition


def _validate(
    poly: ComplexPolynomial, target: PiecewiseTarget, density: int, safe_eps: float, precision_bits: int
) -> list[float]:
    # double-precision screen first; high precision only when the screen cannot decide
    float_errors = []
    for piece in target.pieces:
        pts = piece.region.validation_array(density)
        diff = poly.evaluate_array(pts) - piece.shifted_target().evaluate_array(pts)
        float_errors.append(float(np.max(np.abs(diff))))
    roundoff = 1e-14 * (poly.coefficient_norm() + max(p.target.coefficient_norm() for p in target.pieces))
    if max(float_errors) > safe_eps * 1.01 and roundoff < safe_eps * 0.01:
        return float_errors

    errors = []
    with mpmath.workprec(precision_bits):
        for piece in target.pieces:
            pts = piece.region.validation_points(density)
            fitted = poly.evaluate_many(pts)
            wanted = piece.shifted_target().evaluate_many(pts)
            errors.append(float(max(abs(a - b) for a, b in zip(fitted, wanted))))
    return errors


def fit_polynomial(
    target: PiecewiseTarget,
    eps: RationalLike,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    grid_density: int = DEFAULT_GRID_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    refinement_steps: int = DEFAULT_REFINEMENT_STEPS,
    safety: Fraction = CERTIFICATION_SAFETY,
) -> tuple[ComplexPolynomial, ApproxReport]:
    """Polynomial within eps of the piecewise target on every piece.

    Raises ApproximationError carrying the best report when the degree cap is
    reached without a validated candidate.
    """
    eps = parse_fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if grid_density < 2:
        raise ValueError("grid_density must be >= 2")
    safe_eps = float(eps * safety)

    shortcut = _global_shortcut(target)
    if shortcut is not None:
        report = ApproxReport(
            method="shortcut", eps=eps, degree=shortcut.degree, achieved_eps=0.0,
            piece_errors=[0.0] * len(target.pieces), precision_bits=precision_bits,
            safety=safety, history=[(shortcut.degree, 0.0)], certified=True,
        )
        logger.info("fit_shortcut", extra={"extra": {"pieces": len(target.pieces), "degree": shortcut.degree}})
        return shortcut, report

    with mpmath.workprec(precision_bits):
        affine = _affine_candidate(target, to_mpf(eps * safety), precision_bits)
    if affine is not None:
        poly, errors, worst = affine
        report = ApproxReport(
            method="affine", eps=eps, degree=poly.degree, achieved_eps=worst, piece_errors=errors,
            precision_bits=precision_bits, safety=safety, history=[(poly.degree, worst)], certified=True,
        )
        logger.info("fit_affine", extra={"extra": {"pieces": len(target.pieces), "achieved": worst}})
        return poly, report

    center, scale = basis_frame(target.regions)
    best = ApproxReport(method="least-squares", eps=eps, precision_bits=precision_bits, safety=safety)
    history: list[tuple[int, float]] = []
    for degree in degree_schedule(degree_cap):
        density = _fit_density(grid_density, degree)
        validation_density = 2 * density + 1
        poly, condition = _solve(target, center, scale, degree, density, precision_bits, refinement_steps)
        errors = _validate(poly, target, validation_density, safe_eps, precision_bits)
        achieved = max(errors)
        history.append((degree, achieved))
        logger.info(
            "fit_attempt",
            extra={"extra": {"degree": degree, "achieved": achieved, "condition": condition, "eps": str(eps)}},
        )
        report = ApproxReport(
            method="least-squares", eps=eps, degree=poly.degree, achieved_eps=achieved, piece_errors=errors,
            grid_density=validation_density, fit_density=density, condition=condition,
            precision_bits=precision_bits, safety=safety, history=list(history),
            certified=achieved < safe_eps,
        )
        if report.certified:
            return poly, report
        if achieved < best.achieved_eps:
            best = report
    best.history = history
    raise ApproximationError(
        f"no certified polynomial up to degree {degree_cap}: best error {best.achieved_eps:.3e} vs eps {eps}",
        best,
    )


# ---------------------------------------------------------------------------
# derived constructions
# ---------------------------------------------------------------------------

def separating_polynomial(
    a: Sequence[Region],
    b: Sequence[Region],
    bound: RationalLike,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    grid_density: int = DEFAULT_GRID_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
    safety: Fraction = CERTIFICATION_SAFETY,
) -> tuple[ComplexPolynomial, ApproxReport]:
    """|p| < bound·safety on every region of a and |p − 1| < bound·safety on every region of b."""
    zero = ComplexPolynomial.constant(0, precision_bits)
    one = ComplexPolynomial.constant(1, precision_bits)
    pieces = [Piece(region, zero) for region in a] + [Piece(region, one) for region in b]
    return fit_polynomial(
        PiecewiseTarget(tuple(pieces)), bound, degree_cap, grid_density, precision_bits, safety=safety
    )


def birkhoff_pair(
    p0: ComplexPolynomial,
    p1: ComplexPolynomial,
    radius: RationalLike,
    eps: RationalLike,
    degree_cap: int = DEFAULT_DEGREE_CAP,
    grid_density: int = DEFAULT_GRID_DENSITY,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> tuple[ComplexPolynomial, ApproxReport]:
    """p close to p0 on |z| <= R and z ↦ p(z + 3R) close to p1 there."""
    radius = parse_fraction(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    offset = ComplexRational(3 * radius)
    pieces = (
        Piece(Disk(ComplexRational(), radius), p0),
        Piece(Disk(offset, radius), p1, offset),
    )
    return fit_polynomial(PiecewiseTarget(pieces), eps, degree_cap, grid_density, precision_bits)
