"""Polynomials in one complex variable over a centred, scaled monomial basis.

A :class:`ComplexPolynomial` stores coefficients c_k of ((z - center)/scale)^k
as mpmath complex numbers. High-degree fits over separated pieces can carry
large coefficients even in a local basis; the double-precision path then
hands evaluation over to mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath
import numpy as np

from shared.constants import DEFAULT_PRECISION_BITS, FLOAT_EVAL_LIMIT
from shared.exact import ComplexRational, RationalLike, format_fraction, parse_fraction, to_mpf

Point = Union[complex, ComplexRational, "mpmath.mpc"]


def _as_mpc(value: Point) -> mpmath.mpc:
    if isinstance(value, ComplexRational):
        return value.to_mpc()
    return mpmath.mpc(value)


def _trim(coeffs: Sequence[mpmath.mpc]) -> tuple[mpmath.mpc, ...]:
    out = list(coeffs) or [mpmath.mpc(0)]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _digits(precision_bits: int) -> int:
    return int(math.ceil(precision_bits * math.log10(2))) + 3


@dataclass(frozen=True, eq=False)
class ComplexPolynomial:
    center: ComplexRational
    scale: Fraction
    coeffs: tuple
    precision_bits: int = DEFAULT_PRECISION_BITS
    _float_coeffs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        scale = Fraction(self.scale)
        if scale <= 0:
            raise ValueError("polynomial scale must be positive")
        object.__setattr__(self, "center", ComplexRational.of(self.center))
        object.__setattr__(self, "scale", scale)
        with mpmath.workprec(self.precision_bits):
            coeffs = _trim([mpmath.mpc(c) for c in self.coeffs])
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(
            self, "_float_coeffs", np.array([complex(c) for c in coeffs], dtype=np.complex128)
        )

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(
        cls, value: ComplexRational | RationalLike, precision_bits: int = DEFAULT_PRECISION_BITS
    ) -> "ComplexPolynomial":
        with mpmath.workprec(precision_bits):
            c = ComplexRational.of(value).to_mpc()
        return cls(ComplexRational(), Fraction(1), (c,), precision_bits)

    @classmethod
    def from_monomials(
        cls, coeffs: Iterable[ComplexRational | RationalLike | Sequence[RationalLike]],
        precision_bits: int = DEFAULT_PRECISION_BITS,
    ) -> "ComplexPolynomial":
        """Polynomial Σ a_k z^k with exact Gaussian-rational a_k."""
        with mpmath.workprec(precision_bits):
            values = tuple(ComplexRational.of(c).to_mpc() for c in coeffs)
        return cls(ComplexRational(), Fraction(1), values, precision_bits)

    # -- structure --------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient_norm(self) -> float:
        return float(np.sum(np.abs(self._float_coeffs)))

    def shifted(self, w: ComplexRational | RationalLike) -> "ComplexPolynomial":
        """z ↦ p(z − w), exact: only the centre moves."""
        return ComplexPolynomial(self.center + ComplexRational.of(w), self.scale, self.coeffs, self.precision_bits)

    def rebase(self, center: ComplexRational, scale: RationalLike) -> "ComplexPolynomial":
        """Same polynomial, coefficients re-expressed over ((z − center)/scale)^k."""
        center = ComplexRational.of(center)
        scale = parse_fraction(scale)
        if center == self.center and scale == self.scale:
            return self
        with mpmath.workprec(self.precision_bits):
            # (z - c)/s = alpha + beta·u with u = (z - center)/scale
            alpha = (center - self.center).to_mpc() / to_mpf(self.scale)
            beta = to_mpf(scale / self.scale)
            result = [mpmath.mpc(0)]
            for c in reversed(self.coeffs):
                shifted = [mpmath.mpc(0)] * (len(result) + 1)
                for k, a in enumerate(result):
                    shifted[k] += a * alpha
                    shifted[k + 1] += a * beta
                shifted[0] += c
                result = shifted
        return ComplexPolynomial(center, scale, result, self.precision_bits)

    def derivative(self) -> "ComplexPolynomial":
        with mpmath.workprec(self.precision_bits):
            s = to_mpf(self.scale)
            coeffs = [k * c / s for k, c in enumerate(self.coeffs)][1:] or [mpmath.mpc(0)]
        return ComplexPolynomial(self.center, self.scale, coeffs, self.precision_bits)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, z: Point) -> mpmath.mpc:
        with mpmath.workprec(self.precision_bits):
            u = (_as_mpc(z) - self.center.to_mpc()) / to_mpf(self.scale)
            acc = mpmath.mpc(0)
            for c in reversed(self.coeffs):
                acc = acc * u + c
            return acc

    def evaluate_many(self, points: Sequence[Point]) -> list:
        with mpmath.workprec(self.precision_bits):
            c0 = self.center.to_mpc()
            inv = 1 / to_mpf(self.scale)
            out = []
            for z in points:
                u = (_as_mpc(z) - c0) * inv
                acc = mpmath.mpc(0)
                for c in reversed(self.coeffs):
                    acc = acc * u + c
                out.append(acc)
            return out

    @property
    def float_safe(self) -> bool:
        """Whether double-precision Horner evaluation loses less than FLOAT_EVAL_LIMIT·2^-52 on |u| <= 1."""
        return self.coefficient_norm() < FLOAT_EVAL_LIMIT

    def evaluate_array(self, z: np.ndarray) -> np.ndarray:
        """Double-precision fast path; mpmath when the coefficients are too large for it."""
        if not self.float_safe:
            arr = np.asarray(z, dtype=np.complex128)
            values = self.evaluate_many([complex(w) for w in arr.ravel()])
            return np.array([complex(v) for v in values], dtype=np.complex128).reshape(arr.shape)
        u = (np.asarray(z, dtype=np.complex128) - self.center.to_complex()) / float(self.scale)
        return np.polyval(self._float_coeffs[::-1], u)

    def agrees_with(self, other: "ComplexPolynomial", rel_tol: float = 1e-12) -> bool:
        """Coefficient-wise agreement after rebasing ``other`` onto this basis."""
        rebased = other.rebase(self.center, self.scale)
        n = max(len(self.coeffs), len(rebased.coeffs))
        a = np.zeros(n, dtype=np.complex128)
        b = np.zeros(n, dtype=np.complex128)
        a[: len(self.coeffs)] = self._float_coeffs
        b[: len(rebased.coeffs)] = rebased._float_coeffs
        size = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1.0)
        return float(np.max(np.abs(a - b))) <= rel_tol * size

    # -- records ----------------------------------------------------------

    def to_record(self) -> dict:
        digits = _digits(self.precision_bits)
        with mpmath.workprec(self.precision_bits):
            coeffs = [[mpmath.nstr(c.real, digits), mpmath.nstr(c.imag, digits)] for c in self.coeffs]
        return {
            "center": self.center.to_record(),
            "scale": format_fraction(self.scale),
            "precision_bits": self.precision_bits,
            "degree": self.degree,
            "coeffs": coeffs,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ComplexPolynomial":
        precision_bits = int(record["precision_bits"])
        with mpmath.workprec(precision_bits):
            coeffs = tuple(mpmath.mpc(mpmath.mpf(re), mpmath.mpf(im)) for re, im in record["coeffs"])
        return cls(ComplexRational.of(record["center"]), parse_fraction(record["scale"]), coeffs, precision_bits)
