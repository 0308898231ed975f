from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterator, Optional, Sequence

from runge.polynomial import ComplexPolynomial
from runge.regions import Rect
from shared.constants import DEFAULT_DEGREE_CAP, DEFAULT_GRID_DENSITY, DEFAULT_PRECISION_BITS
from shared.exact import ComplexRational, format_fraction
from solenoid.radix import RadixSequence


class MarginError(ValueError):
    pass


class PlanError(ValueError):
    pass


def margin_width(n: int) -> Fraction:
    """10^-(n-1), the inset of the K-squares at stage n."""
    return Fraction(1, 10 ** (n - 1))


def default_eps(n: int) -> Fraction:
    return Fraction(1, 10 ** (n - 1))


def margins(n: int, r_prev: Fraction | int, i: int, j: int) -> Rect:
    """The closed square K_{n-1,ij} inside the tile (i, j) of S_n."""
    if i < 0 or j < 0:
        raise MarginError(f"tile index ({i}, {j}) must be non-negative")
    r_prev = Fraction(r_prev)
    m = margin_width(n)
    if 2 * m >= r_prev:
        raise MarginError(f"margin {m} leaves no square inside a tile of side {r_prev}")
    return Rect(i * r_prev + m, (i + 1) * r_prev - m, j * r_prev + m, (j + 1) * r_prev - m)


# ---------------------------------------------------------------------------
# enumeration of polynomials with Gaussian-rational coefficients
# ---------------------------------------------------------------------------

def _height(value: Fraction) -> int:
    return 0 if value == 0 else max(abs(value.numerator), value.denominator)


def _rationals(h: int) -> list[Fraction]:
    if h == 0:
        return [Fraction(0)]
    values = {Fraction(0)}
    for q in range(1, h + 1):
        for p in range(-h, h + 1):
            if gcd(p, q) == 1:
                values.add(Fraction(p, q))
    return sorted(values)


def _coefficients(h: int) -> list[ComplexRational]:
    reals = _rationals(h)
    out = [ComplexRational(a, b) for a in reals for b in reals]

    def key(c: ComplexRational) -> tuple:
        return (max(c.re.denominator, c.im.denominator), abs(c.re) + abs(c.im), c.re, c.im)

    return sorted(out, key=key)


def _complex_height(c: ComplexRational) -> int:
    return max(_height(c.re), _height(c.im))


def enumerate_polynomials() -> Iterator[tuple[ComplexRational, ...]]:
    """Every polynomial with Gaussian-rational coefficients, exactly once.

    Monomial coefficient tuples are listed by weight N = degree + height,
    degree ascending within a weight; the first entry is the zero polynomial.
    """
    for weight in itertools.count(0):
        for degree in range(weight + 1):
            h = weight - degree
            coeffs = _coefficients(h)
            for combo in itertools.product(coeffs, repeat=degree + 1):
                if degree > 0 and combo[-1] == ComplexRational():
                    continue
                if max(_complex_height(c) for c in combo) != h:
                    continue
                yield tuple(combo)


def first_polynomials(count: int, precision_bits: int = DEFAULT_PRECISION_BITS) -> list[ComplexPolynomial]:
    return [
        ComplexPolynomial.from_monomials(coeffs, precision_bits)
        for coeffs in itertools.islice(enumerate_polynomials(), count)
    ]


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StagePlan:
    radix: RadixSequence
    polys: tuple[ComplexPolynomial, ...]
    eps: tuple[Fraction, ...]
    degree_caps: tuple[int, ...]
    grid_density: int = DEFAULT_GRID_DENSITY
    precision_bits: int = DEFAULT_PRECISION_BITS
    monomials: tuple[tuple[ComplexRational, ...], ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.radix.dim != 2:
            raise PlanError("the staged construction runs in one complex variable (dim 2)")
        stages = len(self.polys)
        if stages < 1:
            raise PlanError("a plan needs at least one stage")
        if stages > self.radix.length:
            raise PlanError(f"{stages} stages need {stages} radix entries, got {self.radix.length}")
        if len(self.eps) < stages or len(self.degree_caps) < stages:
            raise PlanError("eps schedule and degree caps must cover every stage")
        if any(e <= 0 for e in self.eps):
            raise PlanError("eps entries must be positive")
        for n in range(2, stages + 1):
            if 2 * margin_width(n) >= self.radix.modulus(n - 1):
                raise PlanError(f"margins of stage {n} are empty")

    @property
    def stages(self) -> int:
        return len(self.polys)

    def eps_at(self, n: int) -> Fraction:
        return self.eps[n - 1]

    def cap_at(self, n: int) -> int:
        return self.degree_caps[n - 1]

    def poly_at(self, n: int) -> ComplexPolynomial:
        return self.polys[n - 1]

    @classmethod
    def default(
        cls,
        radix: RadixSequence,
        stages: int,
        *,
        eps: Optional[Sequence[Fraction]] = None,
        monomials: Optional[Sequence[Sequence[ComplexRational]]] = None,
        degree_caps: Optional[Sequence[int]] = None,
        grid_density: int = DEFAULT_GRID_DENSITY,
        precision_bits: int = DEFAULT_PRECISION_BITS,
    ) -> "StagePlan":
        if monomials is None:
            monomials = list(itertools.islice(enumerate_polynomials(), stages))
        monomials = tuple(tuple(ComplexRational.of(c) for c in coeffs) for coeffs in monomials[:stages])
        if len(monomials) < stages:
            raise PlanError(f"{stages} stages need {stages} polynomials, got {len(monomials)}")
        polys = tuple(ComplexPolynomial.from_monomials(coeffs, precision_bits) for coeffs in monomials)
        return cls(
            radix=radix,
            polys=polys,
            eps=(
                tuple(Fraction(e) for e in eps[:stages]) if eps
                else tuple(default_eps(n) for n in range(1, stages + 1))
            ),
            degree_caps=tuple(degree_caps[:stages]) if degree_caps else tuple([DEFAULT_DEGREE_CAP] * stages),
            grid_density=grid_density,
            precision_bits=precision_bits,
            monomials=monomials,
        )

    def squares(self, n: int) -> list[tuple[tuple[int, int], Rect]]:
        """K_{n-1,ij} for every tile (i, j) of S_n, (0, 0) first."""
        if n < 2:
            return []
        r_prev = self.radix.modulus(n - 1)
        r_n = self.radix.radix(n)
        return [((i, j), margins(n, r_prev, i, j)) for i in range(r_n) for j in range(r_n)]

    def to_record(self) -> dict:
        return {
            "radix": self.radix.to_record(),
            "stages": self.stages,
            "eps": [format_fraction(e) for e in self.eps[: self.stages]],
            "degree_caps": list(self.degree_caps[: self.stages]),
            "grid_density": self.grid_density,
            "precision_bits": self.precision_bits,
            "monomials": [[c.to_record() for c in coeffs] for coeffs in self.monomials],
        }


def uncovered_area(plan: StagePlan, n: int) -> tuple[Fraction, Fraction]:
    """Exact area of S_n outside the K-squares, and the margin bound r_n²·4·R_{n-1}·10^-(n-1)."""
    if n < 2:
        return Fraction(0), Fraction(0)
    r_n = plan.radix.radix(n)
    r_prev = plan.radix.modulus(n - 1)
    side = r_prev - 2 * margin_width(n)
    area = Fraction(plan.radix.modulus(n)) ** 2 - r_n * r_n * side * side
    bound = r_n * r_n * 4 * r_prev * margin_width(n)
    return area, bound


def chain_translation(plan: StagePlan, k: int, n: int) -> ComplexRational:
    """Where the stage-k square sits at stage n: tile (1, 0) at every later stage."""
    if not 1 <= k <= n <= plan.stages:
        raise PlanError(f"need 1 <= k <= n <= {plan.stages}, got k={k}, n={n}")
    return ComplexRational(sum((Fraction(plan.radix.modulus(m)) for m in range(k, n)), Fraction(0)))
