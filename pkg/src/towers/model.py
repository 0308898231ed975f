"""Free R^{2d} actions carrying nested towers.

Two instantiations share the ``ActionModel`` protocol:

* ``SolenoidActionModel``: translation on a finite-depth solenoid, with the
  kernels B_n of the level projections as tower bases. Everything is exact and
  S_nB_n is the whole group.
* ``SampledActionModel``: the suspension of a free Z^{2d} rotation of the
  circle. A state is (u, θ, m) with u ∈ [0,1)^{2d} the flow coordinate and
  θ + m·α the circle coordinate, so the group law is exact while tower
  membership is decided numerically. Towers are built top-down: a short base
  interval at level N is cut into pieces, and every lower level keeps the
  lattice copies of S_n inside the level above except a seeded random subset,
  which differs from piece to piece.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Optional, Protocol, Sequence

import numpy as np

from shared.constants import MAX_LATTICE_SCAN
from shared.exact import RationalLike, fraction_tuple
from shared.logging import get_logger
from solenoid import HaarSampler, RadixSequence, SolenoidPoint, in_kernel, kernel_projection, translate
from towers.tower import TowerData, TowerParameterError, Vector

logger = get_logger("towers.model")

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class ActionModel(Protocol):
    name: str
    exact: bool
    tower: TowerData

    @property
    def dim(self) -> int: ...

    def apply(self, z: Sequence[RationalLike], x: Any) -> Any: ...

    def encode(self, x: Any) -> tuple: ...

    def sample(self, rng: np.random.Generator) -> Any: ...

    def sample_base(self, n: int, rng: np.random.Generator) -> Any: ...

    def tower_coordinates(self, n: int, x: Any) -> Optional[tuple[Vector, Any]]:
        """(z, b) with z ∈ S_n, b ∈ B_n and x = T_z b, or None when x lies outside S_nB_n."""
        ...

    def in_base(self, n: int, x: Any) -> bool: ...

    def base_classes(self, n: int) -> list:
        """One state per class of B_n on which return patterns are constant."""
        ...

    def return_candidates(self, n: int) -> Iterable[tuple[int, ...]]: ...

    def expected_coverage(self, n: int) -> Optional[Fraction]: ...


# ---------------------------------------------------------------------------
# solenoid
# ---------------------------------------------------------------------------

class SolenoidActionModel:
    name = "solenoid"
    exact = True

    def __init__(self, radix: RadixSequence, resolution: int = 64) -> None:
        self.radix = radix
        self.resolution = resolution
        self.tower = TowerData(radix.R, radix.dim, "solenoid")

    @property
    def dim(self) -> int:
        return self.radix.dim

    def apply(self, z: Sequence[RationalLike], x: SolenoidPoint) -> SolenoidPoint:
        return translate(x, z)

    def encode(self, x: SolenoidPoint) -> tuple:
        return x.levels

    def sample(self, rng: np.random.Generator) -> SolenoidPoint:
        seed = int(rng.integers(0, 2**63))
        return HaarSampler(self.radix, self.radix.length, self.resolution, seed).sample()

    def sample_base(self, n: int, rng: np.random.Generator) -> SolenoidPoint:
        return kernel_projection(self.sample(rng), n)

    def tower_coordinates(self, n: int, x: SolenoidPoint) -> tuple[Vector, SolenoidPoint]:
        return x.level(n), kernel_projection(x, n)

    def in_base(self, n: int, x: SolenoidPoint) -> bool:
        return in_kernel(x, n)

    def base_classes(self, n: int) -> list[SolenoidPoint]:
        return [SolenoidPoint.identity(self.radix, self.radix.length)]

    def return_candidates(self, n: int) -> Iterable[tuple[int, ...]]:
        # x ∈ B_n has t_{n-1}(x) = 0, so only multiples of R_{n-1} can land in B_{n-1}
        return self.tower.lattice(n, step=self.tower.side(n - 1))

    def expected_coverage(self, n: int) -> Fraction:
        return Fraction(1)


# ---------------------------------------------------------------------------
# sampled suspension model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowState:
    u: tuple[Fraction, ...]
    theta: Fraction
    winding: tuple[int, ...]


def rotation_vector(dim: int) -> np.ndarray:
    """Fractional parts of √p for the first ``dim`` primes; 1 and these are rationally independent."""
    if dim > len(_PRIMES):
        raise TowerParameterError(f"no rotation vector for dim {dim}")
    return np.sqrt(np.array(_PRIMES[:dim], dtype=float)) % 1.0


def _box_points(low: int, high: int, dim: int) -> np.ndarray:
    count = (high - low) ** dim
    if count > MAX_LATTICE_SCAN:
        raise TowerParameterError(f"lattice scan of {count} points exceeds the limit {MAX_LATTICE_SCAN}")
    return np.array(list(itertools.product(range(low, high), repeat=dim)), dtype=np.int64)


class SampledActionModel:
    name = "sampled"
    exact = False

    def __init__(
        self,
        a: Sequence[int],
        dim: int = 2,
        pieces: int = 4,
        omit: Fraction = Fraction(1, 4),
        seed: int = 0,
        resolution: int = 2**16,
    ) -> None:
        if pieces < 1:
            raise TowerParameterError("pieces must be >= 1")
        if not 0 <= omit < 1:
            raise TowerParameterError("omit rate must lie in [0, 1)")
        self.tower = TowerData(tuple(a), dim, "supplied")
        self.pieces = pieces
        self.omit = Fraction(omit)
        self.seed = seed
        self.resolution = resolution
        self.alpha = rotation_vector(dim)

        top = self.tower.side(self.tower.depth)
        differences = _box_points(-top + 1, top, dim)
        values = (differences @ self.alpha) % 1.0
        nonzero = np.any(differences != 0, axis=1)
        gap = float(np.min(np.minimum(values, 1.0 - values)[nonzero]))
        self.ell = Fraction(gap * 0.999)
        self._top_points = _box_points(0, top, dim)
        self._top_phase = self._top_points @ self.alpha
        self._copies = self._build_copies()
        logger.info(
            "sampled_model_ready",
            extra={"extra": {"a": list(self.tower.a), "dim": dim, "base_length": float(self.ell),
                             "copies": {n: sum(len(c) for c in self._copies[n]) for n in self._copies}}},
        )

    def _build_copies(self) -> dict[int, list[frozenset]]:
        depth = self.tower.depth
        zero = tuple(0 for _ in range(self.dim))
        copies: dict[int, list[frozenset]] = {depth: [frozenset({zero}) for _ in range(self.pieces)]}
        for n in range(depth - 1, 0, -1):
            step, parent_side = self.tower.side(n), self.tower.side(n + 1)
            level = []
            for p in range(self.pieces):
                rng = np.random.default_rng([self.seed, n, p])
                kept = set()
                for parent in sorted(copies[n + 1][p]):
                    for offset in itertools.product(range(0, parent_side, step), repeat=self.dim):
                        if rng.random() >= float(self.omit):
                            kept.add(tuple(c + o for c, o in zip(parent, offset)))
                level.append(frozenset(kept))
            copies[n] = level
        return copies

    @property
    def dim(self) -> int:
        return self.tower.dim

    def _piece(self, theta_b: float) -> int:
        return min(self.pieces - 1, int(theta_b / float(self.ell) * self.pieces))

    def apply(self, z: Sequence[RationalLike], x: FlowState) -> FlowState:
        shift = fraction_tuple(z)
        if len(shift) != self.dim:
            raise ValueError(f"translation has {len(shift)} coordinates, expected {self.dim}")
        moved = [u + s for u, s in zip(x.u, shift)]
        whole = [v.numerator // v.denominator for v in moved]
        return FlowState(
            tuple(v - w for v, w in zip(moved, whole)),
            x.theta,
            tuple(m + w for m, w in zip(x.winding, whole)),
        )

    def encode(self, x: FlowState) -> tuple:
        return (x.u, x.theta, x.winding)

    def sample(self, rng: np.random.Generator) -> FlowState:
        ticks = rng.integers(0, self.resolution, size=self.dim)
        theta = Fraction(int(rng.integers(0, 2**32)), 2**32)
        return FlowState(tuple(Fraction(int(t), self.resolution) for t in ticks), theta, (0,) * self.dim)

    def _state(self, piece: int, position: Fraction, corner: tuple[int, ...]) -> FlowState:
        theta = self.ell * (piece + position) / self.pieces
        return FlowState((Fraction(0),) * self.dim, theta, corner)

    def sample_base(self, n: int, rng: np.random.Generator) -> FlowState:
        classes = [(p, c) for p in range(self.pieces) for c in sorted(self._copies[n][p])]
        p, corner = classes[int(rng.integers(0, len(classes)))]
        return self._state(p, Fraction(int(rng.integers(0, 2**32)), 2**32), corner)

    def tower_coordinates(self, n: int, x: FlowState) -> Optional[tuple[Vector, FlowState]]:
        theta = (float(x.theta) + float(np.dot(x.winding, self.alpha))) % 1.0
        base_phase = (theta - self._top_phase) % 1.0
        hits = np.flatnonzero(base_phase < float(self.ell))
        if hits.size == 0:
            return None
        if hits.size > 1:
            raise TowerParameterError("top-level translates of the base overlap")
        index = int(hits[0])
        s = tuple(int(v) for v in self._top_points[index])
        side = self.tower.side(n)
        corner = tuple(side * (v // side) for v in s)
        if corner not in self._copies[n][self._piece(float(base_phase[index]))]:
            return None
        z = tuple(Fraction(v - c) + u for v, c, u in zip(s, corner, x.u))
        return z, self.apply(tuple(-v for v in z), x)

    def in_base(self, n: int, x: FlowState) -> bool:
        if any(u != 0 for u in x.u):
            return False
        coords = self.tower_coordinates(n, x)
        return coords is not None and all(v == 0 for v in coords[0])

    def base_classes(self, n: int) -> list[FlowState]:
        return [
            self._state(p, Fraction(1, 2), corner)
            for p in range(self.pieces)
            for corner in sorted(self._copies[n][p])
        ]

    def return_candidates(self, n: int) -> Iterable[tuple[int, ...]]:
        return self.tower.lattice(n)

    def expected_coverage(self, n: int) -> Fraction:
        copies = sum(len(level) for level in self._copies[n])
        return copies * self.tower.side(n) ** self.dim * self.ell / self.pieces
