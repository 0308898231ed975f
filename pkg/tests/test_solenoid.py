from __future__ import annotations

import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solenoid import (
    CompatibilityError,
    DepthError,
    HaarSampler,
    InvalidRadixError,
    PointFormatError,
    SolenoidPoint,
    dump_point,
    factor,
    haar_sample,
    in_kernel,
    kernel_projection,
    load_point,
    radix_products,
    reconstruct,
    tile_addresses,
    tiles,
    translate,
)

# ---------------------------------------------------------------------------
# radix_products
# ---------------------------------------------------------------------------


def test_radix_products_cumulative() -> None:
    assert radix_products([2, 3]).R == (2, 6)
    assert radix_products([2, 2, 2]).R == (2, 4, 8)


def test_radix_products_sum_inv_and_modulus_zero() -> None:
    seq = radix_products([2, 3])
    assert seq.sum_inv == F(5, 6)
    assert seq.modulus(0) == 1
    assert seq.modulus(2) == 6


def test_radix_products_rejects_small_entry() -> None:
    with pytest.raises(InvalidRadixError):
        radix_products([2, 1])


def test_radix_products_rejects_fractional_entries_instead_of_truncating() -> None:
    with pytest.raises(InvalidRadixError, match="must be integers"):
        radix_products([2, F(5, 2)])
    assert radix_products([F(4, 2), "3"]).R == (2, 6)


def test_radix_products_rejects_empty_and_odd_dim() -> None:
    with pytest.raises(InvalidRadixError):
        radix_products([])
    with pytest.raises(InvalidRadixError):
        radix_products([2], dim=3)


# ---------------------------------------------------------------------------
# points and translation
# ---------------------------------------------------------------------------


def _point_2_2() -> SolenoidPoint:
    seq = radix_products([2, 2])
    return SolenoidPoint(seq, ((F(3, 2), F(3, 2)), (F(3, 2), F(3, 2))))


def test_point_rejects_incompatible_levels() -> None:
    seq = radix_products([2, 2])
    with pytest.raises(CompatibilityError):
        SolenoidPoint(seq, ((F(1), F(0)), (F(2), F(0))))


def test_point_rejects_out_of_range_coordinate() -> None:
    seq = radix_products([2, 2])
    with pytest.raises(CompatibilityError):
        SolenoidPoint(seq, ((F(2), F(0)),))


def test_translate_hand_computation() -> None:
    moved = translate(_point_2_2(), (1, 0))
    assert moved.level(1) == (F(1, 2), F(3, 2))
    assert moved.level(2) == (F(5, 2), F(3, 2))


def test_translate_by_zero_is_identity() -> None:
    p = _point_2_2()
    assert translate(p, (0, 0)) == p


def test_translate_rejects_wrong_length() -> None:
    with pytest.raises(ValueError):
        translate(_point_2_2(), (1,))


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10_000),
    u=st.tuples(st.fractions(min_value=-20, max_value=20), st.fractions(min_value=-20, max_value=20)),
    v=st.tuples(st.fractions(min_value=-20, max_value=20), st.fractions(min_value=-20, max_value=20)),
)
def test_translate_is_a_group_action(seed: int, u: tuple, v: tuple) -> None:
    p = haar_sample(radix_products([2, 3, 2]), 3, 4, seed)
    combined = tuple(a + b for a, b in zip(u, v))
    assert translate(translate(p, u), v) == translate(p, combined)
    for n in range(1, 4):
        expected = tuple((t + s) % p.radix.modulus(n) for t, s in zip(p.level(n), u))
        assert translate(p, u).level(n) == expected


# ---------------------------------------------------------------------------
# factor / reconstruct / tiles
# ---------------------------------------------------------------------------


def test_factor_at_top_level_has_no_indices() -> None:
    p = haar_sample(radix_products([2, 2, 2]), 3, 3, seed=1)
    offset, indices = factor(p, 3)
    assert indices == []
    assert offset == p.level(3)


def test_factor_out_of_range() -> None:
    p = haar_sample(radix_products([2, 2]), 2, 3, seed=1)
    with pytest.raises(DepthError):
        factor(p, 3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), n=st.integers(min_value=1, max_value=3))
def test_factor_reconstruct_round_trip(seed: int, n: int) -> None:
    seq = radix_products([3, 2, 2])
    p = haar_sample(seq, 3, 5, seed)
    offset, indices = factor(p, n)
    assert reconstruct(seq, n, offset, indices) == p


def test_factor_of_translate_moves_offset() -> None:
    p = haar_sample(radix_products([2, 2, 2]), 3, 4, seed=7)
    v = (F(5, 4), F(-3))
    offset, _ = factor(translate(p, v), 2)
    assert offset == tuple((t + s) % 4 for t, s in zip(p.level(2), v))


def test_tile_addresses_reconstruct_each_level() -> None:
    p = haar_sample(radix_products([2, 3, 2]), 3, 2, seed=3)
    for address in tile_addresses(p):
        assert address.lift(p.radix) == p.level(address.level + 1)


def test_tiles_partition_next_level() -> None:
    seq = radix_products([2, 3])
    boxes = tiles(seq, 1)
    assert len(boxes) == 3 ** 2
    volume = sum((upper[0] - lower[0]) * (upper[1] - lower[1]) for _, lower, upper in boxes)
    assert volume == F(6 * 6)
    corners = {lower for _, lower, _ in boxes}
    assert len(corners) == len(boxes)
    assert all(0 <= c and c + 2 <= 6 for _, lower, _ in boxes for c in lower)


def test_kernel_projection_lands_in_kernel() -> None:
    p = haar_sample(radix_products([2, 2, 2]), 3, 4, seed=11)
    fiber = kernel_projection(p, 2)
    assert in_kernel(fiber, 2)
    assert in_kernel(fiber, 1)
    assert translate(fiber, p.level(2)) == p


# ---------------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------------


def test_haar_sample_is_deterministic() -> None:
    seq = radix_products([2, 2, 2])
    assert haar_sample(seq, 3, 8, 42) == haar_sample(seq, 3, 8, 42)


def test_haar_sample_depth_error() -> None:
    with pytest.raises(DepthError):
        haar_sample(radix_products([2, 2]), 3, 8, 0)


def test_level_two_tiles_are_uniform() -> None:
    seq = radix_products([2, 2])
    samples = HaarSampler(seq, 2, 4, seed=2024).sample_many(10_000)
    counts: dict[tuple[int, int], int] = {}
    for p in samples:
        _, indices = factor(p, 1)
        counts[indices[0]] = counts.get(indices[0], 0) + 1
    assert len(counts) == 4
    sigma = math.sqrt(10_000 * 0.25 * 0.75)
    for count in counts.values():
        assert abs(count - 2500) <= 3 * sigma


def test_offset_frequency_matches_volume() -> None:
    seq = radix_products([2, 2])
    samples = HaarSampler(seq, 2, 8, seed=99).sample_many(1000)
    # A = [0, 1) x [0, 2) inside S_2 = [0, 4)^2 has relative volume 1/8
    hits = sum(1 for p in samples if p.level(2)[0] < 1 and p.level(2)[1] < 2)
    sigma = math.sqrt(1000 * (1 / 8) * (7 / 8))
    assert abs(hits - 125) <= 3 * sigma


# ---------------------------------------------------------------------------
# text codec
# ---------------------------------------------------------------------------


def test_point_text_round_trip() -> None:
    p = haar_sample(radix_products([2, 3, 2], dim=4), 3, 7, seed=5)
    text = dump_point(p)
    assert load_point(text) == p
    assert dump_point(load_point(text)) == text


def test_point_text_rejects_incompatible_levels() -> None:
    text = "dense-orbits-point 1\nradix 2 2\ndim 2\ndepth 2\nlevel 1 1 0\nlevel 2 2 0\n"
    with pytest.raises(PointFormatError):
        load_point(text)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "other-format 1\nradix 2\ndim 2\ndepth 1\nlevel 1 0 0\n",
        "dense-orbits-point 1\nradix 2\ndim 2\ndepth 2\nlevel 1 0 0\n",
        "dense-orbits-point 1\nradix 2\ndim 2\ndepth 1\nlevel 1 0 x\n",
    ],
)
def test_point_text_rejects_malformed(text: str) -> None:
    with pytest.raises(PointFormatError):
        load_point(text)
