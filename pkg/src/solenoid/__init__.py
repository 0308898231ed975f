"""Exact arithmetic on finite-depth 2d-dimensional solenoids."""

from solenoid.codec import PointFormatError, dump_point, load_point
from solenoid.point import (
    CompatibilityError,
    SolenoidPoint,
    TileAddress,
    factor,
    in_kernel,
    kernel_projection,
    reconstruct,
    tile_addresses,
    tiles,
    translate,
)
from solenoid.radix import DepthError, InvalidRadixError, RadixSequence, radix_products
from solenoid.sampling import HaarSampler, haar_sample

__all__ = [
    "CompatibilityError",
    "DepthError",
    "HaarSampler",
    "InvalidRadixError",
    "PointFormatError",
    "RadixSequence",
    "SolenoidPoint",
    "TileAddress",
    "dump_point",
    "factor",
    "haar_sample",
    "in_kernel",
    "kernel_projection",
    "load_point",
    "radix_products",
    "reconstruct",
    "tile_addresses",
    "tiles",
    "translate",
]
