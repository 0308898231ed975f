"""SVG pictures of decompositions: input cubes, grid cells, removed strips, U boxes and retained sub-cubes.

Higher-dimensional results are drawn as the shadow on two chosen axes.
Every drawn element carries a gid, so the SVG can be checked structurally.
"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from polyconvex import Box, DecompositionResult, grid_incidence  # noqa: E402
from polyconvex.codec import result_from_record  # noqa: E402
from polyconvex.cubes import grid_box  # noqa: E402
from shared.artifacts import read_artifact  # noqa: E402
from shared.constants import TOOL_NAME  # noqa: E402
from shared.logging import get_logger  # noqa: E402

logger = get_logger("cli.plot")

_COLORS = {
    "cube": "#1f4e79",
    "grid": "#9e9e9e",
    "strip": "#000000",
    "ubox": "#8fbc8f",
    "retained": "#d2691e",
}


class PlotParameterError(ValueError):
    pass


@dataclass(frozen=True)
class PlotSummary:
    path: str
    projection: tuple[int, int]
    cubes: int
    grid_cells: int
    strips: int
    boxes: int
    retained: int

    def to_record(self) -> dict:
        return {
            "path": self.path,
            "projection": list(self.projection),
            "cubes": self.cubes,
            "grid_cells": self.grid_cells,
            "strips": self.strips,
            "boxes": self.boxes,
            "retained": self.retained,
        }


Shadow = tuple[Fraction, Fraction, Fraction, Fraction]


def _shadow(box: Box, axes: tuple[int, int]) -> Shadow:
    (x0, x1), (y0, y1) = box.project(axes).intervals
    return x0, x1, y0, y1


def _unique(shadows: Sequence[Shadow]) -> list[Shadow]:
    return sorted(set(shadows))


def _projection(dim: int, projection: Optional[Sequence[int]]) -> tuple[int, int]:
    if projection is None:
        if dim > 2:
            raise PlotParameterError(f"a {dim}-dimensional result needs two projection axes")
        return 1, 2
    axes = tuple(int(a) for a in projection)
    if len(axes) != 2 or axes[0] == axes[1] or not all(1 <= a <= dim for a in axes):
        raise PlotParameterError(f"projection {list(projection)} must name two distinct axes in 1..{dim}")
    return axes


def _draw(ax, shadows: Sequence[Shadow], kind: str, **style) -> None:
    for i, (x0, x1, y0, y1) in enumerate(shadows):
        patch = Rectangle((float(x0), float(y0)), float(x1 - x0), float(y1 - y0), **style)
        patch.set_gid(f"{kind}-{i}")
        ax.add_patch(patch)


def load_decomposition(path: Union[str, pathlib.Path]) -> DecompositionResult:
    """The result stored in a decomposition.json written by the decompose-cubes pipeline."""
    record = read_artifact(pathlib.Path(path), "decomposition.schema.json")
    return result_from_record(record["result"])


def plot_decomposition(
    result: Union[DecompositionResult, str, pathlib.Path],
    path: pathlib.Path,
    projection: Optional[Sequence[int]] = None,
) -> PlotSummary:
    """Draw ``result``, or the result stored in a decomposition.json at that path."""
    if not isinstance(result, DecompositionResult):
        result = load_decomposition(result)
    if not result.cubes or not result.boxes:
        raise PlotParameterError("nothing to draw: the decomposition has no cubes or no boxes")
    axes = _projection(result.dim, projection)

    cubes = _unique([_shadow(cube.box(), axes) for cube in result.cubes])
    grid = _unique([_shadow(grid_box(key), axes) for key in grid_incidence(result.cubes)])
    boxes = _unique([_shadow(box, axes) for box in result.boxes])
    retained = _unique([_shadow(entry.box, axes) for entry in result.retained])
    x_lo = min(s[0] for s in grid)
    x_hi = max(s[1] for s in grid)
    y_lo = min(s[2] for s in grid)
    y_hi = max(s[3] for s in grid)
    strips: list[Shadow] = []
    for strip in result.strips:
        lo, hi = strip.center - strip.half_width, strip.center + strip.half_width
        if strip.axis == axes[0]:
            strips.append((lo, hi, y_lo, y_hi))
        elif strip.axis == axes[1]:
            strips.append((x_lo, x_hi, lo, hi))
    strips = _unique(strips)

    with plt.rc_context({"svg.hashsalt": TOOL_NAME, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 6))
        _draw(ax, grid, "grid", fill=False, edgecolor=_COLORS["grid"], linestyle="--", linewidth=0.6)
        _draw(ax, boxes, "ubox", facecolor=_COLORS["ubox"], edgecolor="none", alpha=0.6)
        _draw(ax, retained, "retained", fill=False, edgecolor=_COLORS["retained"], hatch="//", linewidth=0.4)
        _draw(ax, cubes, "cube", fill=False, edgecolor=_COLORS["cube"], linewidth=1.2)
        # strips are a few δ wide, so they are drawn with a visible minimum line width
        _draw(ax, strips, "strip", facecolor=_COLORS["strip"], edgecolor=_COLORS["strip"], linewidth=1.5)
        ax.set_xlim(float(x_lo) - 0.25, float(x_hi) + 0.25)
        ax.set_ylim(float(y_lo) - 0.25, float(y_hi) + 0.25)
        ax.set_aspect("equal")
        ax.set_xlabel(f"x{axes[0]}")
        ax.set_ylabel(f"x{axes[1]}")
        ax.set_title(f"{len(result.cubes)} cubes, delta = {result.delta}")
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    summary = PlotSummary(str(path), axes, len(cubes), len(grid), len(strips), len(boxes), len(retained))
    logger.info("decomposition_plotted", extra={"extra": summary.to_record()})
    return summary
