import logging
from dataclasses import dataclass, replace
from typing import Tuple

import dask.array as da
import numpy as np

from torsion_landscape.utils import InvalidConfigError, LoggableArray

logger = logging.getLogger(__name__)

MIN_CELLS = 16
ROWS_PER_CHUNK = 64


@dataclass(frozen=True)
class GridWindow:
    """
    Axis-aligned sampling window.
    ``nx`` and ``ny`` count cells, so a window is sampled on
    ``(ny + 1) x (nx + 1)`` nodes including its edges.
    Sampled arrays are indexed ``[row, column]``, i.e. ``[y, x]``.
    """

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int = 2048
    ny: int = 512

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidConfigError(
                f"Degenerate window [{self.xmin}, {self.xmax}] x [{self.ymin}, {self.ymax}]"
            )
        if self.nx < MIN_CELLS or self.ny < MIN_CELLS:
            raise InvalidConfigError(
                f"Window resolution {self.nx} x {self.ny} is below {MIN_CELLS} x {MIN_CELLS}"
            )

    @classmethod
    def for_prediction(
        cls,
        prediction,
        nx: int = 2048,
        ny: int = 512,
        inflate: float = 0.05,
        span: Tuple[float, float] = None,
        margin: float = 1.0,
    ) -> "GridWindow":
        """
        The rectangle of the prediction, inflated by ``inflate`` on every side.
        If ``span`` is given, the window is widened to cover
        ``[span[0] - margin, span[1] + margin]`` horizontally.
        """
        xmin, xmax, ymin, ymax = prediction.rect
        if span is not None:
            xmin = min(xmin, span[0] - margin)
            xmax = max(xmax, span[1] + margin)
        half_x = 0.5 * (xmax - xmin) * (1 + inflate)
        half_y = 0.5 * (ymax - ymin) * (1 + inflate)
        cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
        return cls(cx - half_x, cx + half_x, cy - half_y, cy + half_y, nx=nx, ny=ny)

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.dx, self.dy))

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.nx + 1)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.ymin, self.ymax, self.ny + 1)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny + 1, self.nx + 1)

    def doubled(self) -> "GridWindow":
        return replace(self, nx=2 * self.nx, ny=2 * self.ny)

    def with_resolution(self, nx: int, ny: int) -> "GridWindow":
        return replace(self, nx=nx, ny=ny)

    def contains(self, rect: Tuple[float, float, float, float]) -> bool:
        xmin, xmax, ymin, ymax = rect
        return (
            self.xmin <= xmin and xmax <= self.xmax and self.ymin <= ymin and ymax <= self.ymax
        )

    def nearest_node(self, x: float, y: float) -> Tuple[int, int]:
        """(row, column) of the node closest to (x, y), clipped to the window"""
        column = int(np.clip(np.rint((x - self.xmin) / self.dx), 0, self.nx))
        row = int(np.clip(np.rint((y - self.ymin) / self.dy), 0, self.ny))
        return row, column

    def node(self, row: int, column: int) -> Tuple[float, float]:
        return (self.xmin + column * self.dx, self.ymin + row * self.dy)

    def sample(self, field, rows_per_chunk: int = ROWS_PER_CHUNK) -> np.ndarray:
        """
        Evaluate ``field.value`` on all nodes.
        The rows are split into dask chunks which are evaluated on the
        threaded scheduler and concatenated in row order.
        """
        xs = self.xs
        ys = da.from_array(self.ys, chunks=rows_per_chunk)

        def sample_rows(y_block):
            return np.asarray(field.value(xs[np.newaxis, :], y_block[:, np.newaxis]))

        values = ys.map_blocks(
            sample_rows,
            new_axis=1,
            chunks=(ys.chunks[0], (len(xs),)),
            dtype=float,
        ).compute(scheduler="threads")

        logger.debug(f"Sampled {type(field).__name__}: {LoggableArray(values)}")
        return values

    def to_dict(self):
        return {
            "xmin": float(self.xmin),
            "xmax": float(self.xmax),
            "ymin": float(self.ymin),
            "ymax": float(self.ymax),
            "nx": int(self.nx),
            "ny": int(self.ny),
        }
