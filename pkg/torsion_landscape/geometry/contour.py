import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from matplotlib.path import Path

from torsion_landscape.analytic.field import curvature, radial_derivative
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.utils import InvalidConfigError, LoggableArray

logger = logging.getLogger(__name__)

MIN_CLOSED_VERTICES = 8
BISECTION_STEPS = 48
NEWTON_STEPS = 2

# Cell corners are numbered counterclockwise starting bottom left:
# 0 = (i, j), 1 = (i + 1, j), 2 = (i + 1, j + 1), 3 = (i, j + 1).
# Cell edges are numbered by the corners they join.
EDGE_CORNERS = {0: (0, 1), 1: (1, 2), 2: (3, 2), 3: (0, 3)}

# Case index (bit 3 = corner 0, ..., bit 0 = corner 3) to the joined edges.
# Saddle cases store both pairings, the first one used when the cell center is below the level.
MARCHING_SQUARES_TABLE = {
    0b0001: [(3, 2)],
    0b0010: [(1, 2)],
    0b0011: [(3, 1)],
    0b0100: [(0, 1)],
    0b0101: ([(0, 1), (3, 2)], [(0, 3), (1, 2)]),
    0b0110: [(0, 2)],
    0b0111: [(0, 3)],
    0b1000: [(0, 3)],
    0b1001: [(0, 2)],
    0b1010: ([(0, 3), (1, 2)], [(0, 1), (3, 2)]),
    0b1011: [(0, 1)],
    0b1100: [(3, 1)],
    0b1101: [(1, 2)],
    0b1110: [(3, 2)],
}
SADDLE_CASES = (0b0101, 0b1010)


@dataclass
class Contour:
    """
    Oriented polyline approximating a connected piece of a level curve.
    The superlevel side lies to the left of the direction of traversal,
    so the outer boundary of a bounded superlevel component runs counterclockwise.
    Closed contours do not repeat their first vertex.

    The per-vertex arrays ``grad_norm``, ``curvature`` and ``radial_derivative``
    are filled by :func:`annotate`.
    """

    vertices: np.ndarray
    closed: bool
    level: float
    grad_norm: np.ndarray = field(default=None, repr=False)
    curvature: np.ndarray = field(default=None, repr=False)
    radial_derivative: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.vertices)

    @property
    def x(self) -> np.ndarray:
        return self.vertices[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.vertices[:, 1]

    @property
    def signed_area(self) -> float:
        """Shoelace area, positive for counterclockwise contours (closed contours only)"""
        x, y = self.x, self.y
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def counterclockwise(self) -> bool:
        return self.closed and self.signed_area > 0

    def edge_vectors(self) -> np.ndarray:
        if self.closed:
            return np.roll(self.vertices, -1, axis=0) - self.vertices
        return np.diff(self.vertices, axis=0)

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*self.edge_vectors().T)))

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        return (self.x.min(), self.x.max(), self.y.min(), self.y.max())

    @property
    def diameter(self) -> float:
        xmin, xmax, ymin, ymax = self.bounds
        return float(np.hypot(xmax - xmin, ymax - ymin))

    def path(self) -> Path:
        return Path(self.vertices, closed=self.closed)

    def contains_points(self, points) -> np.ndarray:
        """Point-in-polygon test against the (closed) contour"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.path().contains_points(points)

    def densified(self, spacing: float) -> np.ndarray:
        """All vertices plus linearly interpolated points no further apart than ``spacing``"""
        starts = self.vertices if self.closed else self.vertices[:-1]
        edges = self.edge_vectors()
        counts = np.maximum(np.ceil(np.hypot(*edges.T) / spacing).astype(int), 1)

        pieces = [
            start + np.linspace(0, 1, count, endpoint=False)[:, np.newaxis] * edge
            for start, edge, count in zip(starts, edges, counts)
        ]
        if not self.closed:
            pieces.append(self.vertices[-1:])
        return np.concatenate(pieces)

    def to_frame(self) -> pd.DataFrame:
        """Export as table with the columns x, y, curvature, radial_derivative, grad_norm"""
        missing = np.full(len(self), np.nan)
        return pd.DataFrame(
            {
                "x": self.x,
                "y": self.y,
                "curvature": missing if self.curvature is None else self.curvature,
                "radial_derivative": missing
                if self.radial_derivative is None
                else self.radial_derivative,
                "grad_norm": missing if self.grad_norm is None else self.grad_norm,
            }
        )


def annotate(contour: Contour, field, center_x: float = None) -> Contour:
    """
    Attach |grad u|, the level-curve curvature and the radial derivative
    with respect to ``(center_x, 0)`` to every vertex.
    Raises :class:`DegeneratePointError` if the curvature is undefined at a vertex.
    """
    x, y = contour.x, contour.y
    u_x, u_y = field.gradient(x, y)
    contour.grad_norm = np.hypot(u_x, u_y)
    contour.curvature = np.asarray(curvature(field, x, y))
    contour.radial_derivative = np.asarray(
        radial_derivative(field, x, y, center_x=center_x)
    )
    return contour


def project_to_level(field, points, level: float = 0.0, steps: int = 3) -> np.ndarray:
    """Newton steps along the gradient moving points onto {u = level}"""
    points = np.array(points, dtype=float, ndmin=2)
    for _ in range(steps):
        residual = np.asarray(field.value(points[:, 0], points[:, 1])) - level
        u_x, u_y = (np.asarray(g) for g in field.gradient(points[:, 0], points[:, 1]))
        grad_sq = u_x * u_x + u_y * u_y
        safe = grad_sq > 0
        scale = np.where(safe, residual / np.where(safe, grad_sq, 1.0), 0.0)
        points[:, 0] -= scale * u_x
        points[:, 1] -= scale * u_y
    return points


def _case_indices(values: np.ndarray) -> np.ndarray:
    above = values > 0
    return (
        (above[:-1, :-1].astype(np.uint8) << 3)
        | (above[:-1, 1:].astype(np.uint8) << 2)
        | (above[1:, 1:].astype(np.uint8) << 1)
        | above[1:, :-1].astype(np.uint8)
    )


def _edge_key(row: int, column: int, edge: int) -> Tuple[str, int, int]:
    """Global key of a cell edge: horizontal edges by their left node, vertical by their lower node"""
    if edge == 0:
        return ("h", row, column)
    if edge == 2:
        return ("h", row + 1, column)
    if edge == 3:
        return ("v", row, column)
    return ("v", row, column + 1)


def _edge_nodes(key) -> Tuple[Tuple[int, int], Tuple[int, int]]:
    kind, row, column = key
    if kind == "h":
        return (row, column), (row, column + 1)
    return (row, column), (row + 1, column)


def _polish_crossings(field, level, window, keys, values, refine_tol):
    """
    Locate the level crossing on every listed grid edge:
    linear interpolation, bisection on the exact field, then Newton steps along the edge.
    """
    nodes = np.array([_edge_nodes(key) for key in keys])  # (n, 2, 2) of (row, column)
    rows, columns = nodes[:, :, 0], nodes[:, :, 1]
    start = np.column_stack(
        [window.xmin + columns[:, 0] * window.dx, window.ymin + rows[:, 0] * window.dy]
    )
    stop = np.column_stack(
        [window.xmin + columns[:, 1] * window.dx, window.ymin + rows[:, 1] * window.dy]
    )
    direction = stop - start

    v_start = values[rows[:, 0], columns[:, 0]]
    v_stop = values[rows[:, 1], columns[:, 1]]
    start_above = v_start > 0

    def g(t):
        points = start + t[:, np.newaxis] * direction
        return np.asarray(field.value(points[:, 0], points[:, 1])) - level

    # bracket [low, high] such that the "above" end stays at low
    low = np.zeros(len(keys))
    high = np.ones(len(keys))
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (low + high)
        middle_above = g(middle) > 0
        move_low = middle_above == start_above
        low = np.where(move_low, middle, low)
        high = np.where(move_low, high, middle)

    t = np.clip(v_start / (v_start - v_stop), low, high)
    t = np.where(np.abs(g(t)) < np.abs(g(0.5 * (low + high))), t, 0.5 * (low + high))
    for _ in range(NEWTON_STEPS):
        points = start + t[:, np.newaxis] * direction
        u_x, u_y = field.gradient(points[:, 0], points[:, 1])
        slope = np.asarray(u_x) * direction[:, 0] + np.asarray(u_y) * direction[:, 1]
        residual = g(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            candidate = t - residual / slope
        candidate = np.where(np.isfinite(candidate), candidate, t)
        candidate = np.clip(candidate, low, high)
        t = np.where(np.abs(g(candidate)) <= np.abs(residual), candidate, t)

    points = start + t[:, np.newaxis] * direction
    worst = float(np.max(np.abs(g(t)))) if len(t) else 0.0
    if worst > refine_tol:
        logger.warning(
            f"Level crossing polish reached |u - level| = {worst:.3e} > {refine_tol:.1e}"
        )
    return points


def _cell_segments(field, level, window, values) -> List[Tuple[tuple, tuple]]:
    """Oriented segments (start edge key, end edge key) with the superlevel side on the left"""
    cases = _case_indices(values)
    rows, columns = np.nonzero((cases != 0) & (cases != 15))

    saddle = np.isin(cases[rows, columns], SADDLE_CASES)
    center_above = {}
    if np.any(saddle):
        cx = window.xmin + (columns[saddle] + 0.5) * window.dx
        cy = window.ymin + (rows[saddle] + 0.5) * window.dy
        above = np.asarray(field.value(cx, cy)) - level > 0
        center_above = dict(
            zip(zip(rows[saddle].tolist(), columns[saddle].tolist()), above.tolist())
        )

    corner_offsets = ((0, 0), (0, 1), (1, 1), (1, 0))  # (row, column) offsets
    segments = []
    for row, column in zip(rows.tolist(), columns.tolist()):
        case = int(cases[row, column])
        pairs = MARCHING_SQUARES_TABLE[case]
        if case in SADDLE_CASES:
            pairs = pairs[int(center_above[(row, column)])]

        for first, second in pairs:
            # a segment separates the corners; find one corner strictly on the superlevel side
            if set(EDGE_CORNERS[first]) & set(EDGE_CORNERS[second]):
                (corner,) = set(EDGE_CORNERS[first]) & set(EDGE_CORNERS[second])
            else:
                corner = EDGE_CORNERS[first][0]
            d_row, d_column = corner_offsets[corner]
            corner_above = values[row + d_row, column + d_column] > 0

            # walking from the first to the second edge midpoint, is the corner on the left?
            mid_first = _edge_midpoint(first)
            mid_second = _edge_midpoint(second)
            to_corner = (d_column - mid_first[0], d_row - mid_first[1])
            along = (mid_second[0] - mid_first[0], mid_second[1] - mid_first[1])
            corner_left = along[0] * to_corner[1] - along[1] * to_corner[0] > 0

            key_first = _edge_key(row, column, first)
            key_second = _edge_key(row, column, second)
            if corner_left == corner_above:
                segments.append((key_first, key_second))
            else:
                segments.append((key_second, key_first))
    return segments


def _edge_midpoint(edge: int) -> Tuple[float, float]:
    """Midpoint of a cell edge in unit cell coordinates (x, y)"""
    return {0: (0.5, 0.0), 1: (1.0, 0.5), 2: (0.5, 1.0), 3: (0.0, 0.5)}[edge]


def _chain(segments) -> List[Tuple[List[tuple], bool]]:
    """Join oriented segments sharing edge keys into polylines"""
    successor: Dict[tuple, tuple] = {}
    for start, stop in segments:
        successor[start] = stop
    predecessors = set(successor.values())

    chains = []
    visited = set()
    # open chains start at keys nobody points to
    for start, _ in segments:
        if start in predecessors or start in visited:
            continue
        chain = [start]
        visited.add(start)
        key = start
        while key in successor:
            key = successor[key]
            chain.append(key)
            visited.add(key)
        chains.append((chain, False))

    for start, _ in segments:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        key = successor[start]
        while key != start:
            chain.append(key)
            visited.add(key)
            key = successor[key]
        chains.append((chain, True))
    return chains


def trace_level_set(
    field, level: float, window: GridWindow, values: np.ndarray, refine_tol: float = 1e-9
) -> List[Contour]:
    """
    Marching squares on already sampled ``values`` (``field.value`` on the window nodes).
    See :func:`extract_level_set`.
    """
    if refine_tol <= 0:
        raise InvalidConfigError(f"refine_tol must be positive, got {refine_tol}")

    shifted = values - level
    segments = _cell_segments(field, level, window, shifted)
    if not segments:
        return []

    keys = sorted({key for segment in segments for key in segment})
    points = _polish_crossings(field, level, window, keys, shifted, refine_tol)
    position = {key: points[index] for index, key in enumerate(keys)}

    contours = []
    for chain, closed in _chain(segments):
        vertices = np.array([position[key] for key in chain])
        # vertices can coincide where the level passes exactly through a node
        keep = np.ones(len(vertices), dtype=bool)
        keep[1:] = np.any(vertices[1:] != vertices[:-1], axis=1)
        vertices = vertices[keep]
        if closed and len(vertices) > 1 and np.all(vertices[0] == vertices[-1]):
            vertices = vertices[:-1]

        if closed and len(vertices) < MIN_CLOSED_VERTICES:
            logger.debug(f"Dropping under-resolved closed contour of {len(vertices)} vertices")
            continue
        contours.append(Contour(vertices=vertices, closed=closed, level=level))

    for contour in contours:
        logger.debug(f"Traced {LoggableArray(contour)}")
    return contours


def extract_level_set(
    field, level: float, window: GridWindow, refine_tol: float = 1e-9
) -> List[Contour]:
    """
    Trace all components of {u = level} crossing the window.

    The window is sampled, every cell with a sign change contributes one or two
    segments (saddle cells are resolved by the exact field value at the cell center),
    segments are joined through shared grid edges and every vertex is polished
    onto the level set along its grid edge to ``|u - level| <= refine_tol``.
    Curves leaving the window are returned as open contours.

    Args:
        field: any field with ``value`` and ``gradient`` methods
        level (:obj:`float`): the level to trace
        window (:class:`GridWindow`): where to sample
        refine_tol (:obj:`float`): tolerance of the vertex polish

    Returns:
        :obj:`list` of :class:`Contour`, oriented with the superlevel side on the left
    """
    values = window.sample(field)
    return trace_level_set(field, level, window, values, refine_tol=refine_tol)
