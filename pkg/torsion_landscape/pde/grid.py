import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse

from torsion_landscape.geometry.domain import DomainExtract, label_component, touches_edge
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.utils import EnclosureError, ResolutionError

logger = logging.getLogger(__name__)

MIN_NODES_ACROSS = 16
ARM_BISECTION_STEPS = 60

# (column, row) offsets of the east, west, north and south neighbours
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class IrregularGrid:
    """
    Interior nodes of a square lattice inside the domain, with the
    Shortley-Weller arms towards the boundary.

    ``neighbours[n, d]`` is the index of the neighbour of node ``n`` in direction ``d``
    (east, west, north, south) or -1 if that lattice point is not interior;
    ``arms[n, d]`` is the distance to the neighbour or to the boundary crossing
    in units of the spacing, in (0, 1]; ``boundary_values[n, d]`` the Dirichlet
    value there (0 on the level curve).
    """

    spacing: float
    origin: Tuple[float, float]
    shape: Tuple[int, int]
    rows: np.ndarray
    columns: np.ndarray
    neighbours: np.ndarray
    arms: np.ndarray
    boundary_values: np.ndarray
    index_map: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.rows)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.columns * self.spacing

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.rows * self.spacing

    @cached_property
    def laplacian(self) -> Tuple[sparse.csr_matrix, np.ndarray]:
        """
        The Shortley-Weller discretisation of -Delta as sparse matrix ``A``
        together with the boundary contribution ``c``: the discrete problem
        -Delta u = g reads ``A u = g + c``.
        """
        h = self.spacing * self.arms
        h_east, h_west, h_north, h_south = h.T

        coefficients = np.column_stack(
            [
                -2.0 / (h_east * (h_east + h_west)),
                -2.0 / (h_west * (h_east + h_west)),
                -2.0 / (h_north * (h_north + h_south)),
                -2.0 / (h_south * (h_north + h_south)),
            ]
        )
        diagonal = 2.0 / (h_east * h_west) + 2.0 / (h_north * h_south)

        interior = self.neighbours >= 0
        node_index = np.repeat(np.arange(len(self))[:, np.newaxis], 4, axis=1)

        rows = np.concatenate([np.arange(len(self)), node_index[interior]])
        cols = np.concatenate([np.arange(len(self)), self.neighbours[interior]])
        data = np.concatenate([diagonal, coefficients[interior]])
        matrix = sparse.csr_matrix((data, (rows, cols)), shape=(len(self), len(self)))

        contribution = -np.sum(
            np.where(interior, 0.0, coefficients * self.boundary_values), axis=1
        )
        return matrix, contribution

    def to_raster(self, values: np.ndarray) -> np.ndarray:
        """Values on the full lattice (rows bottom to top), NaN outside the domain"""
        raster = np.full(self.shape, np.nan)
        raster[self.rows, self.columns] = values
        return raster


@dataclass
class DiscreteField:
    """Values of a discrete solution on the interior nodes of ``grid``"""

    grid: IrregularGrid
    values: np.ndarray
    residual: float = 0.0

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def error_against(self, exact_field) -> float:
        """sup-norm distance to an exact field over the interior nodes"""
        exact = np.asarray(exact_field.value(self.grid.x, self.grid.y))
        return float(np.max(np.abs(self.values - exact)))

    def forward_differences(self) -> np.ndarray:
        """Forward differences towards interior east and north neighbours"""
        grid = self.grid
        differences = []
        for direction in (0, 2):
            neighbours = grid.neighbours[:, direction]
            interior = neighbours >= 0
            differences.append(
                (self.values[neighbours[interior]] - self.values[interior]) / grid.spacing
            )
        return np.concatenate(differences)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.grid.x, "y": self.grid.y, "value": self.values})

    def to_raster(self) -> np.ndarray:
        return self.grid.to_raster(self.values)


def _lattice_window(window: GridWindow, anchor, spacing: float):
    """A window whose nodes form a lattice of the given spacing through the anchor"""
    ax, ay = anchor
    x0 = ax - spacing * np.floor((ax - window.xmin) / spacing)
    y0 = ay - spacing * np.floor((ay - window.ymin) / spacing)
    columns = int(np.floor((window.xmax - x0) / spacing)) + 1
    rows = int(np.floor((window.ymax - y0) / spacing)) + 1
    return (x0, y0), (rows, columns)


def _locate_crossings(field, start: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Bisection for u(start + s direction) = 0, s in (0, 1], with u > 0 at s = 0 and u <= 0 at s = 1"""
    low = np.zeros(len(start))
    high = np.ones(len(start))
    for _ in range(ARM_BISECTION_STEPS):
        middle = 0.5 * (low + high)
        points = start + middle[:, np.newaxis] * direction
        positive = np.asarray(field.value(points[:, 0], points[:, 1])) > 0
        low = np.where(positive, middle, low)
        high = np.where(positive, high, middle)
    return 0.5 * (low + high)


def build_grid(
    domain: Union[DomainExtract, GridWindow],
    field,
    spacing: float,
    exterior_value: Optional[Callable] = None,
) -> IrregularGrid:
    """
    Lay a square lattice of the given spacing through the anchor of the field
    and keep the nodes of the component of {u > 0} containing the anchor.
    Arms towards the boundary are found by bisection on the exact field along
    the lattice lines, not from the traced contour.

    Args:
        domain: the extracted domain (its window is used) or a bare :class:`GridWindow`
        field: the exact field whose zero level set is the boundary
        spacing (:obj:`float`): lattice spacing
        exterior_value (:obj:`callable`): Dirichlet data ``g(x, y)`` for neighbours beyond
            the window; without it, the domain must not reach the window edge

    Raises:
        :class:`ResolutionError`: fewer than 16 nodes across the narrower extent of the domain
        :class:`EnclosureError`: the domain leaves the window and no exterior data is given
    """
    window = domain.window if isinstance(domain, DomainExtract) else domain
    anchor = tuple(float(c) for c in field.anchor)
    (x0, y0), (n_rows, n_columns) = _lattice_window(window, anchor, spacing)
    if min(n_rows, n_columns) <= MIN_NODES_ACROSS:
        raise ResolutionError(
            f"Spacing {spacing} leaves only {n_rows} x {n_columns} lattice points in the window"
        )

    lattice = GridWindow(
        x0,
        x0 + (n_columns - 1) * spacing,
        y0,
        y0 + (n_rows - 1) * spacing,
        nx=n_columns - 1,
        ny=n_rows - 1,
    )
    values = lattice.sample(field)
    mask = label_component(values > 0, *lattice.nearest_node(*anchor))
    if not mask.any():
        raise ResolutionError(f"No lattice node of spacing {spacing} is inside the domain")
    if touches_edge(mask) and exterior_value is None:
        raise EnclosureError("The domain reaches the edge of the lattice window")

    rows, columns = np.nonzero(mask)
    across = min(np.ptp(rows) + 1, np.ptp(columns) + 1)
    if across < MIN_NODES_ACROSS:
        raise ResolutionError(
            f"Spacing {spacing} resolves the domain with only {across} nodes across"
        )

    index_map = np.full(mask.shape, -1, dtype=int)
    index_map[rows, columns] = np.arange(len(rows))

    n = len(rows)
    neighbours = np.full((n, 4), -1, dtype=int)
    arms = np.ones((n, 4))
    boundary_values = np.zeros((n, 4))
    x = x0 + columns * spacing
    y = y0 + rows * spacing

    for d, (dc, dr) in enumerate(DIRECTIONS):
        r, c = rows + dr, columns + dc
        in_lattice = (r >= 0) & (r < n_rows) & (c >= 0) & (c < n_columns)
        neighbour = np.full(n, -1, dtype=int)
        neighbour[in_lattice] = index_map[r[in_lattice], c[in_lattice]]
        neighbours[:, d] = neighbour

        # neighbours beyond the window but still inside {u > 0} take the exterior data
        exterior = np.zeros(n, dtype=bool)
        beyond = ~in_lattice
        if beyond.any():
            gx, gy = x[beyond] + dc * spacing, y[beyond] + dr * spacing
            positive = np.asarray(field.value(gx, gy)) > 0
            exterior[np.nonzero(beyond)[0][positive]] = True
            if positive.any():
                boundary_values[exterior, d] = exterior_value(gx[positive], gy[positive])

        crossing = (neighbour < 0) & ~exterior
        if crossing.any():
            start = np.column_stack([x[crossing], y[crossing]])
            direction = np.tile([dc * spacing, dr * spacing], (int(crossing.sum()), 1))
            arms[crossing, d] = _locate_crossings(field, start, direction)

    logger.debug(
        f"Lattice {n_rows} x {n_columns} at spacing {spacing}: {n} interior nodes, "
        f"{int(np.sum(arms < 1))} shortened arms"
    )
    return IrregularGrid(
        spacing=spacing,
        origin=(x0, y0),
        shape=(n_rows, n_columns),
        rows=rows,
        columns=columns,
        neighbours=neighbours,
        arms=arms,
        boundary_values=boundary_values,
        index_map=index_map,
    )
