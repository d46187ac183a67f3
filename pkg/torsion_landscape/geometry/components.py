import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from torsion_landscape.geometry.domain import label_component
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.utils import IndeterminateCountError

logger = logging.getLogger(__name__)


@dataclass
class ComponentCount:
    """
    Number of components of {u > level} inside the domain, one seed per component
    (the sampled node with the largest value of u) and the resolution the count
    was accepted at. ``history`` lists ``(nx, ny, count)`` of all resolutions tried.
    """

    level: float
    count: int
    component_seeds: List[Tuple[float, float]]
    resolution: Tuple[int, int]
    history: List[Tuple[int, int, int]] = field(default_factory=list)

    def to_dict(self):
        return {
            "level": float(self.level),
            "count": int(self.count),
            "component_seeds": [list(seed) for seed in self.component_seeds],
            "resolution": list(self.resolution),
        }


def count_components_once(field, level: float, window: GridWindow):
    """
    Label the 4-connected components of the sampled {u > level}
    restricted to the component of {u > 0} containing the anchor.
    """
    values = window.sample(field)
    row, column = window.nearest_node(*field.anchor)
    domain_mask = label_component(values > 0, row, column)

    labels, count = ndimage.label((values > level) & domain_mask)
    seeds = []
    if count:
        positions = ndimage.maximum_position(values, labels, np.arange(1, count + 1))
        seeds = [window.node(int(r), int(c)) for r, c in positions]
    return count, seeds, labels


def superlevel_component_count(
    field,
    level: float,
    window: GridWindow,
    resolution: Tuple[int, int] = None,
    max_resolution: Tuple[int, int] = (4096, 1024),
) -> ComponentCount:
    """
    Count the components of {u > level} inside the domain.
    The sampling resolution is doubled until two consecutive resolutions agree.

    Args:
        field: the field
        level (:obj:`float`): the level, e.g. 1/2
        window (:class:`GridWindow`): the window; its own resolution is used if ``resolution`` is not given
        resolution (:obj:`tuple`): starting ``(nx, ny)``
        max_resolution (:obj:`tuple`): the largest ``(nx, ny)`` tried

    Raises:
        :class:`IndeterminateCountError`: the count did not stabilise
    """
    nx, ny = resolution or (window.nx, window.ny)
    history = []

    previous = None
    while nx <= max_resolution[0] and ny <= max_resolution[1]:
        count, seeds, _ = count_components_once(
            field, level, window.with_resolution(nx, ny)
        )
        history.append((nx, ny, count))
        logger.debug(f"{count} components above {level} at resolution {nx} x {ny}")

        if previous is not None and previous[0] == count:
            return ComponentCount(
                level=level,
                count=count,
                component_seeds=previous[1],
                resolution=previous[2],
                history=history,
            )
        previous = (count, seeds, (nx, ny))
        nx, ny = 2 * nx, 2 * ny

    raise IndeterminateCountError(
        f"Component count above level {level} did not stabilise: "
        + ", ".join(f"{c} at {x}x{y}" for x, y, c in history)
    )
