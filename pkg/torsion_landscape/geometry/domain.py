import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from torsion_landscape.geometry.contour import Contour, annotate, trace_level_set
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.utils import (
    CertificateError,
    ConstructionError,
    DegeneratePointError,
    EnclosureError,
    LoggableArray,
)

logger = logging.getLogger(__name__)


@dataclass
class DomainExtract:
    """
    The connected component of {u > 0} containing the anchor of the field:
    its boundary as a counterclockwise :class:`Contour` (annotated with gradient norm,
    curvature and radial derivative) and the filled raster mask on ``window``.
    """

    boundary: Contour
    inside_mask: np.ndarray
    window: GridWindow
    contains_point: Tuple[float, float]

    @property
    def mask_area(self) -> float:
        return float(self.inside_mask.sum()) * self.window.dx * self.window.dy

    @property
    def diameter(self) -> float:
        return self.boundary.diameter

    def contains(self, points) -> np.ndarray:
        """Whether the points lie inside the boundary polygon"""
        return self.boundary.contains_points(points)


def label_component(mask: np.ndarray, row: int, column: int) -> np.ndarray:
    """The 4-connected component of ``mask`` containing the node (row, column)"""
    labels, count = ndimage.label(mask)
    label = labels[row, column]
    if label == 0:
        return np.zeros_like(mask, dtype=bool)
    return labels == label


def touches_edge(mask: np.ndarray) -> bool:
    return bool(mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any())


def extract_domain(
    field, window: GridWindow, refine_tol: float = 1e-9, values: np.ndarray = None
) -> DomainExtract:
    """
    Extract the component of the superlevel set {u > 0} which contains
    the anchor of the field, e.g. (x_1, 0) for the construction.

    Args:
        field: the field (:class:`ImplicitField` or a reference field)
        window (:class:`GridWindow`): sampling window, it must enclose the component
        refine_tol (:obj:`float`): vertex tolerance of the traced boundary
        values (:obj:`numpy.ndarray`): already sampled field values on the window

    Raises:
        :class:`ConstructionError`: the anchor is not in the superlevel set
        :class:`EnclosureError`: the component reaches the window edge
    """
    anchor = tuple(float(c) for c in field.anchor)
    anchor_value = float(field.value(*anchor))
    if not anchor_value > 0:
        raise ConstructionError(
            f"The anchor {anchor} is not in the superlevel set: u = {anchor_value}"
        )

    if values is None:
        values = window.sample(field)

    row, column = window.nearest_node(*anchor)
    inside_mask = label_component(values > 0, row, column)
    if not inside_mask.any():
        raise ConstructionError(
            f"The anchor {anchor} is not resolved by the {window.nx} x {window.ny} grid"
        )
    if touches_edge(inside_mask):
        raise EnclosureError(
            f"The component containing {anchor} reaches the edge of the window "
            f"[{window.xmin:g}, {window.xmax:g}] x [{window.ymin:g}, {window.ymax:g}]"
        )
    logger.debug(f"Domain mask: {LoggableArray(inside_mask)}")

    contours = trace_level_set(field, 0.0, window, values, refine_tol=refine_tol)
    candidates = [
        contour
        for contour in contours
        if contour.counterclockwise and contour.contains_points([anchor])[0]
    ]
    if not candidates:
        raise ConstructionError(f"No closed boundary curve encloses the anchor {anchor}")
    boundary = max(candidates, key=lambda contour: contour.signed_area)
    try:
        annotate(boundary, field, center_x=anchor[0])
    except DegeneratePointError as err:
        raise CertificateError(f"Boundary curvature undefined: {err}") from err

    logger.debug(
        f"Extracted domain: {LoggableArray(boundary)}, area {boundary.signed_area:.6g}"
    )
    return DomainExtract(
        boundary=boundary, inside_mask=inside_mask, window=window, contains_point=anchor
    )


def segment_inside(domain: DomainExtract, x_start: float, x_stop: float, samples=1024):
    """Whether the segment [x_start, x_stop] x {0} lies inside the domain"""
    xs = np.linspace(x_start, x_stop, samples)
    return bool(np.all(domain.contains(np.column_stack([xs, np.zeros_like(xs)]))))
