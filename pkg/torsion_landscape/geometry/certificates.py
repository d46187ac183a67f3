import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import dask
import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial.distance import directed_hausdorff

from torsion_landscape.analytic.field import curvature, radial_derivative
from torsion_landscape.geometry.contour import project_to_level
from torsion_landscape.geometry.domain import DomainExtract
from torsion_landscape.utils import CertificateError, DegeneratePointError, TorsionLandscapeError

logger = logging.getLogger(__name__)

RAY_BATCH = 48


@dataclass
class RectNegativity:
    max_u: float
    max_u_vertical: float
    vertical_deviation: float
    vertical_pass: bool
    passed: bool


@dataclass
class StarshapeCertificate:
    center: Tuple[float, float]
    max_radial_derivative: float
    argmax_point: Tuple[float, float]
    margin: float
    passed: bool
    rays: int = 0
    min_ray_crossings: int = 0
    max_ray_crossings: int = 0

    @property
    def rays_single_crossing(self) -> bool:
        return self.min_ray_crossings == 1 and self.max_ray_crossings == 1


@dataclass
class SeparationCheck:
    """max of u over the vertical segments {s_j} x (-1-h, 1+h)"""

    abscissae: List[float]
    max_values: List[float]
    level: float
    passed: bool


@dataclass
class ComponentCertificate:
    level: float
    count: int
    k: int
    component_seeds: List[Tuple[float, float]]
    separators: Optional[SeparationCheck]
    count_maxima: Optional[int]
    passed: bool


@dataclass
class CurvatureCertificate:
    zero_count: int
    zero_locations: List[Tuple[float, float]]
    refined_zero_count: Optional[int]
    min_curvature: float
    argmin_point: Tuple[float, float]
    predicted_zeros: Optional[Tuple[float, float]]
    zero_abscissa_errors: Optional[Tuple[float, float]]
    zeros_on_lower_side: bool
    bottom_point: Optional[Tuple[float, float]]
    bottom_curvature: Optional[float]
    bottom_curvature_ratio: Optional[float]
    tip_abscissae: Tuple[float, float]
    predicted_tip_abscissa: Optional[float]
    tip_errors: Optional[Tuple[float, float]]
    passed: bool


@dataclass
class CertificateReport:
    """
    Outcome of all certificates for one configuration,
    with the measured margins behind every pass flag.
    """

    parameters: Dict[str, Any]
    prediction: Dict[str, Any]
    boundary_negativity: RectNegativity
    domain: Dict[str, Any]
    p0_starshape: StarshapeCertificate
    p1_components: ComponentCertificate
    p3_curvature: CurvatureCertificate
    critical_points: List[Any] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.p0_starshape.passed
            and self.p1_components.passed
            and self.p3_curvature.passed
        )

    @property
    def peaks_passed(self) -> bool:
        """Starshapedness and the k components with their maxima, without the curvature count"""
        return self.p0_starshape.passed and self.p1_components.passed

    def to_dict(self) -> Dict[str, Any]:
        result = {
            "parameters": self.parameters,
            "prediction": self.prediction,
            "boundary_negativity": asdict(self.boundary_negativity),
            "domain": self.domain,
            "p0_starshape": asdict(self.p0_starshape),
            "p1_components": asdict(self.p1_components),
            "p3_curvature": asdict(self.p3_curvature),
            "critical_points": [point.to_dict() for point in self.critical_points],
            "passed": self.passed,
            "peaks_passed": self.peaks_passed,
        }
        result["p0_starshape"]["rays_single_crossing"] = (
            self.p0_starshape.rays_single_crossing
        )
        return result


def check_rect_negativity(
    field, prediction, samples: int = 4096, vertical_slack: float = 0.5
) -> RectNegativity:
    """
    Sample u on the boundary of the prediction rectangle.
    Passes iff u < 0 everywhere on it; additionally checks u <= -2 + slack
    on the vertical sides, where u is close to -5/2 - y^2/2.
    """
    xmin, xmax, ymin, ymax = prediction.rect
    xs = np.linspace(xmin, xmax, samples)
    ys = np.linspace(ymin, ymax, samples)

    horizontal = np.concatenate(
        [np.asarray(field.value(xs, ymin)), np.asarray(field.value(xs, ymax))]
    )
    vertical = np.concatenate(
        [np.asarray(field.value(xmin, ys)), np.asarray(field.value(xmax, ys))]
    )
    all_ys = np.concatenate([ys, ys])

    max_u = float(max(horizontal.max(), vertical.max()))
    max_u_vertical = float(vertical.max())
    deviation = float(np.max(np.abs(vertical + 2.5 + 0.5 * all_ys * all_ys)))

    logger.debug(f"max u on the rectangle boundary: {max_u}, vertical sides: {max_u_vertical}")
    return RectNegativity(
        max_u=max_u,
        max_u_vertical=max_u_vertical,
        vertical_deviation=deviation,
        vertical_pass=max_u_vertical <= -2 + vertical_slack,
        passed=max_u < 0,
    )


def ray_crossings(vertices: np.ndarray, center, rays: int = 720) -> np.ndarray:
    """
    Number of times each of ``rays`` equally spaced rays from ``center``
    crosses the closed polygon ``vertices``.
    """
    center = np.asarray(center, dtype=float)
    starts = vertices
    edges = np.roll(vertices, -1, axis=0) - vertices
    offset = starts - center

    angles = 2 * np.pi * np.arange(rays) / rays
    directions = np.column_stack([np.cos(angles), np.sin(angles)])

    counts = np.zeros(rays, dtype=int)
    for begin in range(0, rays, RAY_BATCH):
        d = directions[begin : begin + RAY_BATCH, np.newaxis, :]
        denominator = d[..., 0] * edges[:, 1] - d[..., 1] * edges[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (offset[:, 0] * edges[:, 1] - offset[:, 1] * edges[:, 0]) / denominator
            t = (offset[:, 0] * d[..., 1] - offset[:, 1] * d[..., 0]) / denominator
        hits = (denominator != 0) & (s > 0) & (t >= 0) & (t < 1)
        counts[begin : begin + RAY_BATCH] = hits.sum(axis=1)
    return counts


def starshape_certificate(
    domain: DomainExtract,
    field,
    center_x: float = None,
    margin: float = 0.1,
    rays: int = 720,
) -> StarshapeCertificate:
    """
    Maximum of the radial derivative (x - center_x) u_x + y u_y over the boundary.
    Starshapedness with respect to (center_x, 0) is certified iff the maximum is <= -margin.
    The maximum is refined at the projected midpoints next to the best vertex,
    and the single-crossing property is checked independently with ``rays`` rays.
    """
    if center_x is None:
        center_x = domain.contains_point[0]
    boundary = domain.boundary
    vertices = boundary.vertices

    values = np.asarray(radial_derivative(field, boundary.x, boundary.y, center_x=center_x))
    best = int(np.argmax(values))
    neighbours = vertices[[(best - 1) % len(vertices), (best + 1) % len(vertices)]]
    midpoints = project_to_level(field, 0.5 * (vertices[best] + neighbours), boundary.level)
    midpoint_values = np.asarray(
        radial_derivative(field, midpoints[:, 0], midpoints[:, 1], center_x=center_x)
    )

    max_value, argmax = float(values[best]), tuple(vertices[best])
    if midpoint_values.max() > max_value:
        index = int(np.argmax(midpoint_values))
        max_value, argmax = float(midpoint_values[index]), tuple(midpoints[index])

    crossings = ray_crossings(vertices, (center_x, 0.0), rays=rays) if rays else np.zeros(1)
    logger.debug(
        f"Starshape: max radial derivative {max_value:.6g} at {argmax}, "
        f"ray crossings in [{crossings.min()}, {crossings.max()}]"
    )
    return StarshapeCertificate(
        center=(float(center_x), 0.0),
        max_radial_derivative=max_value,
        argmax_point=tuple(float(c) for c in argmax),
        margin=margin,
        passed=max_value <= -margin,
        rays=rays,
        min_ray_crossings=int(crossings.min()),
        max_ray_crossings=int(crossings.max()),
    )


def curvature_sign_changes(values: np.ndarray) -> np.ndarray:
    """Indices i where the curvature changes sign between vertex i and i + 1 (cyclic)"""
    positive = values >= 0
    return np.nonzero(positive != np.roll(positive, -1))[0]


def _curvature_along(field, start, stop, level):
    """Curvature as a function of the parameter along the projected chord start -> stop"""

    def evaluate(t):
        point = project_to_level(field, start + t * (stop - start), level)[0]
        return float(curvature(field, point[0], point[1])), point

    return evaluate


def locate_curvature_zeros(
    field, boundary, zero_tol: float = 1e-8
) -> List[Tuple[float, float]]:
    """Polish every curvature sign change of the closed boundary by root bracketing"""
    vertices = boundary.vertices
    values = boundary.curvature
    scale = float(np.max(np.abs(values)))

    zeros = []
    for index in curvature_sign_changes(values):
        start, stop = vertices[index], vertices[(index + 1) % len(vertices)]
        evaluate = _curvature_along(field, start, stop, boundary.level)
        low, high = evaluate(0.0)[0], evaluate(1.0)[0]
        if low * high < 0:
            t = brentq(lambda s: evaluate(s)[0], 0.0, 1.0, xtol=1e-15)
        else:
            t = values[index] / (values[index] - values[(index + 1) % len(values)])
        value, point = evaluate(t)
        if abs(value) > zero_tol * scale:
            logger.warning(
                f"Curvature zero near {tuple(point)} only polished to {value:.3e}"
            )
        zeros.append((float(point[0]), float(point[1])))
    return zeros


def _minimum_curvature(field, boundary) -> Tuple[float, Tuple[float, float]]:
    vertices = boundary.vertices
    best = int(np.argmin(boundary.curvature))
    value, point = float(boundary.curvature[best]), tuple(vertices[best])

    for neighbour in ((best - 1) % len(vertices), (best + 1) % len(vertices)):
        evaluate = _curvature_along(field, vertices[best], vertices[neighbour], boundary.level)
        result = minimize_scalar(
            lambda t: evaluate(t)[0], bounds=(0.0, 1.0), method="bounded"
        )
        if result.fun < value:
            value, point = float(result.fun), tuple(evaluate(result.x)[1])
    return value, tuple(float(c) for c in point)


def bottom_point(field, h: float) -> Optional[Tuple[float, float]]:
    """The boundary point (0, beta) with beta in (-1 - h, 0), if u(0, .) changes sign there"""
    try:
        beta = brentq(lambda y: float(field.value(0.0, y)), -(1 + h), 0.0, xtol=1e-15)
    except ValueError:
        logger.debug("u(0, y) does not change sign on (-1 - h, 0)")
        return None
    return (0.0, float(beta))


def curvature_certificate(
    domain: DomainExtract,
    field,
    prediction=None,
    refined_domain: DomainExtract = None,
    zero_tol: float = 1e-8,
) -> CurvatureCertificate:
    """
    Count and locate the sign changes of the boundary curvature.
    Passes iff there are exactly two, also on ``refined_domain``
    (the same domain extracted at double resolution) if given.
    With an :class:`AsymptoticPrediction` of the construction the zero and tip
    abscissae are compared to their predictions and the curvature at the
    bottom boundary point (0, beta) is reported.

    Raises:
        :class:`CertificateError`: the curvature is undefined at a boundary point
    """
    boundary = domain.boundary
    if boundary.curvature is None:
        raise CertificateError("The boundary contour carries no curvature values")

    try:
        zeros = locate_curvature_zeros(field, boundary, zero_tol=zero_tol)
        min_curvature, argmin = _minimum_curvature(field, boundary)
    except DegeneratePointError as err:
        raise CertificateError(f"Boundary curvature undefined: {err}") from err

    refined_count = None
    if refined_domain is not None:
        refined_count = len(curvature_sign_changes(refined_domain.boundary.curvature))

    tips = (float(boundary.x.min()), float(boundary.x.max()))
    zeta = abscissa_errors = tip = tip_errors = None
    bottom = bottom_value = bottom_ratio = None
    if prediction is not None:
        zeta = (float(prediction.zeta_minus), float(prediction.zeta_plus))
        if len(zeros) == 2:
            xs = sorted(x for x, _ in zeros)
            abscissa_errors = tuple(float(abs(x - z) / abs(z)) for x, z in zip(xs, zeta))

        tip = float(prediction.tip_abscissa)
        tip_errors = (abs(abs(tips[0]) - tip) / tip, abs(tips[1] - tip) / tip)

        h = 0.5 * (prediction.rect[3] - prediction.rect[2]) - 1
        bottom = bottom_point(field, h)
        if bottom is not None:
            bottom_value = float(curvature(field, *bottom))
            bottom_ratio = bottom_value / (-6 * field.config.epsilon)

    passed = len(zeros) == 2 and (refined_count is None or refined_count == 2)
    logger.debug(
        f"Curvature: {len(zeros)} zeros at {zeros}, refined count {refined_count}, "
        f"minimum {min_curvature:.6g}"
    )
    return CurvatureCertificate(
        zero_count=len(zeros),
        zero_locations=zeros,
        refined_zero_count=refined_count,
        min_curvature=min_curvature,
        argmin_point=argmin,
        predicted_zeros=zeta,
        zero_abscissa_errors=abscissa_errors,
        zeros_on_lower_side=bool(zeros) and all(y < 0 for _, y in zeros),
        bottom_point=bottom,
        bottom_curvature=bottom_value,
        bottom_curvature_ratio=bottom_ratio,
        tip_abscissae=tips,
        predicted_tip_abscissa=tip,
        tip_errors=tip_errors,
        passed=passed,
    )


def is_strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


@dataclass
class TrendResult:
    entries: List[Tuple[float, float]]
    decreasing: bool
    failures: List[Tuple[float, Dict[str, str]]] = field(default_factory=list)


def _measure_or_error(
    measure: Callable, config
) -> Tuple[Optional[float], Optional[Dict[str, str]]]:
    try:
        return float(measure(config)), None
    except TorsionLandscapeError as err:
        logger.warning(f"Trend entry epsilon = {config.epsilon} failed: {err}")
        return None, {"type": type(err).__name__, "message": str(err)}


def min_curvature_trend(
    configs: Sequence, measure: Callable, jobs: int = None
) -> TrendResult:
    """
    Measure the boundary curvature minimum for every configuration,
    given in order of decreasing epsilon (reverse increasing sequences before calling).
    The trend holds iff |min curvature| strictly decreases along the
    configurations that could be measured. Configurations whose domain
    is not enclosed are listed in ``failures`` with their error.

    Args:
        configs (:obj:`list` of :class:`RootConfig`): the configurations
        measure (:obj:`callable`): maps a configuration to its minimal boundary curvature
        jobs (:obj:`int`): number of parallel workers
    """
    tasks = [dask.delayed(_measure_or_error)(measure, config) for config in configs]
    results = dask.compute(*tasks, scheduler="threads", num_workers=jobs)

    entries, failures = [], []
    for config, (value, error) in zip(configs, results):
        if error is None:
            entries.append((config.epsilon, value))
        else:
            failures.append((config.epsilon, error))
    decreasing = is_strictly_decreasing([abs(value) for _, value in entries])
    return TrendResult(entries=entries, decreasing=decreasing, failures=failures)


def hausdorff_to_strip(
    domain: DomainExtract, half_width: float = 2.0, spacing: float = 5e-4
) -> float:
    """
    Hausdorff distance between the boundary inside |x| <= half_width
    and the lines y = +-1 over the same abscissae.
    """
    points = domain.boundary.densified(spacing)
    points = points[np.abs(points[:, 0]) <= half_width]
    if len(points) == 0:
        raise CertificateError(f"The boundary does not reach into |x| <= {half_width}")

    to_lines = float(np.max(np.minimum(np.abs(points[:, 1] - 1), np.abs(points[:, 1] + 1))))
    xs = np.arange(-half_width, half_width + spacing / 2, spacing)
    lines = np.concatenate(
        [np.column_stack([xs, np.ones_like(xs)]), np.column_stack([xs, -np.ones_like(xs)])]
    )
    from_lines = directed_hausdorff(lines, points)[0]
    return max(to_lines, float(from_lines))


def separation_check(
    field, abscissae: Sequence[float], h: float, level: float = 0.5, samples: int = 4096
) -> SeparationCheck:
    """u < level on every segment {s_j} x (-1 - h, 1 + h)"""
    ys = np.linspace(-(1 + h), 1 + h, samples + 2)[1:-1]
    maxima = [float(np.max(field.value(s, ys))) for s in abscissae]
    return SeparationCheck(
        abscissae=[float(s) for s in abscissae],
        max_values=maxima,
        level=level,
        passed=all(value < level for value in maxima),
    )
