import logging
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from torsion_landscape.geometry.components import ComponentCount
from torsion_landscape.geometry.domain import DomainExtract
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.utils import InconsistencyError

logger = logging.getLogger(__name__)

MAXIMUM = "maximum"
SADDLE = "saddle"
MINIMUM = "minimum"
DEGENERATE = "degenerate"

SINGULAR_DETERMINANT = 1e-14
REGULARIZATION = 1e-7
MAX_HALVINGS = 30
MERGE_RADIUS = 1e-6
PAIRING_SAMPLES = 256


@dataclass(frozen=True)
class CriticalPoint:
    location: Tuple[float, float]
    kind: str
    hessian_eigenvalues: Tuple[float, float]
    value: float
    residual: float

    def to_dict(self):
        return {
            "location": list(self.location),
            "kind": self.kind,
            "hessian_eigenvalues": list(self.hessian_eigenvalues),
            "value": self.value,
            "residual": self.residual,
        }


def classify(hessian: Tuple[float, float, float], degeneracy_tol: float = 1e-12) -> str:
    """
    Morse type of a critical point from its Hessian ``(u_xx, u_xy, u_yy)``:
    degenerate if an eigenvalue is below ``degeneracy_tol`` in magnitude,
    otherwise maximum, minimum or saddle by the eigenvalue signs.
    """
    return _classify_eigenvalues(_eigenvalues(*hessian), degeneracy_tol)


def _eigenvalues(u_xx, u_xy, u_yy) -> Tuple[float, float]:
    low, high = np.linalg.eigvalsh(np.array([[u_xx, u_xy], [u_xy, u_yy]], dtype=float))
    return float(low), float(high)


def _classify_eigenvalues(eigenvalues, degeneracy_tol) -> str:
    low, high = eigenvalues
    if min(abs(low), abs(high)) < degeneracy_tol:
        return DEGENERATE
    if high < 0:
        return MAXIMUM
    if low > 0:
        return MINIMUM
    return SADDLE


def newton_critical(field, points: np.ndarray, tol: float, max_iter: int):
    """
    Vectorised damped Newton iteration on grad u = 0.
    Nearly singular Hessians are shifted by a multiple of the identity;
    steps are halved until |grad u| decreases.
    Returns the final iterates and a convergence flag per point.
    """
    x, y = points[:, 0].copy(), points[:, 1].copy()
    u_x, u_y = (np.asarray(g, dtype=float) for g in field.gradient(x, y))
    norm = np.hypot(u_x, u_y)
    active = np.isfinite(norm) & (norm > tol)

    for _ in range(max_iter):
        if not active.any():
            break
        u_xx, u_xy, u_yy = (np.asarray(h, dtype=float) for h in field.hessian(x[active], y[active]))
        gx, gy = u_x[active], u_y[active]

        determinant = u_xx * u_yy - u_xy * u_xy
        shift = np.where(np.abs(determinant) < SINGULAR_DETERMINANT, REGULARIZATION, 0.0)
        a, c = u_xx + shift, u_yy + shift
        determinant = a * c - u_xy * u_xy
        with np.errstate(divide="ignore", invalid="ignore"):
            step_x = -(c * gx - u_xy * gy) / determinant
            step_y = -(-u_xy * gx + a * gy) / determinant

        old_norm = norm[active]
        factor = np.ones_like(step_x)
        accepted = np.zeros_like(step_x, dtype=bool)
        new_x, new_y = x[active].copy(), y[active].copy()
        new_gx, new_gy, new_norm = gx.copy(), gy.copy(), old_norm.copy()
        for _ in range(MAX_HALVINGS):
            pending = ~accepted
            if not pending.any():
                break
            trial_x = x[active][pending] + factor[pending] * step_x[pending]
            trial_y = y[active][pending] + factor[pending] * step_y[pending]
            trial_gx, trial_gy = (np.asarray(g, dtype=float) for g in field.gradient(trial_x, trial_y))
            trial_norm = np.hypot(trial_gx, trial_gy)
            better = np.isfinite(trial_norm) & (trial_norm < old_norm[pending])

            indices = np.nonzero(pending)[0][better]
            new_x[indices], new_y[indices] = trial_x[better], trial_y[better]
            new_gx[indices], new_gy[indices] = trial_gx[better], trial_gy[better]
            new_norm[indices] = trial_norm[better]
            accepted[indices] = True
            factor[pending] *= 0.5

        active_indices = np.nonzero(active)[0]
        x[active_indices], y[active_indices] = new_x, new_y
        u_x[active_indices], u_y[active_indices] = new_gx, new_gy
        norm[active_indices] = new_norm

        # stagnated points are dropped, converged ones are done
        still = accepted & (new_norm > tol)
        active[active_indices] = still

    converged = np.isfinite(norm) & (norm <= tol)
    return np.column_stack([x, y]), converged, norm


def _merge(points: np.ndarray, radius: float) -> List[int]:
    """Indices of the points kept by greedy merging in input order"""
    if len(points) == 0:
        return []
    tree = cKDTree(points)
    merged = np.zeros(len(points), dtype=bool)
    kept = []
    for index in range(len(points)):
        if merged[index]:
            continue
        kept.append(index)
        merged[tree.query_ball_point(points[index], radius)] = True
    return kept


def find_critical_points(
    field,
    domain: Union[DomainExtract, GridWindow],
    seeds: Tuple[int, int] = (256, 64),
    newton_tol: float = 1e-12,
    degeneracy_tol: float = 1e-12,
    max_iter: int = 60,
) -> List[CriticalPoint]:
    """
    Locate and classify critical points of u by Newton's method
    from a regular seed lattice.

    Args:
        field: the field
        domain: a :class:`DomainExtract`, or a :class:`GridWindow` for fields without bounded domain
        seeds (:obj:`tuple`): lattice size ``(nx, ny)`` over the domain window
        newton_tol (:obj:`float`): |grad u| required for convergence
        degeneracy_tol (:obj:`float`): eigenvalue magnitude below which a point is degenerate
        max_iter (:obj:`int`): Newton iterations per seed

    Returns:
        :obj:`list` of :class:`CriticalPoint`, sorted by location.
        Seeds that diverge or converge outside the domain are discarded.
    """
    if isinstance(domain, DomainExtract):
        window = domain.window
        diameter = domain.diameter
        inside = domain.contains
    else:
        window = domain
        diameter = float(np.hypot(window.xmax - window.xmin, window.ymax - window.ymin))

        def inside(points):
            return (
                (points[:, 0] >= window.xmin)
                & (points[:, 0] <= window.xmax)
                & (points[:, 1] >= window.ymin)
                & (points[:, 1] <= window.ymax)
            )

    nx, ny = seeds
    # seeds sit at the cell centers of a seed lattice over the window
    xs = window.xmin + (np.arange(nx) + 0.5) * (window.xmax - window.xmin) / nx
    ys = window.ymin + (np.arange(ny) + 0.5) * (window.ymax - window.ymin) / ny
    grid_x, grid_y = np.meshgrid(xs, ys)
    lattice = np.column_stack([grid_x.ravel(), grid_y.ravel()])
    lattice = lattice[inside(lattice)]

    points, converged, residuals = newton_critical(field, lattice, newton_tol, max_iter)
    keep = converged.copy()
    keep[keep] = inside(points[keep])
    points, residuals = points[keep], residuals[keep]
    logger.debug(
        f"{int(converged.sum())} of {len(lattice)} seeds converged, {len(points)} inside the domain"
    )

    critical_points = []
    for index in _merge(points, MERGE_RADIUS * diameter):
        x, y = points[index]
        eigenvalues = _eigenvalues(*(float(h) for h in field.hessian(x, y)))
        critical_points.append(
            CriticalPoint(
                location=(float(x), float(y)),
                kind=_classify_eigenvalues(eigenvalues, degeneracy_tol),
                hessian_eigenvalues=eigenvalues,
                value=float(field.value(x, y)),
                residual=float(residuals[index]),
            )
        )
    critical_points.sort(key=lambda point: point.location)
    logger.debug(
        "Critical points: "
        + ", ".join(f"{kind} x{sum(p.kind == kind for p in critical_points)}"
                    for kind in (MAXIMUM, SADDLE, MINIMUM, DEGENERATE))
    )
    return critical_points


@dataclass
class MaximaCount:
    count_maxima: int
    k: int
    pairing: List[List[Tuple[float, float]]]
    passed: bool


def segment_above(field, start, stop, level: float, samples: int = PAIRING_SAMPLES) -> bool:
    """Whether u > level along the whole straight segment start -> stop"""
    t = np.linspace(0.0, 1.0, samples)[:, np.newaxis]
    points = np.asarray(start) + t * (np.asarray(stop) - np.asarray(start))
    return bool(np.all(np.asarray(field.value(points[:, 0], points[:, 1])) > level))


def maxima_count_vs_k(
    field,
    domain: DomainExtract,
    components: ComponentCount,
    critical_points: List[CriticalPoint] = None,
    k: int = None,
) -> MaximaCount:
    """
    Certify that u has at least k maxima in the domain and that every
    component of {u > components.level} contains one of them.
    A maximum belongs to a component if the segment joining it to the
    component seed stays above the level.

    Raises:
        :class:`InconsistencyError`: a component contains no located maximum
    """
    if critical_points is None:
        critical_points = find_critical_points(field, domain)
    if k is None:
        k = field.config.k

    maxima = [point for point in critical_points if point.kind == MAXIMUM]
    pairing = []
    for seed in components.component_seeds:
        paired = [
            point.location
            for point in maxima
            if segment_above(field, seed, point.location, components.level)
        ]
        if not paired:
            raise InconsistencyError(
                f"The component of {{u > {components.level}}} around {seed} contains "
                f"none of the {len(maxima)} located maxima"
            )
        pairing.append(paired)

    logger.debug(f"{len(maxima)} maxima for k = {k}, pairing {pairing}")
    return MaximaCount(
        count_maxima=len(maxima), k=k, pairing=pairing, passed=len(maxima) >= k
    )
