import logging
from dataclasses import asdict, dataclass
from typing import List, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from torsion_landscape.analytic.field import ImplicitField, RootConfig

logger = logging.getLogger(__name__)

SUP_SAMPLES = 4096


@dataclass(frozen=True)
class AsymptoticPrediction:
    """
    Closed-form predictions for one configuration:
    the enclosure abscissa, the rectangle that must contain the domain,
    the predicted curvature-zero abscissae and the upper bound on epsilon.
    ``tip_abscissa`` is the predicted extreme abscissa of the boundary.
    """

    x_enclosure: float
    rect: Tuple[float, float, float, float]
    zeta_minus: float
    zeta_plus: float
    eps_bound: float
    sup_neg_f: float
    tip_abscissa: float

    def to_dict(self):
        result = asdict(self)
        result["rect"] = list(self.rect)
        return result


def sup_negative_restriction(field: ImplicitField, samples: int = SUP_SAMPLES) -> float:
    """
    sup of -f over [x_1, x_2k]: dense sampling followed by
    a bounded scalar polish between the neighbours of the best sample.
    """
    roots = field.config.roots
    xs = np.linspace(roots[0], roots[-1], samples)
    values = -field.restriction(xs)
    best = int(np.argmax(values))
    sup = float(values[best])

    if 0 < best < samples - 1:
        low, high = float(xs[best - 1]), float(xs[best + 1])
        result = minimize_scalar(
            lambda x: float(field.restriction(x)),
            bounds=(low, high),
            method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(low), abs(high))},
        )
        sup = max(sup, -float(result.fun))

    logger.debug(f"sup(-f) on [{roots[0]}, {roots[-1]}] = {sup}")
    return sup


def predictions(config: RootConfig) -> AsymptoticPrediction:
    """
    Evaluate the asymptotic formulas of the construction.

    Args:
        config (:class:`RootConfig`): the configuration

    Returns:
        :class:`AsymptoticPrediction`

    Example:
        .. code-block:: python

            config = RootConfig(k=2, roots=(-2, -1, 1, 2), epsilon=0.01)
            predictions(config).x_enclosure
            # 7.4008...
    """
    field = ImplicitField(config)
    k, eps, alpha, h = config.k, config.epsilon, config.alpha, config.h

    x_enclosure = (3.0 / eps ** alpha) ** (1.0 / (2 * k))
    zeta_plus = (3.0 / (k * (2 * k - 1) * eps ** (alpha - 1))) ** (1.0 / (2 * k - 2))
    sup_neg_f = sup_negative_restriction(field)
    # the threshold exponent is 2/3 at alpha = 3/2, i.e. 1/alpha
    eps_bound = (1.0 / (2.0 * sup_neg_f)) ** (1.0 / alpha)

    return AsymptoticPrediction(
        x_enclosure=x_enclosure,
        rect=(-x_enclosure, x_enclosure, -(1 + h), 1 + h),
        zeta_minus=-zeta_plus,
        zeta_plus=zeta_plus,
        eps_bound=eps_bound,
        sup_neg_f=sup_neg_f,
        tip_abscissa=boundary_profile(config, 0.0),
    )


def boundary_profile(config: RootConfig, eta: float) -> float:
    """
    Leading-order abscissa of the boundary point at height ``eta``,
    (1/2 (1 - eta^2))^(1/2k) epsilon^(-alpha/2k)
    """
    k = config.k
    return (0.5 * (1 - eta * eta)) ** (1.0 / (2 * k)) * config.epsilon ** (
        -config.alpha / (2 * k)
    )


def restriction_extrema(config: RootConfig) -> Tuple[List[float], List[float]]:
    """
    Abscissae of the extrema of the restriction f between consecutive roots.
    f changes sign at every root and has exactly one critical point
    between two neighbours, so each gap is searched with a bounded scalar minimisation.

    Returns:
        ``(minima, maxima)``: the k - 1 minima s_j on [x_2j, x_2j+1]
        and the k maxima on [x_2j+1, x_2j+2] (1-based root indices)
    """
    field = ImplicitField(config)
    roots = config.roots

    def extremum(a: float, b: float, sign: float) -> float:
        result = minimize_scalar(
            lambda x: sign * float(field.restriction(x)),
            bounds=(a, b),
            method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(a), abs(b))},
        )
        return float(result.x)

    maxima = [extremum(roots[2 * j], roots[2 * j + 1], -1.0) for j in range(config.k)]
    minima = [
        extremum(roots[2 * j - 1], roots[2 * j], 1.0) for j in range(1, config.k)
    ]
    logger.debug(f"Restriction extrema: minima {minima}, maxima {maxima}")
    return minima, maxima
