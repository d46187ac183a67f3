import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from torsion_landscape.utils import InvalidConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolyCoeffs:
    """
    Coefficients of the monic polynomial prod(z - x_i) = sum a_i z^i,
    stored low-degree-first. The holomorphic function of the construction
    is F(z) = -sum a_i z^i; it is evaluated through these coefficients only,
    the bivariate expansion into homogeneous harmonic polynomials is never formed.
    """

    a: Tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.a) - 1

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.a, dtype=float)

    @cached_property
    def first_derivative(self) -> np.ndarray:
        return P.polyder(self.array, 1)

    @cached_property
    def second_derivative(self) -> np.ndarray:
        return P.polyder(self.array, 2)

    def __call__(self, z):
        """Horner evaluation of sum a_i z^i for real or complex (array) input"""
        return P.polyval(z, self.array)

    def holomorphic(self, z):
        """Return F(z), F'(z) and F''(z) where F = -sum a_i z^i"""
        return (
            -P.polyval(z, self.array),
            -P.polyval(z, self.first_derivative),
            -P.polyval(z, self.second_derivative),
        )


def check_strictly_increasing(roots: Sequence[float]) -> np.ndarray:
    roots = np.asarray(roots, dtype=float)
    if roots.ndim != 1 or roots.size == 0:
        raise InvalidConfigError(f"Roots must be a non-empty list, got {roots!r}")
    if not np.all(np.isfinite(roots)):
        raise InvalidConfigError(f"Roots must be finite, got {roots.tolist()}")
    if np.any(np.diff(roots) <= 0):
        raise InvalidConfigError(
            f"Roots must be strictly increasing, got {roots.tolist()}"
        )
    return roots


def poly_from_roots(roots: Sequence[float]) -> PolyCoeffs:
    """
    Expand prod(z - x_i) into its monic coefficient list (lowest degree first).

    Args:
        roots (:obj:`list` of :obj:`float`): strictly increasing real roots

    Returns:
        :class:`PolyCoeffs` of degree ``len(roots)``

    Example:
        .. code-block:: python

            poly_from_roots([-2, -1, 1, 2]).a
            # (4.0, 0.0, -5.0, 0.0, 1.0)
    """
    roots = check_strictly_increasing(roots)
    coefficients = P.polyfromroots(roots)
    # remove rounding in the leading coefficient
    coefficients[-1] = 1.0

    logger.debug(f"Expanded {len(roots)} roots into coefficients {coefficients}")
    return PolyCoeffs(tuple(float(c) for c in coefficients))
