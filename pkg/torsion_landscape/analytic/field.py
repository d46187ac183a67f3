import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np

from torsion_landscape.analytic.polynomial import (
    PolyCoeffs,
    check_strictly_increasing,
    poly_from_roots,
)
from torsion_landscape.utils import (
    DegeneratePointError,
    InvalidConfigError,
    as_float_array,
    maybe_scalar,
)

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 1.5
DEFAULT_H = 0.5
CURVATURE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class RootConfig:
    """
    The parameters of one member of the construction:
    ``k`` peaks, the ``2k`` strictly increasing real ``roots`` of the polynomial,
    the perturbation size ``epsilon``, the exponent ``alpha`` of the harmonic
    perturbation (any value in (1, 2)) and the margin ``h`` of the enclosing rectangle.
    """

    k: int
    roots: Tuple[float, ...]
    epsilon: float
    alpha: float = DEFAULT_ALPHA
    h: float = DEFAULT_H

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(float(r) for r in self.roots))

        if int(self.k) != self.k or self.k < 2:
            raise InvalidConfigError(f"k must be an integer >= 2, got {self.k}")
        if len(self.roots) != 2 * self.k:
            raise InvalidConfigError(
                f"Expected exactly 2k = {2 * self.k} roots, got {len(self.roots)}"
            )
        check_strictly_increasing(self.roots)
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not 1 < self.alpha < 2:
            raise InvalidConfigError(f"alpha must lie in (1, 2), got {self.alpha}")
        if not 0 < self.h < 1:
            raise InvalidConfigError(f"h must lie in (0, 1), got {self.h}")

    @staticmethod
    def canonical_roots(k: int) -> Tuple[float, ...]:
        """The default root pattern +-(2j - 1), j = 1..k"""
        positive = [2.0 * j - 1.0 for j in range(1, k + 1)]
        return tuple([-r for r in reversed(positive)] + positive)

    @classmethod
    def canonical(cls, k: int, epsilon: float, **kwargs) -> "RootConfig":
        return cls(k=k, roots=cls.canonical_roots(k), epsilon=epsilon, **kwargs)

    def with_epsilon(self, epsilon: float) -> "RootConfig":
        return replace(self, epsilon=epsilon)

    def to_dict(self):
        return {
            "k": int(self.k),
            "roots": list(self.roots),
            "epsilon": float(self.epsilon),
            "alpha": float(self.alpha),
            "h": float(self.h),
        }


@dataclass(frozen=True)
class ImplicitField:
    """
    Evaluator of

        u(x, y) = 1/2 - y^2/2 + epsilon (y^3 - 3 x^2 y) + epsilon^alpha v(x, y)

    with v = Re F, F(z) = -prod(z - x_i), together with its exact first
    and second derivatives. All methods accept scalars or numpy arrays.
    Derivatives of v come from F' and F'' through the Cauchy-Riemann equations:
    v_x = Re F', v_y = -Im F', v_xx = Re F'', v_xy = -Im F'', v_yy = -v_xx.
    """

    config: RootConfig
    coeffs: PolyCoeffs = field(default=None)

    def __post_init__(self):
        if self.coeffs is None:
            object.__setattr__(self, "coeffs", poly_from_roots(self.config.roots))

    @cached_property
    def eps_alpha(self) -> float:
        return self.config.epsilon ** self.config.alpha

    @property
    def anchor(self) -> Tuple[float, float]:
        return (self.config.roots[0], 0.0)

    def restriction(self, x):
        """f(x) = F(x) on the real line"""
        return maybe_scalar(-self.coeffs(np.asarray(x, dtype=float)))

    def v(self, x, y):
        x, y = as_float_array(x, y)
        return maybe_scalar(-self.coeffs(x + 1j * y).real)

    def v_derivatives(self, x, y):
        """Return (v_x, v_y, v_xx, v_xy, v_yy)"""
        x, y = as_float_array(x, y)
        _, d1, d2 = self.coeffs.holomorphic(x + 1j * y)
        return d1.real, -d1.imag, d2.real, -d2.imag, -d2.real

    def value(self, x, y):
        x, y = as_float_array(x, y)
        eps = self.config.epsilon
        return maybe_scalar(
            0.5 - 0.5 * y * y + eps * (y ** 3 - 3 * x * x * y) + self.eps_alpha * self.v(x, y)
        )

    def gradient(self, x, y):
        x, y = as_float_array(x, y)
        eps, ea = self.config.epsilon, self.eps_alpha
        v_x, v_y, _, _, _ = self.v_derivatives(x, y)

        u_x = -6 * eps * x * y + ea * v_x
        u_y = -y + 3 * eps * (y * y - x * x) + ea * v_y
        return maybe_scalar(u_x), maybe_scalar(u_y)

    def hessian(self, x, y):
        x, y = as_float_array(x, y)
        eps, ea = self.config.epsilon, self.eps_alpha
        _, _, v_xx, v_xy, v_yy = self.v_derivatives(x, y)

        u_xx = -6 * eps * y + ea * v_xx
        u_xy = -6 * eps * x + ea * v_xy
        u_yy = -1 + 6 * eps * y + ea * v_yy
        return maybe_scalar(u_xx), maybe_scalar(u_xy), maybe_scalar(u_yy)


@dataclass(frozen=True)
class StripField:
    """The strip solution 1/2 - y^2/2, the epsilon -> 0 limit of the construction"""

    @property
    def anchor(self) -> Tuple[float, float]:
        return (0.0, 0.0)

    def value(self, x, y):
        x, y = as_float_array(x, y)
        return maybe_scalar(0.5 - 0.5 * y * y + 0 * x)

    def gradient(self, x, y):
        x, y = as_float_array(x, y)
        return maybe_scalar(np.zeros_like(x)), maybe_scalar(-y)

    def hessian(self, x, y):
        x, y = as_float_array(x, y)
        zeros = np.zeros_like(x)
        return maybe_scalar(zeros), maybe_scalar(zeros), maybe_scalar(zeros - 1.0)


@dataclass(frozen=True)
class RadialTorsionField:
    """The torsion solution (radius^2 - x^2 - y^2) / 4 of the disk of the given radius"""

    radius: float = 1.0

    @property
    def anchor(self) -> Tuple[float, float]:
        return (0.0, 0.0)

    def value(self, x, y):
        x, y = as_float_array(x, y)
        return maybe_scalar(0.25 * (self.radius ** 2 - x * x - y * y))

    def gradient(self, x, y):
        x, y = as_float_array(x, y)
        return maybe_scalar(-0.5 * x), maybe_scalar(-0.5 * y)

    def hessian(self, x, y):
        x, y = as_float_array(x, y)
        zeros = np.zeros_like(x)
        return (
            maybe_scalar(zeros - 0.5),
            maybe_scalar(zeros),
            maybe_scalar(zeros - 0.5),
        )


def eval_v(field: ImplicitField, x, y):
    """v(x, y) = Re F(x + iy)"""
    return field.v(x, y)


def eval_u(field, x, y):
    return field.value(x, y)


def grad_u(field, x, y):
    return field.gradient(x, y)


def hess_u(field, x, y):
    return field.hessian(x, y)


def curvature(field, x, y, tolerance: float = CURVATURE_TOLERANCE):
    """
    Oriented curvature of the level curve of u through (x, y),

        -(u_xx u_y^2 - 2 u_xy u_x u_y + u_yy u_x^2) / |grad u|^3

    positive where the superlevel set is locally convex.

    The degeneracy threshold is ``tolerance * (1 + max |grad u|)`` over the given points.

    Raises:
        :class:`DegeneratePointError` if |grad u| is below the threshold at any of the points
    """
    x, y = as_float_array(x, y)
    u_x, u_y = (np.asarray(g) for g in field.gradient(x, y))
    u_xx, u_xy, u_yy = (np.asarray(h) for h in field.hessian(x, y))

    grad_sq = u_x * u_x + u_y * u_y
    grad_norm = np.sqrt(grad_sq)
    threshold = tolerance * (1.0 + float(np.max(grad_norm, initial=0.0)))
    degenerate = grad_norm < threshold
    if np.any(degenerate):
        index = np.unravel_index(np.argmax(degenerate), degenerate.shape)
        raise DegeneratePointError(
            x[index], y[index], grad_norm[index], tolerance=threshold
        )

    numerator = u_xx * u_y * u_y - 2 * u_xy * u_x * u_y + u_yy * u_x * u_x
    return maybe_scalar(-numerator / (grad_sq * grad_norm))


def radial_derivative(field, x, y, center_x: float = None):
    """
    (x - center_x) u_x + y u_y, the derivative of u along rays
    from (center_x, 0). Defaults to the anchor of the field.
    """
    if center_x is None:
        center_x = field.anchor[0]
    x, y = as_float_array(x, y)
    u_x, u_y = field.gradient(x, y)
    return maybe_scalar((x - center_x) * np.asarray(u_x) + y * np.asarray(u_y))


def gradient_norm(field, x, y):
    u_x, u_y = field.gradient(x, y)
    return maybe_scalar(np.hypot(u_x, u_y))


def make_field(
    k: int, roots: Sequence[float], epsilon: float, alpha=DEFAULT_ALPHA, h=DEFAULT_H
) -> ImplicitField:
    """Shortcut to build the field of a freshly validated configuration"""
    return ImplicitField(RootConfig(k=k, roots=roots, epsilon=epsilon, alpha=alpha, h=h))
