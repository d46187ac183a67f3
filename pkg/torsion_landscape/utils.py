import logging
from collections import defaultdict

import numpy as np

logger = logging.getLogger(__name__)


class Pluggable:
    """
    Helper class for everything which can be extended by plugins.
    Basically just a mapping of a name to the stored plugin
    for ever class.
    Please note that the plugins are stored
    in this single class, which makes simple extensions possible.
    """

    __plugins = defaultdict(dict)

    @classmethod
    def add_plugin(cls, name, plugin, replace=True):
        """Add a plugin with the given name"""
        if not replace and name in Pluggable.__plugins[cls]:
            return

        Pluggable.__plugins[cls][name] = plugin

    @classmethod
    def get_plugin(cls, name):
        """Get a plugin with the given name"""
        return Pluggable.__plugins[cls][name]

    @classmethod
    def get_plugins(cls):
        """Return all registered plugins"""
        return list(Pluggable.__plugins[cls].values())

    @classmethod
    def get_plugin_names(cls):
        """Return the names of all registered plugins, sorted"""
        return sorted(Pluggable.__plugins[cls].keys())


class TorsionLandscapeError(Exception):
    """Base class of all errors raised by ``torsion_landscape``"""


class InvalidConfigError(TorsionLandscapeError, ValueError):
    """A construction parameter, window or root list is not admissible"""


class DegeneratePointError(TorsionLandscapeError, ArithmeticError):
    """
    The level-curve curvature was queried at a point where
    the gradient (almost) vanishes.
    """

    def __init__(self, x, y, grad_norm, tolerance):
        self.point = (float(x), float(y))
        self.grad_norm = float(grad_norm)
        super().__init__(
            f"Curvature undefined at ({x:.6g}, {y:.6g}): |grad u| = {grad_norm:.3e} "
            f"is below the tolerance {tolerance:.3e}"
        )


class ConstructionError(TorsionLandscapeError):
    """
    The domain could not be constructed, typically
    because epsilon is too large.
    """


class EnclosureError(ConstructionError):
    """The extracted component reaches the edge of the sampling window"""


class IndeterminateCountError(TorsionLandscapeError):
    """A component count did not stabilise under resolution doubling"""


class CertificateError(TorsionLandscapeError):
    """A certificate could not be evaluated on the given extraction"""


class InconsistencyError(TorsionLandscapeError):
    """Two independent measurements of the same property disagree"""


class ResolutionError(TorsionLandscapeError):
    """The requested grid spacing does not resolve the domain"""


class SolverError(TorsionLandscapeError):
    """A linear solve did not converge"""


class NoSolutionError(SolverError):
    """The Newton iteration for the semilinear problem diverged"""


class EigenvalueError(SolverError):
    """The inverse power iteration stagnated"""


class LoggableArray:
    """Small helper class to print arrays and contours in logging messages"""

    def __init__(self, values):
        self.values = values

    def __str__(self):
        values = self.values
        if hasattr(values, "vertices"):
            state = "closed" if values.closed else "open"
            return f"Contour: {len(values)} vertices, {state}, level {values.level:g}"

        values = np.asarray(values)
        if values.size == 0:
            return f"Array: shape {values.shape}, empty"
        if np.issubdtype(values.dtype, np.bool_):
            return f"Array: shape {values.shape}, {int(values.sum())} set"
        return (
            f"Array: shape {values.shape}, "
            f"range [{np.nanmin(values):.6g}, {np.nanmax(values):.6g}]"
        )


def as_float_array(*values):
    """
    Broadcast the given scalars or arrays against each other
    and return them as float arrays
    """
    return np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in values])


def maybe_scalar(value):
    """Return a python float for 0-d arrays, the array otherwise"""
    value = np.asarray(value)
    if value.ndim == 0:
        return float(value)
    return value
