import logging
from dataclasses import dataclass, replace

import numpy as np

from torsion_landscape.utils import InvalidConfigError, Pluggable

logger = logging.getLogger(__name__)


class BaseNonlinearity:
    """
    Base class of the right hand sides f of -Delta u = lambda f(u).
    Derived classes set the class attribute ``name`` under which they are
    registered and implement ``f`` and ``f_prime`` for numpy arrays.
    """

    name = None

    def f(self, u):
        raise NotImplementedError

    def f_prime(self, u):
        raise NotImplementedError

    def __repr__(self):
        return f"{self.__class__.__name__}()"


class ConstNonlinearity(BaseNonlinearity):
    """f(u) = c, the torsion problem scaled by c"""

    name = "const"

    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def f(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.value)

    def f_prime(self, u):
        return np.zeros_like(np.asarray(u, dtype=float))

    def __repr__(self):
        return f"ConstNonlinearity({self.value})"


class LinearNonlinearity(BaseNonlinearity):
    """f(u) = 1 + u"""

    name = "linear"

    def f(self, u):
        return 1.0 + np.asarray(u, dtype=float)

    def f_prime(self, u):
        return np.ones_like(np.asarray(u, dtype=float))


class ExpNonlinearity(BaseNonlinearity):
    """f(u) = exp(u), the Gelfand problem"""

    name = "exp"

    def f(self, u):
        return np.exp(u)

    def f_prime(self, u):
        return np.exp(u)


class Nonlinearities(Pluggable):
    """
    Registry of the available nonlinearities.
    Plugins are stored by their ``name``, new ones can be added by

        Nonlinearities.add_plugin_class(MyNonlinearity)
    """

    @classmethod
    def add_plugin_class(cls, plugin_class, replace=True):
        """Convenience function to add a class directly to the plugins"""
        logger.debug(f"Registering nonlinearity {plugin_class.name}")
        cls.add_plugin(plugin_class.name, plugin_class, replace=replace)

    @classmethod
    def create(cls, name: str, **kwargs) -> BaseNonlinearity:
        """Instantiate the registered nonlinearity ``name``"""
        try:
            plugin_class = cls.get_plugin(name)
        except KeyError:
            raise InvalidConfigError(
                f"Unknown nonlinearity {name!r}, choose one of {cls.get_plugin_names()}"
            )
        return plugin_class(**kwargs)


for plugin_class in [ConstNonlinearity, LinearNonlinearity, ExpNonlinearity]:
    Nonlinearities.add_plugin_class(plugin_class, replace=False)


@dataclass(frozen=True)
class NonlinearProblem:
    """-Delta u = lam f(u) in the domain, u = 0 on its boundary"""

    nonlinearity: BaseNonlinearity
    lam: float

    def __post_init__(self):
        f0 = float(self.nonlinearity.f(0.0))
        if not f0 > 0:
            raise InvalidConfigError(
                f"The nonlinearity {self.nonlinearity!r} needs f(0) > 0, got {f0}"
            )
        if not self.lam > 0:
            raise InvalidConfigError(f"lambda must be positive, got {self.lam}")

    @property
    def f0(self) -> float:
        return float(self.nonlinearity.f(0.0))

    def f(self, u):
        return self.nonlinearity.f(u)

    def f_prime(self, u):
        return self.nonlinearity.f_prime(u)

    def with_lambda(self, lam: float) -> "NonlinearProblem":
        return replace(self, lam=lam)
