import numpy as np
import pytest

from torsion_landscape.pde.nonlinearities import (
    BaseNonlinearity,
    ConstNonlinearity,
    ExpNonlinearity,
    LinearNonlinearity,
    NonlinearProblem,
    Nonlinearities,
)
from torsion_landscape.utils import InvalidConfigError


class NegativeNonlinearity(BaseNonlinearity):
    name = "negative"

    def f(self, u):
        return np.asarray(u, dtype=float) - 1.0

    def f_prime(self, u):
        return np.ones_like(np.asarray(u, dtype=float))


def test_builtin_nonlinearities():
    u = np.array([0.0, 0.5, 1.0])

    assert ConstNonlinearity(2.0).f(u).tolist() == [2.0, 2.0, 2.0]
    assert ConstNonlinearity().f_prime(u).tolist() == [0.0, 0.0, 0.0]
    assert LinearNonlinearity().f(u).tolist() == [1.0, 1.5, 2.0]
    assert LinearNonlinearity().f_prime(u).tolist() == [1.0, 1.0, 1.0]
    assert np.allclose(ExpNonlinearity().f(u), np.exp(u))
    assert np.allclose(ExpNonlinearity().f_prime(u), np.exp(u))


def test_registry():
    assert {"const", "exp", "linear"} <= set(Nonlinearities.get_plugin_names())
    assert isinstance(Nonlinearities.create("exp"), ExpNonlinearity)
    assert Nonlinearities.create("const", value=3.0).value == 3.0

    with pytest.raises(InvalidConfigError):
        Nonlinearities.create("not-there")


def test_problem():
    problem = NonlinearProblem(ExpNonlinearity(), lam=0.1)

    assert problem.f0 == 1.0
    assert problem.with_lambda(0.2).lam == 0.2
    assert problem.lam == 0.1
    assert np.allclose(problem.f_prime(np.zeros(2)), 1.0)


def test_invalid_problem():
    with pytest.raises(InvalidConfigError):
        NonlinearProblem(NegativeNonlinearity(), lam=0.1)

    with pytest.raises(InvalidConfigError):
        NonlinearProblem(ConstNonlinearity(), lam=0.0)

    with pytest.raises(InvalidConfigError):
        NonlinearProblem(ConstNonlinearity(0.0), lam=1.0)


def test_repr():
    assert repr(ConstNonlinearity(2.0)) == "ConstNonlinearity(2.0)"
    assert repr(ExpNonlinearity()) == "ExpNonlinearity()"
