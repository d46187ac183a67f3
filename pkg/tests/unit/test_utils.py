import numpy as np
import pytest

from torsion_landscape.utils import (
    ConstructionError,
    DegeneratePointError,
    EnclosureError,
    InvalidConfigError,
    LoggableArray,
    NoSolutionError,
    Pluggable,
    SolverError,
    TorsionLandscapeError,
    as_float_array,
    maybe_scalar,
)


class PluginTest1(Pluggable):
    pass


class PluginTest2(Pluggable):
    pass


def test_add_plugin():
    PluginTest1.add_plugin("some_key", "value")

    assert PluginTest1.get_plugin("some_key") == "value"
    assert PluginTest1().get_plugin("some_key") == "value"

    with pytest.raises(KeyError):
        PluginTest2.get_plugin("some_key")


def test_overwrite():
    PluginTest1.add_plugin("some_key", "value")

    assert PluginTest1.get_plugin("some_key") == "value"
    assert PluginTest1().get_plugin("some_key") == "value"

    PluginTest1.add_plugin("some_key", "value_2")

    assert PluginTest1.get_plugin("some_key") == "value_2"
    assert PluginTest1().get_plugin("some_key") == "value_2"

    PluginTest1.add_plugin("some_key", "value_3", replace=False)

    assert PluginTest1.get_plugin("some_key") == "value_2"
    assert PluginTest1().get_plugin("some_key") == "value_2"


def test_plugin_names():
    PluginTest2.add_plugin("b", 2)
    PluginTest2.add_plugin("a", 1)

    assert PluginTest2.get_plugin_names() == ["a", "b"]
    assert sorted(PluginTest2.get_plugins()) == [1, 2]


def test_exception_hierarchy():
    assert issubclass(InvalidConfigError, ValueError)
    assert issubclass(InvalidConfigError, TorsionLandscapeError)
    assert issubclass(EnclosureError, ConstructionError)
    assert issubclass(NoSolutionError, SolverError)
    assert issubclass(DegeneratePointError, ArithmeticError)


def test_degenerate_point_message():
    e = DegeneratePointError(0.0, 1.5, 1e-13, tolerance=1e-10)

    assert e.point == (0.0, 1.5)
    assert e.grad_norm == 1e-13
    assert "1.000e-13" in str(e)
    assert "(0, 1.5)" in str(e)


def test_loggable_array():
    assert str(LoggableArray(np.array([1.0, 3.0]))) == "Array: shape (2,), range [1, 3]"
    assert str(LoggableArray(np.array([True, False, True]))) == "Array: shape (3,), 2 set"
    assert str(LoggableArray(np.array([]))) == "Array: shape (0,), empty"


def test_as_float_array():
    x, y = as_float_array(1, [1, 2, 3])

    assert x.dtype == float
    assert x.shape == y.shape == (3,)
    assert x.tolist() == [1.0, 1.0, 1.0]


def test_maybe_scalar():
    assert isinstance(maybe_scalar(np.float64(2.0)), float)
    assert isinstance(maybe_scalar(np.array(2.0)), float)
    assert maybe_scalar(np.array([1.0, 2.0])).tolist() == [1.0, 2.0]
