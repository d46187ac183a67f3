import numpy as np
import pytest

from torsion_landscape.analytic.field import RootConfig
from torsion_landscape.pde.nonlinearities import BaseNonlinearity, Nonlinearities
from torsion_landscape.utils import ConstructionError, InvalidConfigError

from tests.integration.fixtures import K2_ROOTS


class SquareNonlinearity(BaseNonlinearity):
    name = "square"

    def f(self, u):
        return (1.0 + np.asarray(u, dtype=float)) ** 2

    def f_prime(self, u):
        return 2.0 * (1.0 + np.asarray(u, dtype=float))


def test_config(c):
    c.set_config(("geometry.extract.nx", 1024))
    c.set_config({"geometry.extract.ny": 256, "pde.krylov.rtol": 1e-12})

    assert c.config.get("geometry.extract.nx") == 1024
    assert c.config.get("pde.krylov.rtol") == 1e-12

    c.drop_config(["geometry.extract.nx", "geometry.extract.ny"])
    assert c.config.get("geometry.extract.nx") == 2048


def test_window_for(c):
    c.set_config({"geometry.extract.nx": 512, "geometry.extract.ny": 64})
    prediction = c.predict(RootConfig(k=2, roots=K2_ROOTS, epsilon=0.01))

    window = c.window_for(prediction)

    assert (window.nx, window.ny) == (512, 64)
    assert window.contains(prediction.rect)

    covering = c.window_for(prediction, roots=(-9.0, -1.0, 1.0, 9.0))
    assert covering.xmin < -10.0
    assert covering.xmax > 10.0


def test_register_nonlinearity(c):
    c.register_nonlinearity(SquareNonlinearity)

    assert "square" in Nonlinearities.get_plugin_names()
    assert Nonlinearities.create("square").f(0.0) == 1.0

    with pytest.raises(TypeError):
        c.register_nonlinearity(object)
    with pytest.raises(TypeError):
        c.register_nonlinearity(SquareNonlinearity())


def test_construct_warns_above_bound(c, caplog):
    c.set_config({"geometry.extract.nx": 256, "geometry.extract.ny": 64})

    with pytest.raises(ConstructionError):
        c.construct(RootConfig(k=2, roots=K2_ROOTS, epsilon=1.0))

    assert "is not below the bound" in caplog.text


def test_auto_epsilon_gives_up(c):
    c.set_config({"cli.auto_epsilon.max_steps": 0})

    with pytest.raises(ConstructionError):
        c.auto_epsilon(RootConfig(k=2, roots=K2_ROOTS, epsilon=1.0))


def test_sweep_single_epsilon(c):
    sweep = c.sweep([RootConfig(k=2, roots=K2_ROOTS, epsilon=1e-3)])

    assert len(sweep.entries) == 1
    (entry,) = sweep.entries
    assert entry.error is None
    assert entry.zero_count == 2
    assert entry.min_curvature < 0
    assert entry.rect_max_u < 0
    assert entry.max_radial_derivative <= -0.4
    assert 0 < entry.hausdorff < 0.05
    assert sweep.min_curvature_decreasing
    assert sweep.hausdorff_decreasing

    result = sweep.to_dict()
    assert result["parameters"]["epsilons"] == [1e-3]
    assert "epsilon" not in result["parameters"]
    assert result["trends"] == {
        "min_curvature_decreasing": True,
        "hausdorff_decreasing": True,
    }


def test_sweep_with_failing_entry(c):
    configs = [
        RootConfig(k=2, roots=K2_ROOTS, epsilon=1e-3),
        RootConfig(k=2, roots=K2_ROOTS, epsilon=1.0),
    ]

    sweep = c.sweep(configs, jobs=2)

    assert [entry.epsilon for entry in sweep.entries] == [1.0, 1e-3]
    failed, succeeded = sweep.entries
    assert failed.error["type"] == "EnclosureError"
    assert failed.min_curvature is None
    assert succeeded.error is None
    assert sweep.min_curvature_decreasing


def test_pde_study(c):
    study = c.pde_study(
        RootConfig(k=2, roots=K2_ROOTS, epsilon=1e-3),
        [0.0625, 0.125],
        nonlinearity="linear",
        lambdas=[0.025, 0.2, 0.1, 0.05],
        with_stability=False,
    )

    assert study.parameters["spacings"] == [0.125, 0.0625]
    assert len(study.torsion.orders) == 1
    assert study.solution.grid.spacing == 0.125

    entries = study.convergence.entries
    assert [entry.lam for entry in entries] == [0.2, 0.1, 0.05, 0.025]
    assert study.convergence.decreasing
    assert entries[-1].sup_error <= 0.05 * study.convergence.torsion_sup

    result = study.to_dict()
    assert result["nonlinearity"] == "linear"
    assert result["torsion"]["observed_order"] == study.torsion.observed_order
    assert "threshold" not in result


def test_pde_study_unknown_nonlinearity(c):
    with pytest.raises(InvalidConfigError):
        c.pde_study(RootConfig(k=2, roots=K2_ROOTS, epsilon=1e-3), [0.125], nonlinearity="nope")


@pytest.mark.slow
def test_pde_study_exp(c):
    study = c.pde_study(
        RootConfig(k=2, roots=K2_ROOTS, epsilon=1e-3),
        [0.0625],
        nonlinearity="exp",
        lambdas=[0.2, 0.1, 0.05, 0.025],
        lambda_search=(0.1, 1.0),
    )

    assert study.convergence.decreasing
    assert all(entry.lambda_min >= -1e-8 for entry in study.convergence.entries)
    assert study.threshold.lam is not None
    assert study.to_dict()["threshold"]["history"][0] == [0.1, True]
