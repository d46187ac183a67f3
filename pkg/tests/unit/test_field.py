import numpy as np
import pytest

from torsion_landscape.analytic.field import (
    ImplicitField,
    RadialTorsionField,
    RootConfig,
    StripField,
    curvature,
    eval_u,
    eval_v,
    grad_u,
    gradient_norm,
    hess_u,
    make_field,
    radial_derivative,
)
from torsion_landscape.utils import DegeneratePointError, InvalidConfigError

ROOTS = (-2.0, -1.0, 1.0, 2.0)


@pytest.fixture()
def field():
    return make_field(2, ROOTS, 1e-3)


@pytest.fixture()
def points():
    rng = np.random.default_rng(42)
    return rng.uniform([-4.0, -1.5], [4.0, 1.5], size=(1000, 2))


def test_value_at_roots(field):
    values = eval_u(field, np.array(ROOTS), 0.0)

    assert np.max(np.abs(values - 0.5)) <= 1e-12


def test_value_at_origin():
    field = make_field(2, ROOTS, 0.01)

    assert eval_v(field, 0.0, 0.0) == pytest.approx(-4.0)
    assert eval_u(field, 0.0, 0.0) == pytest.approx(0.496, abs=1e-12)


def test_restriction(field):
    xs = np.linspace(-3, 3, 13)

    assert np.allclose(field.restriction(xs), -(xs ** 4 - 5 * xs ** 2 + 4))
    assert np.allclose(field.restriction(xs), field.v(xs, 0.0))


def test_restriction_identity(field):
    xs = np.linspace(-3, 3, 101)

    np.testing.assert_allclose(
        eval_u(field, xs, 0.0) - 0.5, field.eps_alpha * eval_v(field, xs, 0.0), rtol=0, atol=1e-14
    )


@pytest.mark.parametrize("k", [2, 3])
def test_symmetric_roots(k, points):
    field = make_field(k, RootConfig.canonical_roots(k), 1e-3)
    x, y = points[:, 0], points[:, 1]

    np.testing.assert_allclose(eval_v(field, -x, y), eval_v(field, x, y), rtol=1e-10, atol=1e-9)
    np.testing.assert_allclose(eval_u(field, -x, y), eval_u(field, x, y), rtol=0, atol=1e-12)


def test_laplacian(field, points):
    u_xx, _, u_yy = hess_u(field, points[:, 0], points[:, 1])

    assert np.allclose(u_xx + u_yy, -1.0, rtol=1e-9, atol=0)


def test_gradient_against_differences(field, points):
    x, y = points[:100, 0], points[:100, 1]
    step = 1e-5

    u_x, u_y = grad_u(field, x, y)
    fd_x = (eval_u(field, x + step, y) - eval_u(field, x - step, y)) / (2 * step)
    fd_y = (eval_u(field, x, y + step) - eval_u(field, x, y - step)) / (2 * step)

    np.testing.assert_allclose(fd_x, u_x, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(fd_y, u_y, rtol=1e-6, atol=1e-8)


def test_hessian_against_differences(field, points):
    x, y = points[:100, 0], points[:100, 1]
    step = 1e-5

    u_xx, u_xy, u_yy = hess_u(field, x, y)
    plus_x, minus_x = grad_u(field, x + step, y), grad_u(field, x - step, y)
    plus_y, minus_y = grad_u(field, x, y + step), grad_u(field, x, y - step)

    np.testing.assert_allclose((plus_x[0] - minus_x[0]) / (2 * step), u_xx, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose((plus_y[0] - minus_y[0]) / (2 * step), u_xy, rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose((plus_y[1] - minus_y[1]) / (2 * step), u_yy, rtol=1e-6, atol=1e-8)


def test_scalar_and_array_input(field):
    assert isinstance(field.value(0.5, 0.25), float)
    assert field.value(np.zeros((3, 2)), 0.25).shape == (3, 2)

    u_x, u_y = field.gradient(0.5, 0.25)
    assert isinstance(u_x, float) and isinstance(u_y, float)


def test_curvature_on_unit_circle():
    field = RadialTorsionField()
    angles = np.linspace(0, 2 * np.pi, 97)

    values = curvature(field, np.cos(angles), np.sin(angles))

    assert np.max(np.abs(values - 1.0)) <= 1e-12


def test_curvature_of_strip():
    assert curvature(StripField(), 0.3, 0.5) == 0.0


def test_curvature_degenerate():
    with pytest.raises(DegeneratePointError) as excinfo:
        curvature(RadialTorsionField(), np.array([0.5, 0.0]), np.array([0.0, 0.0]))

    assert excinfo.value.point == (0.0, 0.0)


def test_curvature_degeneracy_scales_with_gradient():
    field = RadialTorsionField()
    # |grad u| = r / 2
    assert curvature(field, 1e-9, 0.0) == pytest.approx(1e9)

    with pytest.raises(DegeneratePointError) as excinfo:
        curvature(field, np.array([1e-9, 2000.0]), np.array([0.0, 0.0]))

    assert excinfo.value.point == (1e-9, 0.0)
    assert excinfo.value.grad_norm == pytest.approx(5e-10)


def test_radial_derivative():
    field = RadialTorsionField()

    assert radial_derivative(field, 1.0, 0.0) == pytest.approx(-0.5)
    assert radial_derivative(field, 0.6, 0.8) == pytest.approx(-0.5)
    assert radial_derivative(field, 1.0, 0.0, center_x=3.0) == pytest.approx(1.0)
    assert gradient_norm(field, 0.6, 0.8) == pytest.approx(0.5)


def test_anchor(field):
    assert field.anchor == (-2.0, 0.0)
    assert StripField().anchor == (0.0, 0.0)
    assert RadialTorsionField(2.0).value(0.0, 0.0) == pytest.approx(1.0)


def test_canonical_config():
    config = RootConfig.canonical(3, 1e-3)

    assert config.roots == (-5.0, -3.0, -1.0, 1.0, 3.0, 5.0)
    assert config.with_epsilon(1e-4).epsilon == 1e-4
    assert config.to_dict() == {
        "k": 3,
        "roots": [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0],
        "epsilon": 1e-3,
        "alpha": 1.5,
        "h": 0.5,
    }


@pytest.mark.parametrize(
    "kwargs",
    [
        {"k": 1, "roots": (-1, 1)},
        {"k": 2, "roots": (-1, 0, 1)},
        {"k": 2, "roots": (-2, -1, -1, 2)},
        {"k": 2, "roots": ROOTS, "epsilon": 0.0},
        {"k": 2, "roots": ROOTS, "epsilon": float("nan")},
        {"k": 2, "roots": ROOTS, "alpha": 2.0},
        {"k": 2, "roots": ROOTS, "h": 1.0},
    ],
)
def test_invalid_config(kwargs):
    kwargs = {"epsilon": 1e-3, **kwargs}
    with pytest.raises(InvalidConfigError):
        RootConfig(**kwargs)


def test_custom_alpha():
    field = ImplicitField(RootConfig(k=2, roots=ROOTS, epsilon=0.01, alpha=1.25))

    assert field.eps_alpha == pytest.approx(0.01 ** 1.25)
    assert field.value(0.0, 0.0) == pytest.approx(0.5 - 4 * 0.01 ** 1.25)
