import numpy as np
import pytest

from torsion_landscape.analytic.field import (
    ImplicitField,
    RadialTorsionField,
    RootConfig,
    StripField,
)
from torsion_landscape.analytic.predictions import predictions
from torsion_landscape.critical.points import (
    DEGENERATE,
    MAXIMUM,
    MINIMUM,
    SADDLE,
    classify,
    find_critical_points,
    maxima_count_vs_k,
    segment_above,
)
from torsion_landscape.geometry.certificates import (
    check_rect_negativity,
    curvature_sign_changes,
    is_strictly_decreasing,
    min_curvature_trend,
    ray_crossings,
    separation_check,
)
from torsion_landscape.geometry.components import ComponentCount
from torsion_landscape.geometry.domain import label_component, touches_edge
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.utils import EnclosureError, InconsistencyError

SQUARE = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
ROOTS = (-2.0, -1.0, 1.0, 2.0)


def test_ray_crossings():
    inside = ray_crossings(SQUARE, (0.0, 0.0), rays=720)
    assert inside.shape == (720,)
    assert (inside == 1).all()

    outside = ray_crossings(SQUARE, (3.0, 0.0), rays=720)
    assert outside.min() == 0
    assert outside.max() == 2


def test_curvature_sign_changes():
    assert curvature_sign_changes(np.array([1.0, 1.0, -1.0, -1.0])).tolist() == [1, 3]
    assert curvature_sign_changes(np.array([1.0, 2.0, 3.0])).tolist() == []


def test_is_strictly_decreasing():
    assert is_strictly_decreasing([3.0, 2.0, 1.0])
    assert not is_strictly_decreasing([3.0, 3.0])
    assert is_strictly_decreasing([1.0])
    assert is_strictly_decreasing([])


def test_min_curvature_trend_records_failures():
    configs = [RootConfig(k=2, roots=ROOTS, epsilon=eps) for eps in (1e-2, 1e-3, 1e-4)]

    def measure(config):
        if config.epsilon > 5e-3:
            raise EnclosureError("u is positive on the window edge")
        return -1.0 / config.epsilon

    trend = min_curvature_trend(configs, measure, jobs=2)

    assert [eps for eps, _ in trend.entries] == [1e-3, 1e-4]
    assert [value for _, value in trend.entries] == pytest.approx([-1e3, -1e4])
    assert not trend.decreasing
    assert [eps for eps, _ in trend.failures] == [1e-2]
    assert trend.failures[0][1]["type"] == "EnclosureError"

    trend = min_curvature_trend(configs[1:], lambda config: -config.epsilon)
    assert trend.decreasing
    assert trend.failures == []


def test_label_component():
    mask = np.array(
        [[1, 1, 0, 0], [0, 1, 0, 1], [0, 0, 0, 1], [1, 0, 1, 1]], dtype=bool
    )

    component = label_component(mask, 2, 3)
    assert component.sum() == 4
    assert component[3, 2] and not component[0, 0]
    assert label_component(mask, 0, 0).sum() == 3
    assert label_component(mask, 3, 0).sum() == 1
    assert not label_component(mask, 0, 2).any()

    assert touches_edge(component)
    inner = np.zeros((4, 4), dtype=bool)
    inner[1:3, 1:3] = True
    assert not touches_edge(inner)


def test_rect_negativity():
    config = RootConfig(k=2, roots=ROOTS, epsilon=1e-3)
    result = check_rect_negativity(ImplicitField(config), predictions(config))

    assert result.passed
    assert result.max_u < 0
    assert result.vertical_pass
    assert result.max_u_vertical <= -1.5


def test_rect_negativity_above_bound():
    config = RootConfig(k=2, roots=ROOTS, epsilon=1.0)
    result = check_rect_negativity(ImplicitField(config), predictions(config))

    assert not result.passed
    assert result.max_u > 0


def test_separation_check():
    config = RootConfig(k=2, roots=ROOTS, epsilon=1e-3)
    result = separation_check(ImplicitField(config), [0.0], config.h)

    assert result.passed
    assert result.abscissae == [0.0]
    assert result.max_values[0] < 0.5

    assert not separation_check(ImplicitField(config), [-np.sqrt(2.5)], config.h).passed


@pytest.mark.parametrize(
    "hessian,kind",
    [
        ((-1.0, 0.0, -2.0), MAXIMUM),
        ((1.0, 0.0, 2.0), MINIMUM),
        ((1.0, 0.0, -1.0), SADDLE),
        ((0.0, 2.0, 0.0), SADDLE),
        ((0.0, 0.0, -1.0), DEGENERATE),
        ((-1.0, 1.0, -1.0), DEGENERATE),
    ],
)
def test_classify(hessian, kind):
    assert classify(hessian) == kind


def test_disk_maximum():
    window = GridWindow(-1.25, 1.25, -1.25, 1.25, nx=64, ny=64)

    points = find_critical_points(RadialTorsionField(), window, seeds=(16, 16))

    assert len(points) == 1
    (point,) = points
    assert point.kind == MAXIMUM
    assert point.location == pytest.approx((0.0, 0.0), abs=1e-12)
    assert point.value == pytest.approx(0.25)
    assert point.hessian_eigenvalues == pytest.approx((-0.5, -0.5))
    assert point.to_dict()["kind"] == "maximum"


def test_segment_above():
    field = RadialTorsionField()

    assert segment_above(field, (-0.5, 0.0), (0.5, 0.0), 0.1)
    assert not segment_above(field, (-0.9, 0.0), (0.9, 0.0), 0.1)


def test_component_without_maximum():
    components = ComponentCount(
        level=0.1, count=1, component_seeds=[(0.0, 0.0)], resolution=(16, 16)
    )

    with pytest.raises(InconsistencyError):
        maxima_count_vs_k(RadialTorsionField(), None, components, critical_points=[], k=1)


def test_maxima_pairing():
    field = RadialTorsionField()
    window = GridWindow(-1.25, 1.25, -1.25, 1.25, nx=64, ny=64)
    points = find_critical_points(field, window, seeds=(16, 16))
    components = ComponentCount(
        level=0.1, count=1, component_seeds=[(0.1, 0.1)], resolution=(16, 16)
    )

    result = maxima_count_vs_k(field, None, components, critical_points=points, k=2)

    assert result.count_maxima == 1
    assert result.pairing == [[points[0].location]]
    assert not result.passed


def test_strip_has_no_isolated_maxima():
    window = GridWindow(-1.0, 1.0, -0.5, 0.5, nx=16, ny=16)

    points = find_critical_points(StripField(), window, seeds=(4, 4))

    assert points
    assert all(point.kind == DEGENERATE for point in points)
