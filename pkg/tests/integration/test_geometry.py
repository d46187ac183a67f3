import numpy as np
import pytest

from torsion_landscape.analytic.field import StripField
from torsion_landscape.geometry.certificates import (
    curvature_certificate,
    hausdorff_to_strip,
    starshape_certificate,
)
from torsion_landscape.geometry.components import superlevel_component_count
from torsion_landscape.geometry.domain import extract_domain, segment_inside
from torsion_landscape.geometry.window import GridWindow
from torsion_landscape.utils import (
    ConstructionError,
    EnclosureError,
    IndeterminateCountError,
)


class RaisedStripField(StripField):
    @property
    def anchor(self):
        return (0.0, 2.0)


def test_disk_domain(disk_domain):
    boundary = disk_domain.boundary

    assert boundary.closed and boundary.counterclockwise
    assert boundary.signed_area == pytest.approx(np.pi, abs=1e-3)
    assert disk_domain.mask_area == pytest.approx(np.pi, rel=0.02)
    assert disk_domain.diameter == pytest.approx(2 * np.sqrt(2), rel=1e-3)
    assert disk_domain.contains_point == (0.0, 0.0)
    assert np.allclose(boundary.curvature, 1.0, atol=1e-6)
    assert np.allclose(boundary.radial_derivative, -0.5, atol=1e-6)


def test_segment_inside(disk_domain):
    assert segment_inside(disk_domain, -0.9, 0.9)
    assert not segment_inside(disk_domain, -1.1, 0.5)


def test_domain_leaves_window(disk_field):
    window = GridWindow(-0.5, 0.5, -0.5, 0.5, nx=32, ny=32)

    with pytest.raises(EnclosureError):
        extract_domain(disk_field, window)


def test_anchor_outside():
    window = GridWindow(-2.0, 2.0, -3.0, 3.0, nx=32, ny=32)

    with pytest.raises(ConstructionError):
        extract_domain(RaisedStripField(), window)


def test_disk_starshape(disk_domain, disk_field):
    result = starshape_certificate(disk_domain, disk_field, margin=0.1, rays=720)

    assert result.passed
    assert result.max_radial_derivative == pytest.approx(-0.5, abs=1e-6)
    assert result.rays_single_crossing
    assert result.center == (0.0, 0.0)


def test_starshape_far_center(disk_domain, disk_field):
    result = starshape_certificate(disk_domain, disk_field, center_x=5.0)

    assert not result.passed
    assert result.max_radial_derivative > 0
    assert result.min_ray_crossings == 0
    assert not result.rays_single_crossing


def test_disk_curvature(disk_domain, disk_field):
    result = curvature_certificate(disk_domain, disk_field)

    assert result.zero_count == 0
    assert not result.passed
    assert result.min_curvature == pytest.approx(1.0, abs=1e-6)
    assert result.predicted_zeros is None
    assert result.tip_abscissae == pytest.approx((-1.0, 1.0), abs=1e-8)


def test_disk_components(disk_field, disk_window):
    result = superlevel_component_count(
        disk_field, 0.1, disk_window, resolution=(32, 32), max_resolution=(128, 128)
    )

    assert result.count == 1
    assert result.resolution == (32, 32)
    assert result.history == [(32, 32, 1), (64, 64, 1)]
    assert np.hypot(*result.component_seeds[0]) < 0.1
    assert result.to_dict()["count"] == 1


def test_components_not_stable(disk_field, disk_window):
    with pytest.raises(IndeterminateCountError):
        superlevel_component_count(
            disk_field, 0.1, disk_window, resolution=(32, 32), max_resolution=(32, 32)
        )


def test_construction_identity(k2_construction):
    field = k2_construction.field

    assert np.max(np.abs(field.value(np.array(field.config.roots), 0.0) - 0.5)) <= 1e-12


def test_construction_domain(k2_construction):
    domain = k2_construction.domain
    prediction = k2_construction.prediction

    assert k2_construction.below_eps_bound
    assert domain.contains_point == (-2.0, 0.0)
    assert segment_inside(domain, -2.0, 2.0)
    xmin, xmax, ymin, ymax = domain.boundary.bounds
    rect = prediction.rect
    assert rect[0] < xmin and xmax < rect[1] and rect[2] < ymin and ymax < rect[3]
    assert np.max(np.abs(field_values(k2_construction))) <= 1e-9
    assert len(k2_construction.level_curves) == 2


def field_values(construction):
    boundary = construction.domain.boundary
    return construction.field.value(boundary.x, boundary.y)


def test_tip_abscissae(k2_construction):
    prediction = k2_construction.prediction
    result = curvature_certificate(k2_construction.domain, k2_construction.field, prediction)

    assert result.predicted_tip_abscissa == pytest.approx(prediction.tip_abscissa)
    assert max(result.tip_errors) < 0.2
    assert result.bottom_point is not None
    assert -1.1 < result.bottom_point[1] < -0.9


def test_hausdorff(k2_construction):
    distance = hausdorff_to_strip(k2_construction.domain, half_width=2.0)

    assert 0 < distance < 0.05
