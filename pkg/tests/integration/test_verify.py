import pytest

from torsion_landscape.cmd import EXIT_OK, main
from torsion_landscape.critical.points import MAXIMUM, SADDLE, find_critical_points


@pytest.fixture(scope="module")
def k2_critical_points(k2_construction):
    return find_critical_points(k2_construction.field, k2_construction.domain)


def test_critical_points(k2_critical_points):
    kinds = [point.kind for point in k2_critical_points]

    assert kinds.count(MAXIMUM) == 2
    assert kinds.count(SADDLE) == 1

    saddle = next(point for point in k2_critical_points if point.kind == SADDLE)
    assert saddle.location == pytest.approx((0.0, 0.0), abs=1e-6)
    assert saddle.value < 0.5
    assert all(point.residual <= 1e-12 for point in k2_critical_points)


def test_critical_points_alternate(k2_critical_points):
    on_axis = sorted(
        (point for point in k2_critical_points if abs(point.location[1]) < 0.05),
        key=lambda point: point.location[0],
    )

    assert [point.kind for point in on_axis] == [MAXIMUM, SADDLE, MAXIMUM]
    saddle_value = on_axis[1].value
    assert all(point.value > saddle_value for point in on_axis[::2])


def test_critical_points_deterministic(k2_construction, k2_critical_points):
    again = find_critical_points(k2_construction.field, k2_construction.domain)

    assert [point.to_dict() for point in again] == [
        point.to_dict() for point in k2_critical_points
    ]


def test_verify_json_is_reproducible(tmp_path):
    paths = []
    for name in ["first", "second"]:
        path = tmp_path / name / "certificates.json"
        code = main(
            [
                "verify",
                "--k",
                "2",
                "--roots",
                "-2,-1,1,2",
                "--epsilon",
                "1e-3",
                "--output-dir",
                str(tmp_path / name),
            ]
        )
        assert code == EXIT_OK
        paths.append(path)

    first, second = (path.read_bytes() for path in paths)
    assert first == second
