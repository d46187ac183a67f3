from time import sleep

import pytest

from torsion_landscape import Context
from torsion_landscape.server.app import _init_app, app

from tests.integration.fixtures import K2_ROOTS

# needed for the testclient
pytest.importorskip("requests")


@pytest.fixture(scope="module")
def app_client():
    c = Context()
    _init_app(app, c)

    # late import for the importskip
    from fastapi.testclient import TestClient

    yield TestClient(app)

    app.client.close()


def test_routes(app_client):
    assert app_client.get("/v1/predictions").status_code == 200
    assert app_client.get("/v1/verify").status_code == 405
    assert app_client.get("/v1/status/some-wrong-uuid").status_code == 404
    assert app_client.delete("/v1/cancel/some-wrong-uuid").status_code == 404
    assert app_client.get("/v1/cancel/some-wrong-uuid").status_code == 405


def test_predictions(app_client):
    response = app_client.get("/v1/predictions?k=2&roots=-2,-1,1,2&epsilon=0.01")
    assert response.status_code == 200

    result = response.json()

    assert result["kind"] == "prediction"
    assert result["x_enclosure"] == pytest.approx(3000 ** 0.25)
    assert result["eps_bound"] == pytest.approx(0.25 ** (1 / 1.5))
    assert "x_enclosure" in result["_meta"]


def test_predictions_default_roots(app_client):
    result = app_client.get("/v1/predictions?k=3").json()

    assert result["kind"] == "prediction"
    assert len(result["rect"]) == 4


@pytest.mark.parametrize("roots", ["2,1,-1,-2", "-2,-1,1", "a,b,c,d"])
def test_wrong_predictions(app_client, roots):
    response = app_client.get(f"/v1/predictions?k=2&roots={roots}")
    assert response.status_code == 422

    result = response.json()

    assert "error" in result
    assert "message" in result["error"]


def test_wrong_verify(app_client):
    response = app_client.post("/v1/verify", json={"k": 1, "epsilon": 0.001})
    assert response.status_code == 422
    result = response.json()
    assert list(result) == ["error"]
    assert sorted(result["error"]) == ["message", "type"]
    assert result["error"]["type"] == "InvalidConfigError"

    response = app_client.post("/v1/verify", json={"k": "many"})
    assert response.status_code == 422


def test_verify_cancel(app_client):
    response = app_client.post(
        "/v1/verify", json={"k": 2, "roots": list(K2_ROOTS), "epsilon": 0.001}
    )
    assert response.status_code == 200

    cancel_url = response.json()["cancelUri"]

    response = app_client.delete(cancel_url)
    assert response.status_code == 200

    response = app_client.delete(cancel_url)
    assert response.status_code == 404


def test_verify(app_client):
    response = app_client.post(
        "/v1/verify", json={"k": 2, "roots": list(K2_ROOTS), "epsilon": 0.001}
    )
    assert response.status_code == 200

    result = get_result_or_error(app_client, response)

    assert result["kind"] == "certificates"
    assert result["passed"] is True
    assert result["parameters"]["roots"] == list(K2_ROOTS)
    assert result["p1_components"]["count"] == 2


def test_verify_construction_error(app_client):
    response = app_client.post(
        "/v1/verify", json={"k": 2, "roots": list(K2_ROOTS), "epsilon": 1.0}
    )
    assert response.status_code == 200

    result = get_result_or_error(app_client, response)

    assert result["kind"] == "error"
    assert result["error"]["type"] == "EnclosureError"


def get_result_or_error(app_client, response):
    result = response.json()

    assert "nextUri" in result
    assert "error" not in result

    next_url = result["nextUri"]

    counter = 0
    while True:
        response = app_client.get(next_url)
        assert response.status_code == 200

        result = response.json()

        if result.get("nextUri") is None:
            break

        next_url = result["nextUri"]

        counter += 1
        assert counter <= 600

        sleep(0.2)

    return result
