import pytest
from fastapi.testclient import TestClient

from app.main import app

client = TestClient(app)

SCENARIO = {"num_vehicles": 3, "noise_db": 9, "lane_speeds": [20, 24, 28]}


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_validate_scenario_normalizes_noise():
    response = client.post("/scenario/validate", json=SCENARIO)
    assert response.status_code == 200
    body = response.json()
    assert body["noise_power"] == pytest.approx(10 ** 0.9)
    assert [v["speed"] for v in body["vehicles"]] == [20, 24, 28]


def test_validate_scenario_lists_violations():
    response = client.post("/scenario/validate", json={**SCENARIO, "num_subchannels": 0, "rri": -1})
    assert response.status_code == 400
    body = response.json()
    assert body["detail"] == "Invalid scenario"
    assert len(body["errors"]) == 2


def test_fairness_endpoint():
    response = client.post("/fairness", json={"scenario": SCENARIO, "windows": [20, 85, 150]})
    assert response.status_code == 200
    body = response.json()
    assert len(body["per_vehicle_index"]) == 3
    assert body["per_vehicle_index"][0] > body["per_vehicle_index"][2]


def test_aoi_endpoint():
    response = client.post("/aoi", json={"scenario": SCENARIO, "windows": [20, 20, 20]})
    assert response.status_code == 200
    body = response.json()
    assert len(body["pi"]) == 4
    assert sum(body["pi"]) == pytest.approx(1.0)
    assert body["network_aoi"] == pytest.approx(sum(body["per_link_aoi"]) / 3)


def test_windows_outside_bounds():
    response = client.post("/aoi", json={"scenario": SCENARIO, "windows": [20, 500, 20]})
    assert response.status_code == 400
    assert "windows[1]" in response.json()["errors"][0]


def test_request_validation_error():
    response = client.post("/fairness", json={"scenario": SCENARIO, "windows": "wide"})
    assert response.status_code == 422
    assert response.json()["errors"][0].startswith("windows")


def test_optimize_endpoint():
    body = {
        "scenario": SCENARIO,
        "optimizer": {"generations": 2, "partitions": 2, "neighborhood_size": 3},
        "operator": "mock-llm",
    }
    response = client.post("/optimize", json=body)
    assert response.status_code == 200
    result = response.json()
    assert result["operator"] == "mock-llm"
    assert len(result["entries"]) >= 1
    assert len(result["selected_windows"]) == 3
    assert all(20 <= w <= 150 for w in result["selected_windows"])


def test_optimize_rejects_unavailable_operator(monkeypatch):
    from app.core import config as settings

    monkeypatch.setattr(settings, "LLM_ENDPOINT", "")
    body = {"scenario": SCENARIO, "optimizer": {"generations": 1, "partitions": 2, "neighborhood_size": 3}, "operator": "llm"}
    response = client.post("/optimize", json=body)
    assert response.status_code == 400
    assert "LLM_ENDPOINT" in response.json()["detail"]
