import pytest
from fastapi.testclient import TestClient

from homogen.main import app
from homogen.tests.conftest import load_shipped


@pytest.fixture
def client():
    return TestClient(app)


@pytest.fixture
def arrival_payload():
    return load_shipped("arrival_modulated.json").model_dump(mode="json")


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy"}


def test_validate(client, arrival_payload):
    response = client.post("/api/validate", json=arrival_payload)
    assert response.status_code == 200
    body = response.json()
    assert body["k"] == 0
    assert body["mu_minus"] == pytest.approx(0.5)
    assert "keystone" not in body


def test_schema_errors_are_unprocessable(client, arrival_payload):
    arrival_payload["alpha"] = "fast"
    assert client.post("/api/validate", json=arrival_payload).status_code == 422


def test_domain_errors_are_unprocessable(client, arrival_payload):
    arrival_payload["alpha"] = 2.5
    response = client.post("/api/validate", json=arrival_payload)
    assert response.status_code == 422
    assert "AlphaOutOfRange" in response.json()["detail"]


def test_effective(client, arrival_payload):
    response = client.post("/api/effective", json=arrival_payload)
    assert response.status_code == 200
    body = response.json()
    assert body["lambda_min"] > 0
    assert len(body["Theta"]) == 1
    assert abs(body["b"][0][0]) < 1e-10


def test_cell(client, arrival_payload):
    body = client.post("/api/cell", json=arrival_payload).json()
    assert body["gammas"] == [1.0]
    assert body["max_compatibility_defect"] <= 1e-10


def test_mismatched_center_is_unprocessable(client, arrival_payload):
    arrival_payload["kernel"]["center"] = [0.0, 0.5]
    assert client.post("/api/effective", json=arrival_payload).status_code == 422
