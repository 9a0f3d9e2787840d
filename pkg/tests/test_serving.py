# tests/test_serving.py
import numpy as np
import pytest
from fastapi.testclient import TestClient

from src.estimation.vinefit import eval_vine_density
from src.serving.api_server import app_from_env, create_app
from src.storage.model_store import save_model


@pytest.fixture
def client(fitted_model3):
    return TestClient(create_app(fitted_model3))


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "d": 3, "n": 300}


def test_model_summary(client):
    body = client.get("/model").json()
    assert body["d"] == 3
    assert len(body["edges"]) == 3


def test_density_matches_library(client, fitted_model3, gauss3_sample):
    points = gauss3_sample[:5]
    response = client.post("/density", json={"points": points.tolist()})
    assert response.status_code == 200
    assert np.array_equal(np.array(response.json()["densities"]), eval_vine_density(fitted_model3, points))


def test_empty_request(client):
    response = client.post("/density", json={"points": []})
    assert response.status_code == 200
    assert response.json() == {"densities": []}


def test_wrong_dimension_is_rejected(client):
    response = client.post("/density", json={"points": [[0.1, 0.2]]})
    assert response.status_code == 422


def test_malformed_body_is_rejected(client):
    assert client.post("/density", json={"points": "none"}).status_code == 422


def test_app_from_env(fitted_model3, tmp_path, monkeypatch):
    path = tmp_path / "model.json"
    save_model(fitted_model3, path)
    monkeypatch.setenv("VINEKDE_MODEL", str(path))
    response = TestClient(app_from_env()).get("/health")
    assert response.json()["n"] == 300


def test_app_from_env_requires_a_model(monkeypatch):
    monkeypatch.delenv("VINEKDE_MODEL", raising=False)
    with pytest.raises(RuntimeError):
        app_from_env()
