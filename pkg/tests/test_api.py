import pytest
from fastapi.testclient import TestClient

from inverse_erm.main import app
from inverse_erm.schemas.results import CheckResult, VerificationReport

client = TestClient(app)


def test_health():
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy"}


def test_get_rates():
    response = client.get("/api/rates", params={"s": 2, "q": 1, "d": 1})
    assert response.status_code == 200
    body = response.json()
    assert body["success"] is True
    assert body["content"]["mise_exponent"] == pytest.approx(4.0 / 7.0)
    assert body["content"]["dense_eligible"] is True


def test_get_rates_radon_and_additive():
    response = client.get("/api/rates", params={"s": 2, "q": 0.5, "d": 2, "radon": True})
    assert response.json()["content"]["radon_mise_exponent"] == pytest.approx(4.0 / 7.0)
    response = client.get("/api/rates", params={"additive": "2:0,2:1"})
    assert response.json()["content"]["component_1_mise_exponent"] == pytest.approx(0.8)


def test_get_rates_missing_s():
    response = client.get("/api/rates", params={"q": 1})
    assert response.status_code == 400
    assert response.json()["success"] is False
    assert response.json()["key"] == "s"


def test_get_rates_bad_additive():
    response = client.get("/api/rates", params={"additive": "2:-1"})
    assert response.status_code == 400
    assert response.json()["key"] == "additive"


def test_estimate(deconvolution_sections):
    response = client.post("/api/experiments/estimate",
                           json={"config": deconvolution_sections, "seed": 4, "n": 100})
    assert response.status_code == 200
    content = response.json()["content"]
    assert content["name"] == "deconv_small"
    assert content["n"] == 100.0
    assert content["seed"] == 4
    assert content["mise"] >= 0.0
    assert content["certificate"]["kind"] == "exact_grid_argmin"


def test_estimate_dense(deconvolution_sections):
    deconvolution_sections["experiment"]["estimator"] = "dense"
    response = client.post("/api/experiments/estimate", json={"config": deconvolution_sections})
    assert response.status_code == 200
    certificate = response.json()["content"]["certificate"]
    assert certificate["kind"] == "ellipsoid_projection"
    assert certificate["dense_eligible"] is True


def test_estimate_bad_config(deconvolution_sections):
    deconvolution_sections["ellipsoid"]["shape"] = "round"
    response = client.post("/api/experiments/estimate", json={"config": deconvolution_sections})
    assert response.status_code == 400
    assert response.json()["key"] == "ellipsoid.shape"


def test_estimate_rejects_small_n(deconvolution_sections):
    response = client.post("/api/experiments/estimate", json={"config": deconvolution_sections, "n": 1})
    assert response.status_code == 422


def test_scalings(deconvolution_sections):
    deconvolution_sections["operator"] = {"kind": "identity"}
    response = client.post("/api/experiments/scalings",
                           json={"config": deconvolution_sections, "delta_grid": [0.1, 0.05, 0.02, 0.01]})
    assert response.status_code == 200
    content = response.json()["content"]
    assert len(content["rows"]) == 4
    assert content["theory_exponent"] == pytest.approx(0.4)
    assert isinstance(content["exponents_match"], bool)
    assert isinstance(content["passed"], bool)
    assert not content["passed"] or content["exponents_match"]


def test_scalings_without_grid(deconvolution_sections):
    response = client.post("/api/experiments/scalings", json={"config": deconvolution_sections})
    assert response.status_code == 400


def test_verify(monkeypatch):
    report = VerificationReport(level="fast", checks=[
        CheckResult(name="gram_fourier_1d", passed=True, max_residual=1e-15, tolerance=1e-10)
    ])
    monkeypatch.setattr("inverse_erm.controllers.experiment.run_verification_suite", lambda level: report)
    response = client.get("/api/experiments/verify")
    assert response.status_code == 200
    content = response.json()["content"]
    assert content["passed"] is True
    assert content["checks"][0]["name"] == "gram_fourier_1d"


def test_verify_unknown_level():
    response = client.get("/api/experiments/verify", params={"level": "thorough"})
    assert response.status_code == 422
