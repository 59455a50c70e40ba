import math

import pytest
from fastapi.testclient import TestClient

from conftest import CROSS_RECORD, DISK_H0, DISK_RECORD, ODD_RECORD, XX_RECORD
from hypocrit.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200 and r.json()["status"] == "ok"


def test_check(client):
    body = client.post("/check", json={"spec": CROSS_RECORD}).json()
    assert body["satisfied"] and body["kMin"] == 4 and body["n"] == 2


def test_check_violation(client):
    spec = {"P": {"dim": 2, "terms": [{"e": [2, 0], "c": 1}, {"e": [0, 2], "c": -1}]}}
    r = client.post("/check", json={"spec": spec})
    assert r.status_code == 400
    assert r.json()["error"] == "spec" and r.json()["exitCode"] == 2


def test_criterion_disk(client):
    r = client.post("/criterion", json={"spec": DISK_RECORD, "k": 4, "oracle": True})
    body = r.json()
    assert r.status_code == 200
    assert body["value"] == pytest.approx(DISK_H0, rel=1e-8)
    assert body["nonvanishing"] and body["sign"] == "negative"
    assert set(body["routes"]) == {"closedQ0", "semiNumeric", "directOracle"}


def test_criterion_threshold_error(client):
    r = client.post("/criterion", json={"spec": DISK_RECORD, "k": 3})
    assert r.status_code == 400
    assert r.json() == {"error": "domain", "reason": "k below trace-class threshold 4", "exitCode": 2}


def test_validation_error_shape(client):
    r = client.post("/criterion", json={"spec": DISK_RECORD, "k": 4, "tol": -1})
    assert r.status_code == 400
    body = r.json()
    assert body["exitCode"] == 2 and body["reason"].startswith("tol:")


def test_classify_carries_discrepancies(client):
    body = client.post("/classify", json={"spec": CROSS_RECORD, "k": 4}).json()
    names = [d["name"] for d in body["paperDiscrepancies"]]
    assert "c2kClosedFormSign" in names and "reC24Sign" in names
    assert body["tau1Range"]["inf"] == pytest.approx(0.8, abs=1e-6)
    assert body["lemma"]["predictedSign"] == body["report"]["sign"] == "negative"


def test_classify_odd(client):
    body = client.post("/classify", json={"spec": ODD_RECORD, "k": 3}).json()
    assert body["report"]["nonvanishing"] is False
    assert body["lemma"] is None


def test_sweep(client):
    body = client.post("/sweep", json={"spec": CROSS_RECORD, "k": 4,
                                       "alpha": {"min": 0.0, "max": 0.2, "points": 3}}).json()
    assert [r["alpha"] for r in body["rows"]] == [0.0, 0.1, 0.2]
    assert body["rows"][0]["H0"] == pytest.approx(DISK_H0, rel=1e-8)
    assert body["crossings"] == []


def test_sweep_needs_template(client):
    r = client.post("/sweep", json={"spec": DISK_RECORD, "k": 4})
    assert r.status_code == 400


def test_schrodinger(client):
    body = client.post("/schrodinger", json={"W": {"dim": 1, "terms": [{"e": [1], "c": 1}]}}).json()
    assert body["eigenvalue"] == pytest.approx(1.0, abs=1e-6)
    assert body["sqrtEigenvalue"] == pytest.approx(math.sqrt(body["eigenvalue"]))


def test_verify_small(client):
    req = {"spec": XX_RECORD, "k": 3, "hGrid": {"min": 0.1, "max": 0.3, "points": 7},
           "grid": {"R": 4, "N": 120}, "jmax": 2, "eigH": 0.2}
    body = client.post("/verify", json=req).json()
    ex = body["experiment"]
    assert len(ex["hGrid"]) == 7 and len(ex["fit"]) == 3
    assert body["eigenpairCount"] == 240
    assert all("lambda" in p for p in body["eigenpairs"])
    assert all(p["residualU"] <= 1e-8 for p in body["eigenpairs"])


def test_verify_h_too_large(client):
    spec = {"P": {"dim": 1, "terms": [{"e": [2], "c": 1}, {"e": [0], "c": -4.7}]}}
    req = {"spec": spec, "k": 3, "hGrid": {"min": 0.05, "max": 0.1, "points": 4}, "grid": {"R": 4, "N": 100},
           "jmax": 1}
    r = client.post("/verify", json=req)
    assert r.status_code == 400 and "h too large" in r.json()["reason"]
