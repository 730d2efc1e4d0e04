import numpy as np
import pytest
from fastapi.testclient import TestClient

from qmcurrents.service import app

HALF = float(np.sqrt(0.5))


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    resp = client.get("/v1/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"


def test_spectrum_endpoint(client):
    resp = client.post("/v1/spectrum", json={"lattice": {"V": 3.0}})
    assert resp.status_code == 200
    body = resp.json()
    assert body["table"]["columns"] == ["k", "band", "E_analytic", "E_numeric"]
    assert len(body["table"]["rows"]) == 6
    assert body["config"]["lattice"]["V"] == 3.0
    assert body["any_failed"] is False


def test_unknown_field_rejected(client):
    resp = client.post("/v1/spectrum", json={"lattice": {"V": 3.0, "oops": 1}})
    assert resp.status_code == 422


def test_config_error_payload(client):
    resp = client.post("/v1/spectrum", json={"lattice": {"model": "three_site", "t3": 0.5}})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "config"


def test_solver_error_payload(client):
    # diagonal Hamiltonian plus position measurement: degenerate monodromy kernel
    body = {
        "lattice": {"t1": 0.0, "t2": 0.0, "V": 3.0},
        "bath": None,
        "measurement": {"m": [0.0, 0.0, 1.0], "scheme": "floquet"},
        "sweep": {"variable": "tau", "values": [1.0]},
        "floquet": {"trace_tau": 1.0},
    }
    resp = client.post("/v1/floquet", json=body)
    assert resp.status_code == 500
    assert resp.json()["detail"]["kind"] == "solver"


def test_tau_sweep_failure_flags(client):
    body = {
        "lattice": {"t1": 0.0, "t2": 0.0, "V": 3.0},
        "bath": None,
        "measurement": {"m": [0.0, 0.0, 1.0]},
        "sweep": {"variable": "tau", "values": [1.0]},
    }
    resp = client.post("/v1/tau-sweep", json=body)
    assert resp.status_code == 200
    body = resp.json()
    assert body["any_failed"] is True
    row = body["table"]["rows"][0]
    assert row[-1] is True
    assert row[1] is None


def test_floquet_returns_trace(client):
    body = {
        "lattice": {"V": 3.0},
        "bath": {"gamma0": 0.01, "temperature": 0.1},
        "measurement": {"m": [0.0, HALF, HALF], "scheme": "floquet"},
        "sweep": {"variable": "tau", "values": [5.0]},
        "floquet": {"trace_tau": 5.0, "trace_points": 20},
    }
    resp = client.post("/v1/floquet", json=body)
    assert resp.status_code == 200
    trace = resp.json()["trace"]
    assert trace["columns"] == ["t", "J_H"]
    assert len(trace["rows"]) == 20


def test_json_floats_roundtrip(client):
    resp = client.post("/v1/spectrum", json={"lattice": {"V": 3.0}})
    rows = resp.json()["table"]["rows"]
    from qmcurrents.config import parse_config
    from qmcurrents.experiments import run_spectrum

    direct = run_spectrum(parse_config({"lattice": {"V": 3.0}}))
    for got, want in zip(rows, direct.rows):
        assert got[2] == want[2]  # bit-exact float transport through JSON
        assert got[3] == want[3]
