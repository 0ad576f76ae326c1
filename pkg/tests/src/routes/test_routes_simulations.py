import json

import pytest

from src.services.graph import threshold_pump


def test_simulate(client, sk_graph, sk_couplings, short_params):
    body = {"graph": sk_couplings, "params": short_params, "pump_value": 1.25, "min_count": 5}
    response = client.post("/api/simulations/", data=json.dumps(body))
    assert response.status_code == 200, response.text
    data = response.json()
    assert data["pump"] == pytest.approx(1.25 * threshold_pump(sk_graph, 1.0))
    assert data["pump_ratio"] == pytest.approx(1.25)
    assert data["total_samples"] == 500
    assert sum(level["count"] for level in data["levels"]) == 500
    assert (data["fit"] is None) != (data["fit_error"] is None)


def test_simulate_is_reproducible(client, sk_couplings, short_params):
    body = json.dumps({"graph": sk_couplings, "params": short_params, "pump_value": 0.8})
    first = client.post("/api/simulations/", data=body).json()
    second = client.post("/api/simulations/", data=body).json()
    assert first["levels"] == second["levels"]


def test_simulate_over_step_limit(client, sk_couplings, short_params):
    params = dict(short_params, dt=1e-3, t_max=5000.0)
    response = client.post("/api/simulations/", data=json.dumps({"graph": sk_couplings, "params": params}))
    assert response.status_code == 413, response.status_code


@pytest.mark.parametrize(
    "override", [{"dt": 0.5}, {"burn_in": 100.0}, {"gamma": -1.0}, {"moment_form": "stratonovich"}]
)
def test_simulate_w_invalid_params(override, client, sk_couplings, short_params):
    params = dict(short_params, **override)
    response = client.post("/api/simulations/", data=json.dumps({"graph": sk_couplings, "params": params}))
    assert response.status_code == 422, response.status_code


def test_simulate_blowup(client, sk_couplings, short_params):
    params = dict(short_params, blowup_amplitude=1e-3)
    response = client.post("/api/simulations/", data=json.dumps({"graph": sk_couplings, "params": params}))
    assert response.status_code == 500, response.status_code
    assert response.json()["kind"] == "IntegrationBlowupError"


def test_mean_field(client, sk_graph, sk_couplings, short_params):
    params = dict(short_params, t_max=1000.0, noise=False)
    body = {"graph": sk_couplings, "params": params, "pump_value": 2.0}
    response = client.post("/api/simulations/mean-field", data=json.dumps(body))
    assert response.status_code == 200, response.text
    data = response.json()
    assert data["converged"] is True
    assert len(data["spins"]) == sk_graph.n
    assert set(data["spins"]) <= {-1, 1}
    assert any(abs(x) > 0.1 for x in data["alpha_re"])


def test_simulate_w_negative_seed(client, sk_couplings, short_params):
    params = dict(short_params, seed=-5)
    response = client.post("/api/simulations/", data=json.dumps({"graph": sk_couplings, "params": params}))
    assert response.status_code == 422, response.text
