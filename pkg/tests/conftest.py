import pytest
from fastapi.testclient import TestClient

from main import app
from src.schemas import GraphKind
from src.services.graph import gen_k, gen_sk


@pytest.fixture(scope="module")
def client():
    yield TestClient(app)


@pytest.fixture()
def sk_graph():
    return gen_sk(6, 0.4 / 6, seed=7)


@pytest.fixture()
def k_graph():
    return gen_k(6, 0.4 / 5, seed=3)


@pytest.fixture()
def sk_couplings(sk_graph):
    return {"kind": GraphKind.SK.value, "seed": sk_graph.seed, "couplings": sk_graph.J.tolist()}


@pytest.fixture()
def short_params():
    return {
        "gamma": 1.0,
        "eta": 0.1,
        "dt": 1e-2,
        "t_max": 60.0,
        "sample_interval": 0.1,
        "burn_in": 10.0,
        "seed": 11,
    }
