import numpy as np

from src.models import CouplingGraph, GaussianState
from src.schemas import SimParams
from src.services.graph import gen_sk


def random_state(rng: np.random.Generator, n: int, scale: float = 0.5) -> GaussianState:
    """Random physical-looking state: symmetric u, Hermitian v."""
    alpha = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    m = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    w = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return GaussianState(alpha=alpha, u=0.5 * (m + m.T), v=0.5 * (w + w.conj().T))


def random_graph(rng: np.random.Generator, n: int, gamma: float = 1.0) -> CouplingGraph:
    """Feasible SK instance; a single mode has no couplings."""
    if n == 1:
        return CouplingGraph(np.zeros((1, 1)))
    return gen_sk(n, 0.3 * gamma / n, seed=int(rng.integers(1 << 31)))


def params(**overrides) -> SimParams:
    values = {"gamma": 1.0, "eta": 0.1, "pump": 0.2, "dt": 1e-3, "t_max": 1.0,
              "sample_interval": 0.1, "burn_in": 0.0, "seed": 0}
    values.update(overrides)
    return SimParams(**values)
