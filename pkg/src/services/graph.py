from __future__ import annotations

import logging

import numpy as np
from scipy import linalg

from src.exceptions import InfeasibleRatesError, ParameterError
from src.models import CouplingGraph
from src.schemas import GraphKind

logger = logging.getLogger(__name__)


def _check_size(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise ParameterError(f"mode count must be an integer >= 2, got {n!r}")


def _mirror(n: int, upper: np.ndarray) -> np.ndarray:
    J = np.zeros((n, n))
    rows, cols = np.triu_indices(n, k=1)
    J[rows, cols] = upper
    J[cols, rows] = upper
    return J


def default_scale(kind: GraphKind, n: int, gamma: float = 1.0) -> float:
    """
    Coupling scale that keeps the one-photon rates positive with high probability:
    ``0.4 gamma / n`` for SK standard deviations and ``0.4 gamma / (n - 1)`` for K.

    :param kind: Graph ensemble.
    :type kind: GraphKind
    :param n: Mode count.
    :type n: int
    :param gamma: One-photon base rate.
    :type gamma: float
    :return: Standard deviation (SK) or coupling magnitude (K).
    :rtype: float
    """
    if kind == GraphKind.SK:
        return 0.4 * gamma / n
    if kind == GraphKind.K:
        return 0.4 * gamma / (n - 1)
    raise ParameterError(f"no default scale for graph kind {kind.value}")


def gen_sk(n: int, std_dev: float, seed: int) -> CouplingGraph:
    """
    Sherrington-Kirkpatrick instance: upper-triangle couplings drawn from a
    zero-mean Gaussian and mirrored.

    :param n: Mode count, at least 2.
    :type n: int
    :param std_dev: Standard deviation of the couplings.
    :type std_dev: float
    :param seed: Generator seed.
    :type seed: int
    :return: The generated graph.
    :rtype: CouplingGraph
    """
    _check_size(n)
    if not std_dev > 0:
        raise ParameterError(f"std_dev must be positive, got {std_dev}")
    rng = np.random.default_rng(seed)
    upper = rng.normal(0.0, std_dev, size=n * (n - 1) // 2)
    return CouplingGraph(_mirror(n, upper), kind=GraphKind.SK, seed=seed)


def gen_k(n: int, j0: float, seed: int) -> CouplingGraph:
    """
    Complete random binary graph: every coupling is ``+j0`` or ``-j0`` with equal
    probability.

    :param n: Mode count, at least 2.
    :type n: int
    :param j0: Coupling magnitude.
    :type j0: float
    :param seed: Generator seed.
    :type seed: int
    :return: The generated graph.
    :rtype: CouplingGraph
    """
    _check_size(n)
    if not j0 > 0:
        raise ParameterError(f"j0 must be positive, got {j0}")
    rng = np.random.default_rng(seed)
    signs = 2.0 * rng.integers(0, 2, size=n * (n - 1) // 2) - 1.0
    return CouplingGraph(_mirror(n, j0 * signs), kind=GraphKind.K, seed=seed)


def residual_rates(g: CouplingGraph, gamma: float) -> np.ndarray:
    return gamma - np.abs(g.J).sum(axis=1)


def max_feasible_scale(g: CouplingGraph, gamma: float) -> float:
    row_sums = np.abs(g.J).sum(axis=1)
    worst = row_sums.max()
    return float("inf") if worst == 0 else float(gamma / worst)


def validate_rates(g: CouplingGraph, gamma: float) -> np.ndarray:
    """
    Residual one-photon rates ``gamma - sum_k |J[i][k]|`` of every mode.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param gamma: One-photon base rate.
    :type gamma: float
    :return: Vector of n non-negative rates.
    :rtype: np.ndarray
    :raises InfeasibleRatesError: If any rate is negative; names the worst mode.
    """
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    rates = residual_rates(g, gamma)
    if np.any(rates < 0):
        mode = int(np.argmin(rates))
        raise InfeasibleRatesError(mode, float(rates[mode]), max_feasible_scale(g, gamma))
    return rates


def rescale_to_feasible(
    g: CouplingGraph, gamma: float, margin: float = 0.01
) -> tuple[CouplingGraph, float]:
    """
    Apply the largest uniform rescale that makes every rate non-negative, minus
    ``margin``. Feasible graphs come back unchanged with factor 1.
    """
    if np.all(residual_rates(g, gamma) >= 0):
        return g, 1.0
    factor = (1.0 - margin) * max_feasible_scale(g, gamma)
    logger.warning("rescaling couplings by %.6g to make one-photon rates feasible", factor)
    return g.scaled(factor), factor


def max_eigenvalue(g: CouplingGraph) -> float:
    """
    Largest eigenvalue of the coupling matrix.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :return: lambda_max.
    :rtype: float
    """
    top = linalg.eigvalsh(g.J, subset_by_index=[g.n - 1, g.n - 1])
    return float(top[0])


def threshold_pump(g: CouplingGraph, gamma: float) -> float:
    """
    Oscillation threshold ``(gamma - lambda_max) / 2``: the smallest pump for which
    one collective mode of the linearised mean-field dynamics is amplified.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param gamma: One-photon base rate.
    :type gamma: float
    :return: G_th.
    :rtype: float
    """
    validate_rates(g, gamma)
    return (gamma - max_eigenvalue(g)) / 2.0


def threshold_report(g: CouplingGraph, gamma: float) -> dict:
    rates = validate_rates(g, gamma)
    lambda_max = max_eigenvalue(g)
    return {
        "lambda_max": lambda_max,
        "threshold_pump": (gamma - lambda_max) / 2.0,
        "residual_rates": rates.tolist(),
    }


def check_spins(sigma, n: int) -> np.ndarray:
    spins = np.asarray(sigma)
    if spins.shape != (n,):
        raise ParameterError(f"expected {n} spins, got shape {spins.shape}")
    if not np.all((spins == 1) | (spins == -1)):
        raise ParameterError("spins must be +1 or -1")
    return spins.astype(np.float64)


def ising_energy(g: CouplingGraph, sigma) -> float:
    """
    Classical Ising energy ``-1/2 sum_ij J_ij s_i s_j``.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param sigma: Spins, +1 or -1.
    :type sigma: array-like
    :return: Energy, in the units of J.
    :rtype: float
    """
    s = check_spins(sigma, g.n)
    return float(-0.5 * s @ g.J @ s)
