"""
Brute-force reference for small instances: every spin configuration is visited,
so energies, multiplicities and Boltzmann weights are exact.

Configurations are indexed canonically: spin 0 is up and spin ``i >= 1`` is down
iff bit ``i - 1`` of the index is set. The partner ``-sigma`` of a canonical
configuration has the same energy, so multiplicities are twice the canonical counts.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp

from src.conf.config import settings
from src.exceptions import EnumerationLimitError, ParameterError
from src.models import CouplingGraph, SpectrumLevel, SpectrumTable
from src.services.graph import check_spins

logger = logging.getLogger(__name__)

CHUNK = 1 << 16


def default_tolerance(g: CouplingGraph) -> float:
    return 1e-9 * float(np.abs(g.J).max(initial=0.0))


def spins_from_index(index: np.ndarray | int, n: int) -> np.ndarray:
    """Canonical configuration(s) for index (or array of indices)."""
    index = np.asarray(index, dtype=np.int64)
    bits = (index[..., None] >> np.arange(n - 1)) & 1
    tail = 1 - 2 * bits
    head = np.ones(index.shape + (1,), dtype=np.int64)
    return np.concatenate([head, tail], axis=-1).astype(np.int8)


def canonical_index(sigma) -> int:
    s = np.asarray(sigma)
    if s[0] < 0:
        s = -s
    down = (s[1:] < 0).astype(np.int64)
    return int(down @ (1 << np.arange(s.shape[0] - 1, dtype=np.int64)))


def spin_string(sigma) -> str:
    return "".join("+" if s > 0 else "-" for s in np.asarray(sigma))


def delta_energy(g: CouplingGraph, sigma, i: int) -> float:
    """
    Energy change of flipping spin ``i``: ``2 sigma_i sum_j J_ij sigma_j``.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param sigma: Spins, +1 or -1.
    :type sigma: array-like
    :param i: Spin to flip.
    :type i: int
    :return: E(flipped) - E(sigma).
    :rtype: float
    """
    s = check_spins(sigma, g.n)
    if not 0 <= i < g.n:
        raise ParameterError(f"spin index {i} outside 0..{g.n - 1}")
    return float(2.0 * s[i] * (g.J[i] @ s))


def _direct_energies(g: CouplingGraph) -> np.ndarray:
    count = 1 << (g.n - 1)
    energies = np.empty(count)
    for start in range(0, count, CHUNK):
        stop = min(start + CHUNK, count)
        spins = spins_from_index(np.arange(start, stop), g.n).astype(np.float64)
        energies[start:stop] = -0.5 * np.einsum("ki,ij,kj->k", spins, g.J, spins)
    return energies


def _gray_energies(g: CouplingGraph) -> np.ndarray:
    # walk the reflected Gray code, one spin flip per step
    count = 1 << (g.n - 1)
    energies = np.empty(count)
    spins = np.ones(g.n)
    field = g.J @ spins
    energy = -0.5 * spins @ field
    energies[0] = energy
    for step in range(1, count):
        bit = (step & -step).bit_length() - 1
        i = bit + 1
        energy += 2.0 * spins[i] * field[i]
        spins[i] = -spins[i]
        field += 2.0 * spins[i] * g.J[:, i]
        gray = step ^ (step >> 1)
        energies[gray] = energy
    return energies


def enumerate_spectrum(
    g: CouplingGraph,
    tol: float | None = None,
    method: str = "direct",
    max_spins: int | None = None,
) -> SpectrumTable:
    """
    Exact spectrum: energies of all canonical configurations grouped into levels.
    Sorted energies closer than ``tol`` to their predecessor join its level.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param tol: Grouping tolerance; defaults to ``1e-9 max|J|``.
    :type tol: float | None
    :param method: ``direct`` (vectorised recomputation) or ``gray`` (incremental).
    :type method: str
    :param max_spins: Size guard; defaults to the configured limit.
    :type max_spins: int | None
    :return: Levels ascending in energy with multiplicities and examples.
    :rtype: SpectrumTable
    """
    limit = settings.max_enumeration_spins if max_spins is None else max_spins
    if g.n > limit:
        raise EnumerationLimitError(
            f"enumeration of {g.n} spins refused; the limit is {limit} (2^{limit} configurations)"
        )
    tol = default_tolerance(g) if tol is None else tol
    if tol < 0:
        raise ParameterError(f"tolerance must be non-negative, got {tol}")
    if method == "direct":
        energies = _direct_energies(g)
    elif method == "gray":
        energies = _gray_energies(g)
    else:
        raise ParameterError(f"unknown enumeration method {method!r}")

    order = np.argsort(energies, kind="stable")
    ordered = energies[order]
    starts = np.concatenate([[True], np.diff(ordered) > tol])
    level_of_sorted = np.cumsum(starts) - 1
    level_index = np.empty(order.shape[0], dtype=np.int32)
    level_index[order] = level_of_sorted
    first = np.flatnonzero(starts)
    sizes = np.diff(np.append(first, ordered.shape[0]))

    levels = tuple(
        SpectrumLevel(
            energy=float(ordered[k]),
            multiplicity=int(2 * size),
            example=spin_string(spins_from_index(order[k], g.n)),
        )
        for k, size in zip(first, sizes)
    )
    ground = order[: sizes[0]]
    ground_states = []
    for index in np.sort(ground):
        sigma = spins_from_index(index, g.n)
        ground_states.extend([spin_string(sigma), spin_string(-sigma)])
    logger.debug("enumerated %d configurations into %d levels", 2 * order.shape[0], len(levels))
    return SpectrumTable(
        n=g.n,
        tol=tol,
        levels=levels,
        level_index=level_index,
        ground_states=tuple(ground_states),
        graph_digest=g.digest,
    )


def boltzmann_exact(spectrum: SpectrumTable, temperature: float) -> np.ndarray:
    """
    Per-level Boltzmann probabilities ``n(E) exp(-E/T) / Z`` (k_B = 1).

    :param spectrum: Spectrum table.
    :type spectrum: SpectrumTable
    :param temperature: Temperature in energy units.
    :type temperature: float
    :return: Probabilities aligned with ``spectrum.levels``.
    :rtype: np.ndarray
    """
    if not temperature > 0:
        raise ParameterError(f"temperature must be positive, got {temperature}")
    log_weights = np.log(spectrum.multiplicities) - spectrum.energies / temperature
    return np.exp(log_weights - logsumexp(log_weights))
