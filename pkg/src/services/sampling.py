from __future__ import annotations

import logging
from collections import Counter
from typing import Iterable, Optional, Sequence

import numpy as np

from src.exceptions import (
    GraphMismatchError,
    InsufficientDataError,
    NoThermalFitError,
    ParameterError,
)
from src.models import CouplingGraph, EnergyHistogram, LevelStat, SpectrumTable, SpinSample, TempFit
from src.schemas import FitProbability, TieBreak
from src.services.graph import ising_energy
from src.services.oracle import canonical_index

logger = logging.getLogger(__name__)


def read_spins(alpha, tie_break: TieBreak = TieBreak.PLUS) -> np.ndarray:
    """
    Ising spins from the real quadratures: ``sigma_i = sign(Re alpha_i)``, an
    exact zero mapped to ``tie_break``.

    :param alpha: Field amplitudes.
    :type alpha: array-like of complex
    :param tie_break: Spin assigned when ``Re alpha_i == 0``.
    :type tie_break: TieBreak
    :return: Spins as int8.
    :rtype: np.ndarray
    """
    re = np.real(np.asarray(alpha))
    if not np.all(np.isfinite(np.asarray(alpha))):
        raise ParameterError("cannot read spins from non-finite amplitudes")
    tie = 1 if tie_break == TieBreak.PLUS else -1
    spins = np.where(re > 0, 1, np.where(re < 0, -1, tie))
    return spins.astype(np.int8)


def spin_sample(g: CouplingGraph, t: float, alpha, tie_break: TieBreak = TieBreak.PLUS) -> SpinSample:
    sigma = read_spins(alpha, tie_break)
    return SpinSample(t=t, sigma=sigma, energy=ising_energy(g, sigma))


def new_histogram(g: CouplingGraph) -> EnergyHistogram:
    return EnergyHistogram(n=g.n, graph_digest=g.digest)


def accumulate(hist: EnergyHistogram, sample: SpinSample | np.ndarray) -> EnergyHistogram:
    """
    Count one sample under its canonical configuration (spin 0 up).

    :param hist: Histogram to update in place.
    :type hist: EnergyHistogram
    :param sample: Spin sample or bare spin vector.
    :type sample: SpinSample | np.ndarray
    :return: The same histogram.
    :rtype: EnergyHistogram
    """
    sigma = sample.sigma if isinstance(sample, SpinSample) else np.asarray(sample)
    if sigma.shape != (hist.n,):
        raise ParameterError(f"sample has {sigma.shape} spins, histogram expects {hist.n}")
    hist.counts[canonical_index(sigma)] += 1
    hist.total += 1
    return hist


def merge_histograms(*hists: EnergyHistogram) -> EnergyHistogram:
    """Count addition; associative and commutative, so usable as a parallel reduce."""
    if not hists:
        raise ParameterError("nothing to merge")
    first = hists[0]
    # an empty digest matches any graph of the same size
    digests = {hist.graph_digest for hist in hists if hist.graph_digest}
    if len(digests) > 1 or any(hist.n != first.n for hist in hists):
        raise GraphMismatchError("histograms were recorded on different graphs")
    merged = Counter()
    total = 0
    for hist in hists:
        merged.update(hist.counts)
        total += hist.total
    digest = digests.pop() if digests else first.graph_digest
    return EnergyHistogram(n=first.n, graph_digest=digest, counts=merged, total=total)


def _check_same_graph(hist: EnergyHistogram, spectrum: SpectrumTable) -> None:
    if hist.n != spectrum.n:
        raise GraphMismatchError(f"histogram has {hist.n} spins, spectrum {spectrum.n}")
    if hist.graph_digest and spectrum.graph_digest and hist.graph_digest != spectrum.graph_digest:
        raise GraphMismatchError("histogram and spectrum come from different graphs")


def level_counts(hist: EnergyHistogram, spectrum: SpectrumTable) -> np.ndarray:
    _check_same_graph(hist, spectrum)
    counts = np.zeros(len(spectrum.levels), dtype=np.int64)
    if hist.counts:
        keys = np.fromiter(hist.counts.keys(), dtype=np.int64)
        values = np.fromiter(hist.counts.values(), dtype=np.int64)
        np.add.at(counts, spectrum.level_index[keys], values)
    return counts


def per_energy_probabilities(hist: EnergyHistogram, spectrum: SpectrumTable) -> list[LevelStat]:
    """
    Per-level statistics: ``P(E)`` is the fraction of samples at level E and
    ``P(E) / n(E)`` the per-configuration probability. Unvisited levels report zero.

    :param hist: Sample histogram.
    :type hist: EnergyHistogram
    :param spectrum: Spectrum of the same graph.
    :type spectrum: SpectrumTable
    :return: One entry per level, ascending in energy.
    :rtype: list[LevelStat]
    """
    counts = level_counts(hist, spectrum)
    total = max(hist.total, 1)
    stats = []
    for level, count in zip(spectrum.levels, counts):
        p = count / total
        stats.append(
            LevelStat(
                energy=level.energy,
                multiplicity=level.multiplicity,
                count=int(count),
                p_energy=float(p),
                p_per_config=float(p / level.multiplicity),
            )
        )
    return stats


def fit_points(
    stats: Iterable[LevelStat], probability: FitProbability = FitProbability.PER_CONFIG
) -> list[tuple[float, float, int]]:
    if probability == FitProbability.PER_CONFIG:
        return [(s.energy, s.p_per_config, s.count) for s in stats]
    return [(s.energy, s.p_energy, s.count) for s in stats]


def fit_temperature(
    levels: Sequence[tuple[float, float, int]],
    min_count: int = 20,
    total_samples: Optional[int] = None,
) -> TempFit:
    """
    Weighted least squares of ``ln p`` against ``E`` with weights equal to the
    counts; ``T_eff = -1/slope``. Levels below ``min_count`` are ignored.

    :param levels: ``(energy, probability, count)`` triples.
    :type levels: Sequence[tuple[float, float, int]]
    :param min_count: Smallest count a level needs to enter the fit.
    :type min_count: int
    :param total_samples: Histogram total; defaults to the counts of all given levels.
    :type total_samples: int | None
    :return: Effective temperature with its one-sigma error and the fitted line.
    :rtype: TempFit
    :raises InsufficientDataError: Fewer than three usable levels.
    :raises NoThermalFitError: Non-negative slope.
    """
    usable = [(e, p, c) for e, p, c in levels if c >= min_count and p > 0]
    if len(usable) < 3:
        raise InsufficientDataError(
            f"{len(usable)} energy levels have at least {min_count} counts; 3 are needed"
        )
    energy = np.array([u[0] for u in usable], dtype=np.float64)
    logp = np.log(np.array([u[1] for u in usable], dtype=np.float64))
    weight = np.array([u[2] for u in usable], dtype=np.float64)

    s = weight.sum()
    sx = (weight * energy).sum()
    sy = (weight * logp).sum()
    xc = energy - sx / s
    sxx = (weight * xc * xc).sum()
    if sxx <= 0:
        raise InsufficientDataError("all usable levels share one energy")
    slope = (weight * xc * logp).sum() / sxx
    intercept = (sy - sx * slope) / s
    var_slope = 1.0 / sxx
    var_intercept = 1.0 / s + (sx / s) ** 2 / sxx

    if slope >= 0:
        raise NoThermalFitError(
            f"log-probability does not decrease with energy (slope {slope:.4g})"
        )
    residual = logp - (intercept + slope * energy)
    mean = sy / s
    total_ss = (weight * (logp - mean) ** 2).sum()
    r_squared = 1.0 - (weight * residual**2).sum() / total_ss if total_ss > 0 else 1.0
    return TempFit(
        t_eff=float(-1.0 / slope),
        std_err=float(np.sqrt(var_slope) / slope**2),
        intercept=float(intercept),
        intercept_err=float(np.sqrt(var_intercept)),
        r_squared=float(r_squared),
        n_points=len(usable),
        total_samples=int(sum(c for _, _, c in levels)) if total_samples is None else total_samples,
    )


def success_probability(hist: EnergyHistogram, spectrum: SpectrumTable) -> float:
    """
    Fraction of samples in a ground-state configuration.

    :param hist: Sample histogram.
    :type hist: EnergyHistogram
    :param spectrum: Spectrum of the same graph.
    :type spectrum: SpectrumTable
    :return: Ground-state frequency, 0 for an empty histogram.
    :rtype: float
    """
    counts = level_counts(hist, spectrum)
    if hist.total == 0:
        return 0.0
    return float(counts[0] / hist.total)


def most_visited(hist: EnergyHistogram) -> tuple[int, int]:
    if not hist.counts:
        raise InsufficientDataError("empty histogram")
    return max(hist.counts.items(), key=lambda item: (item[1], -item[0]))


def energy_series(samples: Iterable[SpinSample]) -> np.ndarray:
    return np.array([sample.energy for sample in samples], dtype=np.float64)


def running_success(energies, ground_energy: float, tol: float = 0.0) -> np.ndarray:
    """Cumulative ground-state frequency after each sample."""
    hits = np.abs(np.asarray(energies) - ground_energy) <= tol
    return np.cumsum(hits) / np.arange(1, hits.shape[0] + 1)


def crossing_energy(fits: Sequence[TempFit]) -> tuple[float, float]:
    """
    Least-squares common point ``(E, ln p)`` of the fitted lines
    ``ln p = intercept - E / T_eff`` of several pumps.

    :param fits: At least two fits with different temperatures.
    :type fits: Sequence[TempFit]
    :return: Crossing energy and log-probability.
    :rtype: tuple[float, float]
    """
    if len(fits) < 2:
        raise InsufficientDataError("a crossing needs at least two fitted lines")
    slopes = np.array([-1.0 / fit.t_eff for fit in fits])
    if np.ptp(slopes) == 0:
        raise InsufficientDataError("fitted lines are parallel")
    design = np.column_stack([-slopes, np.ones_like(slopes)])
    intercepts = np.array([fit.intercept for fit in fits])
    (energy, logp), *_ = np.linalg.lstsq(design, intercepts, rcond=None)
    return float(energy), float(logp)


class SpinRecorder:
    """
    Trajectory observer: turns every ``(t, alpha)`` sample into spins, counts it
    and keeps the energy series. Extra sinks receive the raw sample too.
    """

    def __init__(self, g: CouplingGraph, tie_break: TieBreak = TieBreak.PLUS, sinks=()):
        self.graph = g
        self.tie_break = tie_break
        self.histogram = new_histogram(g)
        self.times: list[float] = []
        self.energies: list[float] = []
        self.indices: list[int] = []
        self.sinks = list(sinks)

    def __call__(self, t: float, alpha: np.ndarray) -> None:
        sample = spin_sample(self.graph, t, alpha, self.tie_break)
        accumulate(self.histogram, sample)
        self.indices.append(canonical_index(sample.sigma))
        self.times.append(t)
        self.energies.append(sample.energy)
        for sink in self.sinks:
            sink(t, alpha)
