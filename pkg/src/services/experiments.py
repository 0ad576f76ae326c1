"""
Experiment orchestration shared by the command line and the HTTP API: pump
resolution, one simulated trajectory with its statistics, and pump sweeps.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError

from src.conf.config import settings
from src.exceptions import (
    InsufficientDataError,
    IntegrationBlowupError,
    IsingSamplerError,
    NoThermalFitError,
    ParameterError,
)
from src.models import CouplingGraph, GaussianState, LevelStat, SpectrumTable, TempFit
from src.schemas import FitProbability, GraphKind, PumpMode, SimParams, TieBreak
from src.services import dynamics, graph, oracle, sampling
from src.services.seeds import derive_seed, make_rng
from src.utils.stats import integrated_autocorrelation_time

logger = logging.getLogger(__name__)

MEAN_FIELD_KICK = 1e-3


def build_params(**values) -> SimParams:
    """Validated :class:`SimParams`; validation failures become :class:`ParameterError`."""
    try:
        return SimParams(**values)
    except ValidationError as err:
        raise ParameterError(f"invalid simulation parameters: {err}")


def generate_graph(
    kind: GraphKind,
    n: int,
    seed: int,
    scale: Optional[float] = None,
    gamma: float = 1.0,
    rescale: bool = False,
    margin: float | None = None,
) -> tuple[CouplingGraph, float, dict]:
    """
    Draw an SK or K instance and check its one-photon rates.

    :param kind: ``SK`` or ``K``.
    :type kind: GraphKind
    :param n: Mode count.
    :type n: int
    :param seed: Graph seed.
    :type seed: int
    :param scale: SK standard deviation or K magnitude; defaults to a feasible scale.
    :type scale: float | None
    :param gamma: One-photon base rate.
    :type gamma: float
    :param rescale: Shrink an infeasible instance instead of failing.
    :type rescale: bool
    :param margin: Relative safety margin of the rescale.
    :type margin: float | None
    :return: Graph, applied rescale factor and threshold report.
    :rtype: tuple[CouplingGraph, float, dict]
    :raises InfeasibleRatesError: Infeasible rates without ``rescale``.
    """
    scale = graph.default_scale(kind, n, gamma) if scale is None else scale
    if kind == GraphKind.SK:
        g = graph.gen_sk(n, scale, seed)
    elif kind == GraphKind.K:
        g = graph.gen_k(n, scale, seed)
    else:
        raise ParameterError(f"cannot generate graphs of kind {kind.value}")
    factor = 1.0
    if rescale:
        margin = settings.feasibility_margin if margin is None else margin
        g, factor = graph.rescale_to_feasible(g, gamma, margin)
    report = graph.threshold_report(g, gamma)
    report["scale"] = scale * factor
    report["rescale_factor"] = factor
    return g, factor, report


def resolve_pump(g: CouplingGraph, gamma: float, mode: PumpMode, value: float) -> tuple[float, float]:
    """
    Absolute pump and pump ratio ``G / G_th``.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param gamma: One-photon base rate.
    :type gamma: float
    :param mode: Whether ``value`` is a ratio or an absolute pump.
    :type mode: PumpMode
    :param value: Pump ratio or pump.
    :type value: float
    :return: ``(G, G / G_th)``.
    :rtype: tuple[float, float]
    """
    if value < 0:
        raise ParameterError(f"pump must be non-negative, got {value}")
    g_th = graph.threshold_pump(g, gamma)
    if mode == PumpMode.RATIO:
        if not g_th > 0:
            raise ParameterError(f"threshold pump {g_th:.6g} is not positive; use an absolute pump")
        return value * g_th, value
    return value, value / g_th if g_th > 0 else math.nan


def spectrum_for(g: CouplingGraph) -> SpectrumTable | None:
    if g.n > settings.max_enumeration_spins:
        logger.warning("%d spins exceed the enumeration limit; no per-energy statistics", g.n)
        return None
    return oracle.enumerate_spectrum(g)


def kicked_vacuum(n: int, rng: np.random.Generator) -> GaussianState:
    """Vacuum with a small random real displacement, the start of mean-field runs."""
    state = dynamics.init_vacuum(n)
    state.alpha = MEAN_FIELD_KICK * rng.standard_normal(n) + 0j
    return state


@dataclass
class SimulationOutcome:
    graph: CouplingGraph
    params: SimParams
    pump_ratio: float
    recorder: sampling.SpinRecorder
    spectrum: SpectrumTable | None
    levels: list[LevelStat] = field(default_factory=list)
    fit: TempFit | None = None
    fit_error: str | None = None
    success_probability: float = math.nan
    autocorrelation_time: float = math.nan
    blowup: IntegrationBlowupError | None = None

    @property
    def status(self) -> str:
        return "partial" if self.blowup is not None or self.fit is None else "ok"

    @property
    def error(self) -> IsingSamplerError | None:
        if self.blowup is not None:
            return self.blowup
        if self.fit is None:
            return InsufficientDataError(self.fit_error or "no fit")
        return None


def fit_levels(
    levels: Sequence[LevelStat],
    min_count: int,
    probability: FitProbability,
    autocorrelation_time: float = math.nan,
    *,
    sample_interval: float | None = None,
    total_samples: int | None = None,
) -> tuple[TempFit | None, str | None]:
    """
    Boltzmann fit of simulated levels. When the energy series is correlated the
    errors are widened by the square root of its statistical inefficiency
    ``autocorrelation_time / sample_interval``.

    :return: The fit, or ``None`` and the reason it failed.
    :rtype: tuple[TempFit | None, str | None]
    """
    try:
        fit = sampling.fit_temperature(
            sampling.fit_points(levels, probability), min_count, total_samples=total_samples
        )
    except (InsufficientDataError, NoThermalFitError) as err:
        logger.warning("no temperature fit: %s", err.message)
        return None, err.message
    inflation = 1.0
    if sample_interval and math.isfinite(autocorrelation_time):
        inflation = math.sqrt(max(1.0, autocorrelation_time / sample_interval))
    return dataclasses.replace(
        fit,
        std_err=fit.std_err * inflation,
        intercept_err=fit.intercept_err * inflation,
        autocorrelation_time=autocorrelation_time,
    ), None


def simulate(
    g: CouplingGraph,
    params: SimParams,
    *,
    pump_mode: PumpMode = PumpMode.RATIO,
    pump_value: float = 1.25,
    min_count: int | None = None,
    fit_probability: FitProbability = FitProbability.PER_CONFIG,
    tie_break: TieBreak = TieBreak.PLUS,
    mean_field: bool = False,
    sinks: Sequence = (),
    spectrum: SpectrumTable | None = None,
) -> SimulationOutcome:
    """
    Run one trajectory, histogram its spin samples and fit an effective temperature.

    A blowup does not raise: the samples collected so far are analysed and the
    error is kept on the outcome.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param params: Simulation parameters; ``pump`` is replaced by the resolved one.
    :type params: SimParams
    :param pump_mode: Ratio or absolute pump.
    :type pump_mode: PumpMode
    :param pump_value: Pump ratio or pump.
    :type pump_value: float
    :param min_count: Smallest level count entering the fit.
    :type min_count: int | None
    :param mean_field: Integrate the noiseless mean-field equations from a kicked vacuum.
    :type mean_field: bool
    :param sinks: Extra observers, e.g. a trajectory writer.
    :type sinks: Sequence
    :param spectrum: Precomputed spectrum of ``g``.
    :type spectrum: SpectrumTable | None
    :return: Histogram, level statistics and fit.
    :rtype: SimulationOutcome
    """
    min_count = settings.min_count if min_count is None else min_count
    pump, ratio = resolve_pump(g, params.gamma, pump_mode, pump_value)
    params = params.copy(update={"pump": pump})
    logger.info(
        "simulating %d modes at G=%.6g (G/G_th=%.4g), t_max=%g, seed=%d",
        g.n, pump, ratio, params.t_max, params.seed,
    )
    recorder = sampling.SpinRecorder(g, tie_break, sinks=sinks)
    rng = np.random.default_rng(params.seed)
    initial = kicked_vacuum(g.n, rng) if mean_field else None

    blowup = None
    try:
        dynamics.run_trajectory(params, g, recorder, rng=rng, initial=initial, mean_field=mean_field)
    except IntegrationBlowupError as err:
        blowup = err

    spectrum = spectrum_for(g) if spectrum is None else spectrum
    outcome = SimulationOutcome(
        graph=g,
        params=params,
        pump_ratio=ratio,
        recorder=recorder,
        spectrum=spectrum,
        blowup=blowup,
        autocorrelation_time=integrated_autocorrelation_time(
            recorder.energies, spacing=params.sample_interval
        ),
    )
    if spectrum is None:
        outcome.fit_error = "graph too large to enumerate"
        return outcome
    outcome.levels = sampling.per_energy_probabilities(recorder.histogram, spectrum)
    outcome.success_probability = sampling.success_probability(recorder.histogram, spectrum)
    outcome.fit, outcome.fit_error = fit_levels(
        outcome.levels,
        min_count,
        fit_probability,
        outcome.autocorrelation_time,
        sample_interval=params.sample_interval,
        total_samples=recorder.histogram.total,
    )
    return outcome


def mean_field_run(g: CouplingGraph, params: SimParams, pump_mode: PumpMode, pump_value: float):
    """
    Mean-field fixed point reached from a kicked vacuum seeded with ``params.seed``.

    :return: Resolved params, amplitudes and convergence flag.
    :rtype: tuple[SimParams, np.ndarray, bool]
    """
    pump, _ = resolve_pump(g, params.gamma, pump_mode, pump_value)
    params = params.copy(update={"pump": pump})
    start = kicked_vacuum(g.n, np.random.default_rng(params.seed))
    alpha, converged = dynamics.mean_field_fixed_point(params, g, start.alpha)
    return params, alpha, converged


@dataclass
class SweepPoint:
    index: int
    g_ratio: float
    pump: float
    seed: int
    samples: int = 0
    fit: TempFit | None = None
    levels: list[LevelStat] = field(default_factory=list)
    success_probability: float = math.nan
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.fit is None


@dataclass
class SweepResult:
    points: list[SweepPoint]
    crossing: tuple[float, float] | None = None
    fit_probability: FitProbability = FitProbability.PER_CONFIG

    @property
    def failures(self) -> list[SweepPoint]:
        return [point for point in self.points if point.failed]


def _sweep_point(task: tuple) -> SweepPoint:
    index, ratio, g, params, min_count, fit_probability, spectrum = task
    point = SweepPoint(index=index, g_ratio=ratio, pump=math.nan, seed=params.seed)
    try:
        outcome = simulate(
            g,
            params,
            pump_mode=PumpMode.RATIO,
            pump_value=ratio,
            min_count=min_count,
            fit_probability=fit_probability,
            spectrum=spectrum,
        )
    except IsingSamplerError as err:
        logger.error("sweep point %d (G/G_th=%g) failed: %s", index, ratio, err.message)
        point.error = err.message
        return point
    point.pump = outcome.params.pump
    point.samples = outcome.recorder.histogram.total
    point.fit = outcome.fit
    point.levels = outcome.levels
    point.success_probability = outcome.success_probability
    if outcome.blowup is not None:
        point.error = outcome.blowup.message
        point.fit = None
    elif outcome.fit is None:
        point.error = outcome.fit_error
    if point.error:
        logger.warning("sweep point %d (G/G_th=%g): %s", index, ratio, point.error)
    return point


def sweep(
    g: CouplingGraph,
    params: SimParams,
    ratios: Sequence[float],
    *,
    base_seed: int = 0,
    workers: int = 1,
    min_count: int | None = None,
    fit_probability: FitProbability = FitProbability.PER_CONFIG,
) -> SweepResult:
    """
    Independent trajectories at several pump ratios. Point ``k`` uses the
    ``trajectory`` seed stream at index ``k``, so results do not depend on the
    number of workers. Failed points are recorded and the sweep goes on.

    :param g: Coupling graph.
    :type g: CouplingGraph
    :param params: Parameters shared by all points; seed and pump are overridden.
    :type params: SimParams
    :param ratios: Pump ratios ``G / G_th``.
    :type ratios: Sequence[float]
    :param base_seed: Seed every point stream is derived from.
    :type base_seed: int
    :param workers: Worker processes; 1 runs in-process.
    :type workers: int
    :return: Points ordered by index and the crossing of their fitted lines.
    :rtype: SweepResult
    """
    if not ratios:
        raise ParameterError("a sweep needs at least one pump ratio")
    if workers < 1:
        raise ParameterError(f"workers must be at least 1, got {workers}")
    min_count = settings.min_count if min_count is None else min_count
    spectrum = spectrum_for(g)
    tasks = [
        (
            index,
            float(ratio),
            g,
            params.copy(update={"seed": derive_seed(base_seed, "trajectory", index)}),
            min_count,
            fit_probability,
            spectrum,
        )
        for index, ratio in enumerate(ratios)
    ]
    if workers == 1 or len(tasks) == 1:
        points = [_sweep_point(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            points = list(pool.map(_sweep_point, tasks))
    points.sort(key=lambda point: point.index)

    fits = [point.fit for point in points if point.fit is not None]
    crossing = None
    if len(fits) >= 2:
        try:
            crossing = sampling.crossing_energy(fits)
        except InsufficientDataError as err:
            logger.warning("no crossing of fitted lines: %s", err.message)
    return SweepResult(points=points, crossing=crossing, fit_probability=fit_probability)


def fitted_lines(result: SweepResult) -> list[dict]:
    """Observed and fitted ``ln p`` per level for every fitted point, in the probability that was fitted."""
    per_energy = result.fit_probability == FitProbability.PER_ENERGY
    rows = []
    for point in result.points:
        if point.fit is None:
            continue
        for level in point.levels:
            rows.append(
                {
                    "g_ratio": point.g_ratio,
                    "energy": level.energy,
                    "count": level.count,
                    "log_p_observed": (
                        math.log(level.p_energy if per_energy else level.p_per_config)
                        if level.count
                        else math.nan
                    ),
                    "log_p_fitted": float(point.fit.log_probability(level.energy)),
                }
            )
    return rows


def synthetic_samples(
    spectrum: SpectrumTable, temperature: float, samples: int, base_seed: int = 0
) -> list[LevelStat]:
    """
    Multinomial draw of ``samples`` level counts from the exact Boltzmann law, for
    checking the fit against a known temperature.
    """
    rng = make_rng(base_seed, "synthetic")
    counts = rng.multinomial(samples, oracle.boltzmann_exact(spectrum, temperature))
    return [
        LevelStat(
            energy=level.energy,
            multiplicity=level.multiplicity,
            count=int(count),
            p_energy=count / samples,
            p_per_config=count / samples / level.multiplicity,
        )
        for level, count in zip(spectrum.levels, counts)
    ]
