import dataclasses
import math

from fastapi import APIRouter

from src.repository.graphs import graph_from_model
from src.routes import check_step_limit
from src.schemas import (
    EnergyLevelResponse,
    FitResponse,
    MeanFieldResponse,
    SimulationModel,
    SimulationResponse,
)
from src.services import experiments
from src.services.graph import ising_energy
from src.services.sampling import read_spins

router = APIRouter(prefix="/simulations", tags=["simulations"])


def _finite(value: float):
    return None if math.isnan(value) else value


@router.post("/", response_model=SimulationResponse)
def simulate(body: SimulationModel):
    """
    The simulate function runs one trajectory and fits an effective temperature
    to its spin statistics. A failed fit is reported in ``fit_error``.

    :param body: SimulationModel: Graph, parameters and pump
    :return: Per-energy statistics and the fit
    """
    check_step_limit(body.params)
    outcome = experiments.simulate(
        graph_from_model(body.graph),
        body.params,
        pump_mode=body.pump_mode,
        pump_value=body.pump_value,
        min_count=body.min_count,
    )
    if outcome.blowup is not None:
        raise outcome.blowup
    fit = None
    if outcome.fit is not None:
        values = dataclasses.asdict(outcome.fit)
        fit = FitResponse(**{name: values[name] for name in FitResponse.__fields__})
    return SimulationResponse(
        pump=outcome.params.pump,
        pump_ratio=_finite(outcome.pump_ratio),
        total_samples=outcome.recorder.histogram.total,
        success_probability=_finite(outcome.success_probability),
        autocorrelation_time=outcome.autocorrelation_time,
        levels=[EnergyLevelResponse(**dataclasses.asdict(level)) for level in outcome.levels],
        fit=fit,
        fit_error=outcome.fit_error,
    )


@router.post("/mean-field", response_model=MeanFieldResponse)
def mean_field(body: SimulationModel):
    """
    :param body: SimulationModel: Graph, parameters and pump
    :return: The mean-field amplitudes reached from a kicked vacuum
    """
    check_step_limit(body.params)
    g = graph_from_model(body.graph)
    params, alpha, converged = experiments.mean_field_run(g, body.params, body.pump_mode, body.pump_value)
    spins = read_spins(alpha)
    return MeanFieldResponse(
        pump=params.pump,
        alpha_re=alpha.real.tolist(),
        alpha_im=alpha.imag.tolist(),
        converged=converged,
        spins=spins.tolist(),
        energy=ising_energy(g, spins),
    )
