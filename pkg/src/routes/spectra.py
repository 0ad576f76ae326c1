from typing import Optional

from fastapi import APIRouter

from src.repository.graphs import graph_from_model
from src.schemas import GraphModel, SpectrumLevelResponse, SpectrumResponse
from src.services import oracle

router = APIRouter(prefix="/spectra", tags=["spectra"])


@router.post("/", response_model=SpectrumResponse)
def enumerate_spectrum(body: GraphModel, tol: Optional[float] = None):
    """
    The enumerate_spectrum function returns every energy level of the graph by brute force.

    :param body: GraphModel: Coupling matrix
    :param tol: float: Level grouping tolerance
    :return: Levels ascending in energy and the ground states
    """
    spectrum = oracle.enumerate_spectrum(graph_from_model(body), tol=tol)
    return SpectrumResponse(
        ground_energy=spectrum.ground_energy,
        ground_states=list(spectrum.ground_states),
        levels=[
            SpectrumLevelResponse(
                energy=level.energy,
                multiplicity=level.multiplicity,
                example_configuration=level.example,
            )
            for level in spectrum.levels
        ],
    )
