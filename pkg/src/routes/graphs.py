from fastapi import APIRouter, status

from src.schemas import GenerateGraphModel, GraphModel, GraphResponse, ThresholdResponse
from src.repository.graphs import graph_from_model, graph_to_model
from src.services import experiments
from src.services import graph as graph_service

router = APIRouter(prefix="/graphs", tags=["graphs"])


@router.post("/", response_model=GraphResponse, status_code=status.HTTP_201_CREATED)
def generate_graph(body: GenerateGraphModel):
    """
    Draws an SK or K instance and reports its oscillation threshold.

    :param body: GenerateGraphModel: Ensemble, size, seed and scale
    :return: The coupling matrix with its threshold report
    """
    g, _, report = experiments.generate_graph(
        body.kind, body.n, body.seed, body.scale, body.gamma, body.rescale_to_feasible
    )
    return GraphResponse(graph=graph_to_model(g), report=ThresholdResponse(**report))


@router.post("/threshold", response_model=ThresholdResponse)
def read_threshold(body: GraphModel, gamma: float = 1.0):
    """
    :param body: GraphModel: Coupling matrix
    :param gamma: float: One-photon base rate
    :return: lambda_max, G_th and the residual one-photon rates
    """
    return graph_service.threshold_report(graph_from_model(body), gamma)
