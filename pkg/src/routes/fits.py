import dataclasses

from fastapi import APIRouter

from src.schemas import FitModel, FitResponse
from src.services.sampling import fit_temperature

router = APIRouter(prefix="/fits", tags=["fits"])


@router.post("/", response_model=FitResponse)
def fit(body: FitModel):
    """
    Weighted Boltzmann fit of ``ln p`` against energy.

    :param body: FitModel: ``(energy, probability, count)`` levels and the count cut
    :return: Effective temperature with its error and the fitted line
    """
    result = fit_temperature(
        [(level.energy, level.probability, level.count) for level in body.levels], body.min_count
    )
    values = dataclasses.asdict(result)
    return FitResponse(**{name: values[name] for name in FitResponse.__fields__})
