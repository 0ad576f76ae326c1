from fastapi import HTTPException, status

from src.conf.config import settings
from src.schemas import SimParams


def check_step_limit(params: SimParams) -> None:
    """
    Refuse integrations longer than ``api_max_steps``; they belong on the command line.

    :param params: Requested simulation parameters.
    :type params: SimParams
    :raises HTTPException: 413 above the limit.
    """
    if params.n_steps > settings.api_max_steps:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"{params.n_steps} steps requested, at most {settings.api_max_steps} are served; "
            f"use the ising-sampler command line for longer runs",
        )
