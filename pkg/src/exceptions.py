from __future__ import annotations

from typing import Any


class IsingSamplerError(Exception):
    """
    Base class for every error the sampler raises on purpose.

    ``exit_code`` is what the command line returns, ``status_code`` is what the
    HTTP API answers with.
    """

    exit_code: int = 1
    status_code: int = 422

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> dict[str, Any]:
        return {"message": self.message, "kind": type(self).__name__}


class ParameterError(IsingSamplerError):
    pass


class GraphFormatError(ParameterError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        location = ""
        if line is not None:
            location = f"line {line}"
            if field:
                location += f", field '{field}'"
            location += ": "
        super().__init__(f"{location}{message}")
        self.line = line
        self.field = field


class EnumerationLimitError(ParameterError):
    pass


class GraphMismatchError(ParameterError):
    pass


class InfeasibleRatesError(IsingSamplerError):
    exit_code = 2

    def __init__(self, mode: int, residual: float, max_scale: float):
        super().__init__(
            f"one-photon rate of mode {mode} is negative "
            f"(gamma - sum_k |J[{mode}][k]| = {residual:.6g}); "
            f"rescale J by at most {max_scale:.6g} or pass --rescale-to-feasible"
        )
        self.mode = mode
        self.residual = residual
        self.max_scale = max_scale


class IntegrationBlowupError(IsingSamplerError):
    exit_code = 3
    status_code = 500

    def __init__(self, t: float, reason: str, samples_collected: int = 0):
        super().__init__(
            f"integration blew up at t={t:.6g} ({reason}); try a smaller dt"
        )
        self.t = t
        self.reason = reason
        self.samples_collected = samples_collected


class InsufficientDataError(IsingSamplerError):
    exit_code = 3


class NoThermalFitError(IsingSamplerError):
    exit_code = 3
