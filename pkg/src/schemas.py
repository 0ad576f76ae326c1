from __future__ import annotations

import enum
import math
from typing import List, Optional

from pydantic import BaseModel, Field, root_validator, validator


class GraphKind(enum.Enum):
    SK = "SK"
    K = "K"
    CUSTOM = "custom"


class MomentForm(enum.Enum):
    LINDBLAD = "lindblad"
    LITERAL = "literal"


class RateIndex(enum.Enum):
    J = "j"
    N = "n"


class TieBreak(enum.Enum):
    PLUS = "+1"
    MINUS = "-1"


class FitProbability(enum.Enum):
    PER_CONFIG = "per_config"
    PER_ENERGY = "per_energy"


class PumpMode(enum.Enum):
    RATIO = "ratio"
    ABSOLUTE = "absolute"


class TrajectoryFormat(enum.Enum):
    CSV = "csv"
    BINARY = "binary"


class SimParams(BaseModel):
    """
    Physical rates and integration controls of one trajectory. Times are in
    units of 1/gamma, rates in units of gamma.
    """

    gamma: float = Field(1.0, gt=0)
    eta: float = Field(0.1, ge=0)
    pump: float = Field(0.0, ge=0)
    dt: float = Field(1e-3, gt=0)
    t_max: float = Field(5000.0, gt=0)
    sample_interval: float = Field(0.1, gt=0)
    burn_in: float = Field(100.0, ge=0)
    seed: int = Field(0, ge=0)
    noise: bool = True
    moment_form: MomentForm = MomentForm.LINDBLAD
    rate_index: RateIndex = RateIndex.J
    blowup_amplitude: float = Field(1e6, gt=0)

    class Config:
        allow_mutation = False
        use_enum_values = False

    @root_validator(skip_on_failure=True)
    def check_time_grid(cls, values):
        dt, interval, t_max = values["dt"], values["sample_interval"], values["t_max"]
        if not dt <= interval <= t_max:
            raise ValueError("expected 0 < dt <= sample_interval <= t_max")
        if values["burn_in"] >= t_max:
            raise ValueError("burn_in must be smaller than t_max")
        return values

    @property
    def n_steps(self) -> int:
        # last step reaches t_max when t_max is not a multiple of dt
        return int(math.ceil(self.t_max / self.dt - 1e-6))

    @property
    def n_samples(self) -> int:
        return int((self.t_max - self.burn_in) / self.sample_interval + 1e-9)


class RunConfig(BaseModel):
    graph_path: Optional[str] = None
    kind: Optional[GraphKind] = None
    n: Optional[int] = Field(None, ge=2)
    graph_seed: Optional[int] = None
    std_dev: Optional[float] = Field(None, gt=0)
    j0: Optional[float] = Field(None, gt=0)
    params: SimParams
    pump_mode: PumpMode = PumpMode.RATIO
    pump_value: float = Field(1.25, ge=0)
    output_dir: str = "runs"
    save_trajectory: bool = False
    trajectory_format: TrajectoryFormat = TrajectoryFormat.CSV
    workers: int = Field(1, ge=1)

    @root_validator(skip_on_failure=True)
    def check_graph_source(cls, values):
        if values.get("graph_path") is None and values.get("kind") is None:
            raise ValueError("either a graph file or a graph kind to generate is needed")
        return values


class GraphModel(BaseModel):
    kind: GraphKind = GraphKind.CUSTOM
    seed: Optional[int] = None
    couplings: List[List[float]]

    @validator("couplings")
    def check_square(cls, v):
        if not v or any(len(row) != len(v) for row in v):
            raise ValueError("couplings must be a non-empty square matrix")
        return v


class GenerateGraphModel(BaseModel):
    kind: GraphKind = GraphKind.SK
    n: int = Field(10, ge=2, le=64)
    seed: int = Field(0, ge=0)
    scale: Optional[float] = Field(None, gt=0, examples=[0.04])
    gamma: float = Field(1.0, gt=0)
    rescale_to_feasible: bool = False


class ThresholdResponse(BaseModel):
    lambda_max: float
    threshold_pump: float
    residual_rates: List[float]


class GraphResponse(BaseModel):
    graph: GraphModel
    report: ThresholdResponse


class SpectrumLevelResponse(BaseModel):
    energy: float
    multiplicity: int
    example_configuration: str


class SpectrumResponse(BaseModel):
    ground_energy: float
    ground_states: List[str]
    levels: List[SpectrumLevelResponse]


class LevelModel(BaseModel):
    energy: float
    probability: float = Field(ge=0)
    count: int = Field(ge=0)


class FitModel(BaseModel):
    levels: List[LevelModel]
    min_count: int = Field(20, ge=1)


class FitResponse(BaseModel):
    t_eff: float
    std_err: float
    intercept: float
    intercept_err: float
    r_squared: float
    n_points: int


class SimulationModel(BaseModel):
    graph: GraphModel
    params: SimParams
    pump_mode: PumpMode = PumpMode.RATIO
    pump_value: float = Field(1.25, ge=0)
    min_count: int = Field(20, ge=1)


class EnergyLevelResponse(BaseModel):
    energy: float
    multiplicity: int
    count: int
    p_energy: float
    p_per_config: float


class SimulationResponse(BaseModel):
    pump: float
    pump_ratio: Optional[float]
    total_samples: int
    success_probability: Optional[float]
    autocorrelation_time: float
    levels: List[EnergyLevelResponse]
    fit: Optional[FitResponse] = None
    fit_error: Optional[str] = None


class MeanFieldResponse(BaseModel):
    pump: float
    alpha_re: List[float]
    alpha_im: List[float]
    converged: bool
    spins: List[int]
    energy: float
