from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.exceptions import ParameterError
from src.schemas import GraphKind


@dataclass(frozen=True, eq=False)
class CouplingGraph:
    """
    Ising instance: a real symmetric coupling matrix with zero diagonal.

    The matrix is copied and frozen on construction, so a graph can be shared
    between workers without copies.
    """

    J: np.ndarray
    kind: GraphKind = GraphKind.CUSTOM
    seed: Optional[int] = None

    def __post_init__(self):
        J = np.array(self.J, dtype=np.float64)
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] < 1:
            raise ParameterError(f"coupling matrix must be square, got shape {J.shape}")
        if not np.all(np.isfinite(J)):
            raise ParameterError("coupling matrix has non-finite entries")
        if not np.array_equal(J, J.T):
            i, j = np.argwhere(J != J.T)[0]
            raise ParameterError(f"coupling matrix is not symmetric at ({i}, {j})")
        if np.any(np.diag(J) != 0):
            i = int(np.flatnonzero(np.diag(J))[0])
            raise ParameterError(f"coupling matrix has nonzero diagonal at mode {i}")
        J.setflags(write=False)
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.J.tobytes()).hexdigest()

    def scaled(self, factor: float) -> CouplingGraph:
        return CouplingGraph(self.J * factor, kind=self.kind, seed=self.seed)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CouplingGraph):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.seed == other.seed
            and np.array_equal(self.J, other.J)
        )

    def __hash__(self) -> int:
        return hash(self.digest)


@dataclass
class GaussianState:
    """
    First moments ``alpha`` and the two second-moment matrices of a Gaussian
    state: ``u[n, m] = <a_n a_m> - alpha_n alpha_m`` and
    ``v[n, m] = <a_n^+ a_m> - alpha_n^* alpha_m``.
    """

    alpha: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def copy(self) -> GaussianState:
        return GaussianState(self.alpha.copy(), self.u.copy(), self.v.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.alpha))
            and np.all(np.isfinite(self.u))
            and np.all(np.isfinite(self.v))
        )


@dataclass(frozen=True)
class NoiseDraw:
    """Complex Wiener increments of the three decay channels for one step."""

    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray

    def mirrored(self) -> NoiseDraw:
        # channel 1 and 3 are linear in the field, channel 2 is quadratic
        return NoiseDraw(-self.z1, self.z2, -self.z3)


@dataclass(frozen=True)
class SpectrumLevel:
    energy: float
    multiplicity: int
    example: str


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    """
    Exact energy levels of an instance. ``level_index[k]`` is the level of the
    canonical configuration ``k`` (spin 0 up, spin i down iff bit i-1 of k is set).
    """

    n: int
    tol: float
    levels: tuple[SpectrumLevel, ...]
    level_index: np.ndarray
    ground_states: tuple[str, ...]
    graph_digest: str = ""

    @property
    def ground_energy(self) -> float:
        return self.levels[0].energy

    @property
    def energies(self) -> np.ndarray:
        return np.array([level.energy for level in self.levels])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([level.multiplicity for level in self.levels], dtype=np.int64)


@dataclass(frozen=True)
class SpinSample:
    t: float
    sigma: np.ndarray
    energy: float


@dataclass
class EnergyHistogram:
    """Sample counts keyed by canonical configuration index."""

    n: int
    graph_digest: str = ""
    counts: Counter = field(default_factory=Counter)
    total: int = 0


@dataclass(frozen=True)
class LevelStat:
    energy: float
    multiplicity: int
    count: int
    p_energy: float
    p_per_config: float


@dataclass(frozen=True)
class TempFit:
    t_eff: float
    std_err: float
    intercept: float
    intercept_err: float
    r_squared: float
    n_points: int
    autocorrelation_time: float = math.nan
    total_samples: int = 0

    def log_probability(self, energy: float | np.ndarray) -> float | np.ndarray:
        return self.intercept - np.asarray(energy) / self.t_eff
