from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Any, Dict, List, Literal, Optional
import numpy as np

from homogen.config.settings import settings
from homogen.models.coefficient import CoefficientSpec
from homogen.models.correctors import CorrectorSet
from homogen.models.effective import DriftDecomposition, EffectiveTensors
from homogen.models.kernel import KernelSpec

Q_TOL = 1e-9


class GridSection(BaseModel):
    dimension: Literal[1, 2] = 1
    n: Optional[int] = Field(None, ge=4)
    m: int = Field(default_factory=lambda: settings.DEFAULT_S_SAMPLES)

    model_config = ConfigDict(extra="forbid")

    @property
    def n_cell(self) -> int:
        if self.n is not None:
            return self.n
        return settings.DEFAULT_N_1D if self.dimension == 1 else settings.DEFAULT_N_2D


class BoxSection(BaseModel):
    length: int = Field(8, gt=0)
    epsilons: List[float] = Field(default_factory=lambda: [1 / 8, 1 / 16, 1 / 32])

    model_config = ConfigDict(extra="forbid")

    @field_validator("epsilons", mode="before")
    @classmethod
    def parse_fractions(cls, values):
        """Accept "p/q" strings next to plain numbers."""
        if not isinstance(values, (list, tuple)):
            return values
        parsed = []
        for value in values:
            if isinstance(value, str) and "/" in value:
                num, den = value.split("/", 1)
                try:
                    num, den = float(num), float(den)
                except ValueError:
                    raise ValueError(f"cannot parse epsilon {value!r}")
                if den == 0:
                    raise ValueError(f"epsilon {value!r} has a zero denominator")
                parsed.append(num / den)
            else:
                parsed.append(value)
        return parsed

    @field_validator("epsilons")
    @classmethod
    def reciprocal_integers(cls, values: List[float]):
        for eps in values:
            if eps <= 0:
                raise ValueError(f"epsilon must be positive, got {eps}")
            if abs(1.0 / eps - round(1.0 / eps)) > Q_TOL:
                raise ValueError(f"epsilon {eps} is not 1/q for an integer q")
        return sorted(values, reverse=True)

    def q(self, eps: float) -> int:
        return int(round(1.0 / eps))


class TimeSection(BaseModel):
    T: float = Field(1.0, gt=0)
    checkpoints: List[float] = Field(default_factory=lambda: [0.25, 0.5, 0.75, 1.0])
    # Euler step as a fraction of the convexity bound eps^2 / rate
    cfl_fraction: float = Field(default_factory=lambda: settings.CFL_SAFETY, gt=0, le=1)

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def checkpoints_in_range(self):
        if not self.checkpoints:
            raise ValueError("at least one checkpoint is required")
        for c in self.checkpoints:
            if not 0.0 < c <= self.T:
                raise ValueError(f"checkpoint {c} outside (0, {self.T}]")
        self.checkpoints = sorted(self.checkpoints)
        return self


class ToleranceSection(BaseModel):
    compat: float = Field(default_factory=lambda: settings.TOL_COMPAT)
    solve: float = Field(default_factory=lambda: settings.TOL_SOLVE)
    oracle: float = 1e-8
    keystone: float = 1e-14

    model_config = ConfigDict(extra="forbid")


class OutputSection(BaseModel):
    dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    binary: bool = False
    snapshots: bool = True

    model_config = ConfigDict(extra="forbid")


class InitialSection(BaseModel):
    """Gaussian initial datum exp(-((x - center) / width)^2)."""
    width: float = Field(1.0, gt=0)
    center: float = 0.0

    model_config = ConfigDict(extra="forbid")


class RunConfig(BaseModel):
    kernel: KernelSpec
    mu: CoefficientSpec = Field(default_factory=CoefficientSpec)
    alpha: float
    grid: GridSection = Field(default_factory=GridSection)
    box: BoxSection = Field(default_factory=BoxSection)
    time: TimeSection = Field(default_factory=TimeSection)
    tolerances: ToleranceSection = Field(default_factory=ToleranceSection)
    output: OutputSection = Field(default_factory=OutputSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    name: Optional[str] = None

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def consistent_dimensions(self):
        if self.kernel.dimension != self.grid.dimension or self.mu.dimension != self.grid.dimension:
            raise ValueError(
                f"dimension mismatch: grid {self.grid.dimension}, kernel {self.kernel.dimension}, mu {self.mu.dimension}"
            )
        if self.mu.mu_minus <= 0:
            raise ValueError(f"mu_- = {self.mu.mu_minus} must be positive")
        return self


class ConvergenceRow(BaseModel):
    eps: float
    e_full: float
    e_partial: float
    runtime: float
    steps: int = 0
    dt: float = 0.0
    max_principle_ok: bool = True
    positivity_ok: bool = True
    boundary_mass: float = 0.0


class ConvergenceTable(BaseModel):
    rows: List[ConvergenceRow] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("rows")
    @classmethod
    def decreasing_eps(cls, rows: List[ConvergenceRow]):
        return sorted(rows, key=lambda r: r.eps, reverse=True)

    def column(self, name: str) -> List[float]:
        return [getattr(r, name) for r in self.rows]


class RunResults(BaseModel):
    """Everything a run may hand to the report writer; all parts optional."""
    config_digest: str = ""
    correctors: Optional[CorrectorSet] = None
    decomposition: Optional[DriftDecomposition] = None
    tensors: Optional[EffectiveTensors] = None
    table: Optional[ConvergenceTable] = None
    residuals: Dict[str, float] = Field(default_factory=dict)
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    model_config = ConfigDict(arbitrary_types_allowed=True)


def as_list(values: np.ndarray) -> list:
    return np.asarray(values, dtype=float).tolist()
