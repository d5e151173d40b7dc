from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal
import math
import numpy as np

from homogen.utils.errors import ValidationFailure


class KernelSpec(BaseModel):
    """Jump-size density a(z), product form in two dimensions.

    `half_width` is r for the uniform and triangular families and the cutoff
    radius for the truncated Gaussian.
    """
    family: Literal["uniform", "triangular", "truncated_gaussian"]
    dimension: Literal[1, 2] = 1
    center: float | List[float] = 0.0
    half_width: float = 1.0
    sigma: float | None = None
    boundary: Literal["symmetric", "left_closed"] = "symmetric"

    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("family", mode="before")
    @classmethod
    def normalize_family(cls, value):
        if isinstance(value, str):
            return value.strip().lower().replace("-", "_")
        return value

    @model_validator(mode="after")
    def center_matches_dimension(self):
        if isinstance(self.center, list) and len(self.center) != self.dimension:
            raise ValueError(f"center has {len(self.center)} entries, expected {self.dimension}")
        return self

    @property
    def centers(self) -> tuple[float, ...]:
        if isinstance(self.center, list):
            if len(self.center) != self.dimension:
                raise ValidationFailure(f"center has {len(self.center)} entries, expected {self.dimension}")
            return tuple(float(c) for c in self.center)
        return (float(self.center),) * self.dimension

    @property
    def is_bounded(self) -> bool:
        if not math.isfinite(self.half_width):
            return False
        if self.family == "truncated_gaussian":
            return self.sigma is not None and math.isfinite(self.sigma)
        return True


class ValidationReport(BaseModel):
    family: str
    dimension: int
    mass: float
    first_moment: List[float]
    second_moment: List[List[float]]
    violations: List[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class DiscreteKernel(BaseModel):
    """Renormalized node quadrature of a(z) on the lattice z_l = l/N.

    `weights` absorb the factor N^-d and sum to one; this quadrature is shared
    by the cell operators and by the box simulation.
    """
    n: int
    dimension: int
    offsets: np.ndarray  # (taps, d) integer lattice offsets l
    weights: np.ndarray  # (taps,)
    raw_mass: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def nodes(self) -> np.ndarray:
        return self.offsets / self.n

    @property
    def taps(self) -> int:
        return int(self.weights.shape[0])


class PeriodizedKernel(BaseModel):
    """Torus fold a_q(z_i) = sum_n (z_i+n)^{(x)q} a(z_i+n) at z_i = i/N."""
    order: Literal[0, 1, 2]
    n: int
    dimension: int
    values: np.ndarray  # (N^d,), (N^d, d) or (N^d, d, d)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def torus_mean(self) -> np.ndarray | float:
        return self.values.mean(axis=0)
