from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Literal
import numpy as np


class TorusGrid(BaseModel):
    dimension: Literal[1, 2] = 1
    n: int = Field(..., ge=4)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @property
    def size(self) -> int:
        return self.n ** self.dimension

    @property
    def weight(self) -> float:
        return 1.0 / self.size

    @property
    def multi_index(self) -> np.ndarray:
        """(size, d) integer node coordinates, row-major."""
        axes = np.meshgrid(*[np.arange(self.n)] * self.dimension, indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=1)

    @property
    def nodes(self) -> np.ndarray:
        return self.multi_index / self.n


class SSampleSet(BaseModel):
    m: int

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def even_and_large_enough(self):
        if self.m < 8 or self.m % 2:
            raise ValueError(f"s-sample count must be even and >= 8, got {self.m}")
        return self

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.m) / self.m


class CellOperator(BaseModel):
    grid: TorusGrid
    s: float
    adjoint: bool
    matrix: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def apply(self, values: np.ndarray) -> np.ndarray:
        flat = values.reshape(self.grid.size, -1)
        return (self.matrix @ flat).reshape(values.shape)


class CellField(BaseModel):
    values: np.ndarray
    kind: Literal["scalar", "vector", "matrix"] = "scalar"
    s_index: int | None = None
    mean_zero: bool = False
    compatibility_defect: float | None = None
    residual: float | None = None

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)
