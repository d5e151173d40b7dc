from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import List
import numpy as np


class BoxGrid(BaseModel):
    """Periodic box [-L/2, L/2) resolved with n_cell points per eps-cell."""
    length: int = Field(..., gt=0)
    q: int = Field(..., gt=0)
    n_cell: int = Field(..., ge=4)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def even_box(self):
        if (self.length * self.q * self.n_cell) % 2:
            raise ValueError("box must hold an even number of nodes")
        return self

    @property
    def eps(self) -> float:
        return 1.0 / self.q

    @property
    def n_box(self) -> int:
        return self.length * self.q * self.n_cell

    @property
    def h(self) -> float:
        return self.length / self.n_box

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.h * np.arange(self.n_box)

    @property
    def cell_index(self) -> np.ndarray:
        """Cell-grid node of x_i / eps modulo 1, by integer arithmetic."""
        return np.mod(np.arange(self.n_box) - self.n_box // 2, self.n_cell)


class EvolutionState(BaseModel):
    spacing: float
    length: float
    t: float
    checkpoints: List[float]
    snapshots: np.ndarray  # (len(checkpoints), n_box)
    dt: float | None = None
    steps: int = 0
    sup_history: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    mass_history: np.ndarray = Field(default_factory=lambda: np.zeros(0))
    max_principle_ok: bool = True
    positivity_ok: bool = True

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def snapshot(self, t: float) -> np.ndarray:
        return self.snapshots[self.checkpoints.index(t)]
