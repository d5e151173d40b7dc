from pydantic import BaseModel, ConfigDict
from typing import List
import numpy as np


class CorrectorSchedule(BaseModel):
    alpha: float
    k: int
    gammas: List[float]
    exceptional: bool

    model_config = ConfigDict(frozen=True)

    @property
    def chain_length(self) -> int:
        return self.k + 1


class CorrectorSet(BaseModel):
    """Sampled corrector data over one period of s.

    Shapes, with M samples, S = N^d nodes and dimension d:
    p (M, S); chi (k+1, M, S, d); kappa (M, S, d, d); F (k+1, M, d);
    theta (M, d, d); f (M, S, d).
    """
    schedule: CorrectorSchedule
    n: int
    dimension: int
    s_points: np.ndarray
    p: np.ndarray
    f: np.ndarray
    chi: np.ndarray
    kappa: np.ndarray
    F: np.ndarray
    theta: np.ndarray
    compatibility_defects: np.ndarray  # (k+2, M): chain levels then kappa
    residuals: np.ndarray  # (k+2, M)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def m(self) -> int:
        return int(self.s_points.shape[0])

    def max_defect(self) -> float:
        return float(self.compatibility_defects.max())

    def max_residual(self) -> float:
        return float(self.residuals.max())
