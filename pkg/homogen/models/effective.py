from pydantic import BaseModel, ConfigDict
import numpy as np


class DriftDecomposition(BaseModel):
    """Frame data: b_j = period means of F_{j+1}, beta_j and B_j their oscillations.

    `b` has shape (k+1, d); `beta` and `B` have shape (k+1, M, d) with level 0
    holding beta_0 and B_0.
    """
    alpha: float
    k: int
    b: np.ndarray
    beta: np.ndarray
    B: np.ndarray
    m: int

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def beta0(self) -> np.ndarray:
        return self.beta[0]

    @property
    def B0(self) -> np.ndarray:
        return self.B[0]


class EffectiveTensors(BaseModel):
    theta: np.ndarray  # (M, d, d)
    Theta: np.ndarray
    Theta_sym: np.ndarray
    lambda_min: float
    lambda_max: float
    sample_eigenvalues: np.ndarray  # (M, d) of the symmetrized samples

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def theta_sym(self) -> np.ndarray:
        return 0.5 * (self.theta + np.swapaxes(self.theta, 1, 2))
