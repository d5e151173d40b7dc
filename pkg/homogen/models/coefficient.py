from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Literal

from homogen.utils.errors import ValidationFailure


class TrigFactor(BaseModel):
    """One factor of a coefficient term: 1, sin(2*pi*l.x) or cos(2*pi*l.x).

    An integer harmonic in two dimensions acts along the first axis.
    """
    kind: Literal["one", "sin", "cos"] = "one"
    harmonic: int | List[int] = 1

    model_config = ConfigDict(extra="forbid", frozen=True)

    def harmonic_vector(self, dimension: int) -> List[int]:
        if isinstance(self.harmonic, list):
            if len(self.harmonic) != dimension:
                raise ValidationFailure(f"harmonic {self.harmonic} does not match dimension {dimension}")
            return list(self.harmonic)
        return [self.harmonic] + [0] * (dimension - 1)


class CoefficientTerm(BaseModel):
    coefficient: float
    xi: TrigFactor = Field(default_factory=TrigFactor)
    eta: TrigFactor = Field(default_factory=TrigFactor)
    s: TrigFactor = Field(default_factory=TrigFactor)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("s")
    @classmethod
    def scalar_time_harmonic(cls, value: TrigFactor):
        if isinstance(value.harmonic, list):
            raise ValueError("time factor takes a scalar harmonic")
        return value


class CoefficientSpec(BaseModel):
    """mu(xi, eta, s) = c0 + sum_k c_k phi_k(xi) psi_k(eta) m_k(s)."""
    constant: float = 1.0
    terms: List[CoefficientTerm] = Field(default_factory=list)
    dimension: Literal[1, 2] = 1

    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def harmonics_match_dimension(self):
        for term in self.terms:
            for factor in (term.xi, term.eta):
                if isinstance(factor.harmonic, list) and len(factor.harmonic) != self.dimension:
                    raise ValueError(f"harmonic {factor.harmonic} does not match dimension {self.dimension}")
        return self

    @property
    def mu_minus(self) -> float:
        return self.constant - sum(abs(t.coefficient) for t in self.terms)

    @property
    def mu_plus(self) -> float:
        return self.constant + sum(abs(t.coefficient) for t in self.terms)
