# app/schemas/analysis.py
from pydantic import BaseModel, ConfigDict, Field, field_validator


class ZetaQuery(BaseModel):
    """Parameters of the one-dimensional 2x2 system on (0, rho)."""

    rho: float = Field(..., gt=0)
    c: float = Field(..., ge=0)
    alpha_over_eps: float = Field(..., ge=0)

    model_config = ConfigDict(frozen=True)


class Prop16Params(BaseModel):
    """
    Coefficients of the fully coupled system on (0, 1)

        u'' - eps v' - c u + alpha v >= 0
        v'' - eps_tilde u' - c_tilde v + beta u >= 0
    """

    eps: float
    eps_tilde: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    c_tilde: float = Field(..., gt=0)

    model_config = ConfigDict(frozen=True)

    @field_validator("eps")
    @classmethod
    def eps_nonzero(cls, value: float) -> float:
        if value == 0:
            raise ValueError("eps must be nonzero")
        return value

    def reduced(self) -> "Prop16Params":
        """Same system after x -> 1 - x, written with eps > 0."""
        if self.eps > 0:
            return self
        return Prop16Params(
            eps=-self.eps,
            eps_tilde=-self.eps_tilde,
            alpha=self.alpha,
            beta=self.beta,
            c_tilde=self.c_tilde,
        )
