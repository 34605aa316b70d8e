"""
Power-law fit schema.
"""
from pydantic import BaseModel, ConfigDict, Field, model_validator


class PowerFit(BaseModel):
    """Fitted g(x) = alpha * x**beta together with its constraint context."""

    model_config = ConfigDict(frozen=True)

    alpha: float = Field(..., gt=0.0, allow_inf_nan=False)
    beta: float = Field(..., gt=0.0, lt=1.0)
    sse: float = Field(..., ge=0.0, allow_inf_nan=False)
    acc_max: float = Field(..., ge=0.0, le=1.0)
    fin_epoch: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_alpha_bound(self) -> "PowerFit":
        if not self.alpha > self.acc_max / self.fin_epoch:
            raise ValueError(
                f"alpha={self.alpha} must exceed acc_max/fin_epoch={self.acc_max / self.fin_epoch}"
            )
        return self

    def curve(self, epochs) -> list[float]:
        """g evaluated at the given epochs, unclamped."""
        return [self.alpha * float(e) ** self.beta for e in epochs]
