"""
Predictor schemas: gated prediction outcomes, evaluation reports and API payloads.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.curves_db.schemas.curves import Accuracy
from apps.power_fit.schemas.power_fit import PowerFit

PredictionSource = Literal["svr", "curve_fit"]


class PredictionOutcome(BaseModel):
    """Final-accuracy prediction and the branch of the gate that produced it."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., ge=0.0, le=1.0)
    source: PredictionSource
    svr_raw: float
    acc_max: float = Field(..., ge=0.0, le=1.0)
    fit: Optional[PowerFit] = None

    @model_validator(mode="after")
    def check_branch(self) -> "PredictionOutcome":
        if self.source == "svr":
            if not (self.acc_max < self.value <= 1.0 and self.value == self.svr_raw):
                raise ValueError("svr outcomes carry the raw prediction inside (acc_max, 1]")
        elif self.fit is None:
            raise ValueError("curve_fit outcomes carry their fit")
        return self


class EvaluationRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    record_id: int
    true_final: float
    predicted: float
    source: PredictionSource

    @property
    def abs_error(self) -> float:
        return abs(self.predicted - self.true_final)


class EvaluationReport(BaseModel):
    """Per-record predictions on a held-out set plus summary statistics."""

    model_config = ConfigDict(frozen=True)

    rows: tuple[EvaluationRow, ...] = Field(..., min_length=1)
    mse: float
    fallback_rate: float = Field(..., ge=0.0, le=1.0)
    # MSE of always predicting the mean of the test targets
    target_variance: float


class PredictionRequest(BaseModel):
    """Observed first-k accuracies of a run and its epoch budget."""

    accuracies: list[Accuracy] = Field(..., min_length=2)
    fin_epoch: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_budget(self) -> "PredictionRequest":
        if self.fin_epoch < len(self.accuracies):
            raise ValueError("fin_epoch must not precede the observed epochs")
        return self

    def points(self) -> list[tuple[int, float]]:
        return list(enumerate(self.accuracies, start=1))


class PowerFitResponse(BaseModel):
    fit: PowerFit
    value: float
