"""
Explorer schemas: configuration, probability state, history and results.
"""
from typing import Annotated, Optional

from pydantic import BaseModel, ConfigDict, Field

from apps.curves_db.schemas.curves import HyperParamAxis, Setting
from apps.predictor.schemas.prediction import PredictionSource


Threshold = Annotated[float, Field(gt=0.0, le=1.0)]


class ExplorerConfig(BaseModel):
    """Knobs of the probability-matching search."""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(default=0.05, gt=0.0, lt=1.0)
    radius: int = Field(default=1, ge=0)
    threshold: Threshold = 0.8
    # Per-axis overrides of `threshold`, keyed by axis name.
    thresholds: dict[str, Threshold] = Field(default_factory=dict)
    max_iterations: int = Field(default=200, ge=1)
    # 0 disables the floor.
    p_floor: float = Field(default=0.01, ge=0.0, lt=1.0)
    k: int = Field(default=3, ge=2)
    fin_epoch: int = Field(default=50, ge=1)
    top_n: int = Field(default=10, ge=1)
    seed: int = 0

    def threshold_for(self, axis_name: str) -> float:
        return self.thresholds.get(axis_name, self.threshold)


class HistoryEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    iteration: int = Field(..., ge=1)
    setting: Setting
    reward: float = Field(..., ge=0.0, le=1.0)
    source: PredictionSource


class ExplorerState(BaseModel):
    """Probability vectors aligned with `axes`, last reward and the history so far."""

    model_config = ConfigDict(frozen=True)

    axes: tuple[HyperParamAxis, ...]
    config: ExplorerConfig
    probabilities: tuple[tuple[float, ...], ...]
    last_reward: Optional[float] = None
    history: tuple[HistoryEntry, ...] = ()
    iteration: int = 0


class TopEntry(BaseModel):
    """A retrained setting: its best predicted reward and its full-training accuracy."""

    model_config = ConfigDict(frozen=True)

    rank: int = Field(..., ge=1)
    setting: Setting
    predicted: float
    final_accuracy: float


class ExplorationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    best_setting: Setting
    best_final_accuracy: float
    history: tuple[HistoryEntry, ...]
    top: tuple[TopEntry, ...]
    converged_setting: Optional[Setting] = None
    probabilities: dict[str, tuple[float, ...]]
    iterations: int
