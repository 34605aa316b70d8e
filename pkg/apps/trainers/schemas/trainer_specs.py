"""
Trainer configuration schemas: the synthetic response surface and the blob classifier.
"""
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.curves_db.schemas.curves import OPTIMIZER_TAGS, HyperParamAxis

LEARNING_RATE = "learning_rate"
BATCH_SIZE = "batch_size"
OPTIMIZER = "optimizer"


def default_axes() -> list[HyperParamAxis]:
    """8 log-spaced learning rates x 4 batch sizes x 3 optimizers (96 settings)."""
    return [
        HyperParamAxis(
            name=LEARNING_RATE,
            kind="real",
            values=tuple(float(v) for v in np.logspace(-4, -1, 8)),
        ),
        HyperParamAxis(name=BATCH_SIZE, kind="integer", values=(16, 32, 64, 128)),
        HyperParamAxis(name=OPTIMIZER, kind="categorical", values=OPTIMIZER_TAGS),
    ]


class EarlyStoppingSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    patience: int = Field(default=5, ge=1)
    min_delta: float = Field(default=1e-4, ge=0.0)


class SyntheticSurface(BaseModel):
    """Saturating curves a(e) = A * (1 - exp(-rate * e)) + noise over a grid.

    `plateaus` and `rates` are aligned with the lexicographic grid order of
    `axes`. The plateau has a unique maximum, which makes the surface an oracle
    for the explorer.
    """

    model_config = ConfigDict(frozen=True)

    axes: tuple[HyperParamAxis, ...] = Field(..., min_length=1)
    plateaus: tuple[float, ...]
    rates: tuple[float, ...]
    noise: float = Field(default=0.0, ge=0.0)
    # Extra jitter early_noise / e at epoch e, fading as training settles.
    early_noise: float = Field(default=0.0, ge=0.0)
    early_stopping: Optional[EarlyStoppingSpec] = None

    @model_validator(mode="after")
    def check_surface(self) -> "SyntheticSurface":
        size = int(np.prod([axis.size for axis in self.axes]))
        if len(self.plateaus) != size or len(self.rates) != size:
            raise ValueError(f"surface needs {size} plateaus and rates")
        if not all(0.0 < a <= 1.0 for a in self.plateaus):
            raise ValueError("plateaus must lie in (0, 1]")
        if not all(r > 0.0 for r in self.rates):
            raise ValueError("rates must be positive")
        best = max(self.plateaus)
        if sum(1 for a in self.plateaus if a == best) != 1:
            raise ValueError("plateau maximum must be unique")
        return self

    @property
    def optimum_index(self) -> int:
        return int(np.argmax(self.plateaus))

    @classmethod
    def generate(
        cls,
        axes: list[HyperParamAxis],
        seed: int = 0,
        noise: float = 0.01,
        early_noise: float = 0.0,
        plateau_low: float = 0.3,
        plateau_high: float = 0.95,
        rate_low: float = 0.2,
        rate_high: float = 0.6,
        early_stopping: Optional[EarlyStoppingSpec] = None,
    ) -> "SyntheticSurface":
        """Unimodal surface peaking at a seeded grid point.

        Ordered axes lose plateau with squared index distance from the peak;
        categorical values other than the peak tag carry a seeded penalty.
        """
        rng = np.random.default_rng(seed)
        peaks = [int(rng.integers(axis.size)) for axis in axes]
        penalties = [rng.uniform(0.3, 1.0, size=axis.size) for axis in axes]

        grids = np.meshgrid(*(np.arange(axis.size) for axis in axes), indexing="ij")
        distance = np.zeros(grids[0].shape)
        for axis, grid, peak, penalty in zip(axes, grids, peaks, penalties):
            if axis.ordered:
                span = max(axis.size - 1, 1)
                distance += ((grid - peak) / span) ** 2
            else:
                distance += np.where(grid == peak, 0.0, penalty[grid] ** 2)
        distance = np.sqrt(distance / len(axes)).ravel()

        plateaus = plateau_high - (plateau_high - plateau_low) * distance
        rates = rate_low + (rate_high - rate_low) * rng.uniform(size=plateaus.size)
        return cls(
            axes=tuple(axes),
            plateaus=tuple(float(a) for a in plateaus),
            rates=tuple(float(r) for r in rates),
            noise=noise,
            early_noise=early_noise,
            early_stopping=early_stopping,
        )


class ClassifierSpec(BaseModel):
    """Gaussian-blob classification task and the network trained on it."""

    model_config = ConfigDict(frozen=True)

    axes: tuple[HyperParamAxis, ...] = Field(default_factory=lambda: tuple(default_axes()))
    n_classes: int = Field(default=5, ge=2)
    n_features: int = Field(default=2, ge=1)
    n_samples: int = Field(default=600, ge=10)
    cluster_std: float = Field(default=1.5, gt=0.0)
    center_box: float = Field(default=5.0, gt=0.0)
    # 0 selects multinomial logistic regression
    hidden_units: int = Field(default=16, ge=0)
    validation_fraction: float = Field(default=0.25, gt=0.0, lt=1.0)
    data_seed: int = 0
    early_stopping: EarlyStoppingSpec = Field(default_factory=EarlyStoppingSpec)

    @model_validator(mode="after")
    def check_axes(self) -> "ClassifierSpec":
        names = {axis.name for axis in self.axes}
        missing = {LEARNING_RATE, BATCH_SIZE, OPTIMIZER} - names
        if missing:
            raise ValueError(f"classifier axes missing {sorted(missing)}")
        for axis in self.axes:
            if axis.name == OPTIMIZER and not set(axis.values) <= set(OPTIMIZER_TAGS):
                raise ValueError(f"optimizer tags must be among {OPTIMIZER_TAGS}")
            if axis.name == LEARNING_RATE and any(v < 0 for v in axis.values):
                raise ValueError("learning rates must be non-negative")
        return self

    @property
    def chance_level(self) -> float:
        return 1.0 / self.n_classes
