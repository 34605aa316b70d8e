"""
Synthetic learning-curve simulator with a known optimum.
"""
import math

import numpy as np

from apps.curves_db.schemas.curves import HyperParamAxis, LearningCurve, Setting, validate_setting
from apps.trainers.schemas.trainer_specs import SyntheticSurface
from apps.trainers.services.early_stopping import EarlyStopping
from core.exceptions import ValidationError
from shared.utils.seeding import derive_rng


def setting_index(surface: SyntheticSurface, setting: Setting) -> int:
    """Position of the setting in the surface's lexicographic grid."""
    try:
        validate_setting(setting, list(surface.axes))
    except ValidationError as exc:
        raise ValidationError(f"unknown setting {setting.label()}: {exc.detail}") from exc
    index = 0
    for axis in surface.axes:
        index = index * axis.size + axis.index_of(setting[axis.name])
    return index


def synthetic_train(
    surface: SyntheticSurface, setting: Setting, epochs: int, seed: int
) -> LearningCurve:
    """
    Sample a(e) = A * (1 - exp(-rate * e)) + noise for e = 1..epochs, clipped to [0, 1].

    The noise at epoch e has standard deviation noise + early_noise / e.
    """
    if epochs < 1:
        raise ValidationError(f"epochs must be >= 1, got {epochs}")
    index = setting_index(surface, setting)
    plateau = surface.plateaus[index]
    rate = surface.rates[index]

    # The noise stream is drawn epoch by epoch, so a short run is a prefix of a long one.
    scale = surface.noise + surface.early_noise / np.arange(1, epochs + 1)
    noise = derive_rng(seed, "synthetic", index).normal(0.0, 1.0, size=epochs) * scale
    stopper = None
    if surface.early_stopping is not None:
        stopper = EarlyStopping(
            patience=surface.early_stopping.patience,
            min_delta=surface.early_stopping.min_delta,
        )

    accuracies: list[float] = []
    for epoch in range(1, epochs + 1):
        value = plateau * (1.0 - math.exp(-rate * epoch)) + noise[epoch - 1]
        accuracies.append(float(np.clip(value, 0.0, 1.0)))
        if stopper is not None:
            _, stopper = stopper.update(accuracies[-1])
            if stopper.should_stop:
                break
    return LearningCurve(
        epoch_accuracies=tuple(accuracies), final_accuracy=accuracies[-1], fin_epoch=epochs
    )


class SyntheticTrainer:
    """Trainer backed by a SyntheticSurface."""

    def __init__(self, surface: SyntheticSurface):
        self.surface = surface

    def axes(self) -> list[HyperParamAxis]:
        return list(self.surface.axes)

    def train(self, setting: Setting, epochs: int, seed: int) -> LearningCurve:
        return synthetic_train(self.surface, setting, epochs, seed)

    def plateau(self, setting: Setting) -> float:
        """True converged accuracy of a setting (noise-free)."""
        return self.surface.plateaus[setting_index(self.surface, setting)]
