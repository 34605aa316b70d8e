"""
Trainer contract shared by the database builder and the explorer.
"""
from typing import Protocol, runtime_checkable

from apps.curves_db.schemas.curves import HyperParamAxis, LearningCurve, Setting


@runtime_checkable
class Trainer(Protocol):
    """Anything that turns a setting into a learning curve.

    Implementations must be deterministic per (setting, epochs, seed), return
    at most `epochs` accuracies in [0, 1], and be safe to call from several
    threads on distinct settings.
    """

    def axes(self) -> list[HyperParamAxis]:
        ...

    def train(self, setting: Setting, epochs: int, seed: int) -> LearningCurve:
        ...
