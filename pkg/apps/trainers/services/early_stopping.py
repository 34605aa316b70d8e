"""
Early stopping on a maximized validation metric.
"""
import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class EarlyStopping:
    """Stop once `patience` consecutive epochs fail to improve by more than `min_delta`.

    Usage::

        stopper = EarlyStopping(patience=5, min_delta=1e-4)
        for epoch in range(1, epochs + 1):
            accuracy = run_epoch()
            _, stopper = stopper.update(accuracy)
            if stopper.should_stop:
                break
    """

    patience: int = 5
    min_delta: float = 1e-4
    best: float = -math.inf
    count: int = 0
    should_stop: bool = False

    def update(self, metric: float) -> tuple[bool, "EarlyStopping"]:
        """Return (improved, new state)."""
        if math.isinf(self.best) or metric - self.best > self.min_delta:
            return True, replace(self, best=metric, count=0)
        count = self.count + 1
        return False, replace(self, count=count, should_stop=count >= self.patience)
