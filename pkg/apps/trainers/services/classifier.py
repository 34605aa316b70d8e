"""
Small from-scratch classifier on Gaussian blobs, trained with SGD, momentum or Adam.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from apps.curves_db.schemas.curves import HyperParamAxis, LearningCurve, Setting, validate_setting
from apps.trainers.schemas.trainer_specs import (
    BATCH_SIZE,
    LEARNING_RATE,
    OPTIMIZER,
    ClassifierSpec,
)
from apps.trainers.services.early_stopping import EarlyStopping
from apps.trainers.services.optimizers import OPTIMIZERS, Params
from core.exceptions import ValidationError
from core.logger import get_logger
from shared.utils.seeding import derive_rng

logger = get_logger(__name__)


@dataclass(frozen=True)
class BlobDataset:
    """Standardized train/validation split of a blob classification task."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray

    @classmethod
    def generate(cls, spec: ClassifierSpec) -> "BlobDataset":
        rng = np.random.default_rng(spec.data_seed)
        centers = rng.uniform(-spec.center_box, spec.center_box, size=(spec.n_classes, spec.n_features))
        labels = np.arange(spec.n_samples) % spec.n_classes
        points = centers[labels] + rng.normal(0.0, spec.cluster_std, size=(spec.n_samples, spec.n_features))
        order = rng.permutation(spec.n_samples)
        points, labels = points[order], labels[order]

        n_val = max(1, int(round(spec.n_samples * spec.validation_fraction)))
        x_train, x_val = points[n_val:], points[:n_val]
        y_train, y_val = labels[n_val:], labels[:n_val]
        mean = x_train.mean(axis=0)
        std = x_train.std(axis=0)
        std[std == 0] = 1.0
        return cls((x_train - mean) / std, y_train, (x_val - mean) / std, y_val)


def init_params(n_features: int, n_classes: int, hidden_units: int, rng: np.random.Generator) -> Params:
    if hidden_units == 0:
        return {
            "W": rng.normal(0.0, 0.01, size=(n_features, n_classes)),
            "b": np.zeros(n_classes),
        }
    return {
        "W1": rng.normal(0.0, np.sqrt(2.0 / n_features), size=(n_features, hidden_units)),
        "b1": np.zeros(hidden_units),
        "W2": rng.normal(0.0, np.sqrt(1.0 / hidden_units), size=(hidden_units, n_classes)),
        "b2": np.zeros(n_classes),
    }


def forward(params: Params, x: np.ndarray) -> np.ndarray:
    """Class logits."""
    if "W" in params:
        return x @ params["W"] + params["b"]
    hidden = np.maximum(x @ params["W1"] + params["b1"], 0.0)
    return hidden @ params["W2"] + params["b2"]


def loss_and_grads(params: Params, x: np.ndarray, y: np.ndarray) -> tuple[float, Params]:
    """Mean cross-entropy and its gradient by backpropagation."""
    n = x.shape[0]
    if "W" in params:
        logits = x @ params["W"] + params["b"]
    else:
        pre = x @ params["W1"] + params["b1"]
        hidden = np.maximum(pre, 0.0)
        logits = hidden @ params["W2"] + params["b2"]

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), y].mean())

    d_logits = np.exp(log_probs)
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n

    if "W" in params:
        return loss, {"W": x.T @ d_logits, "b": d_logits.sum(axis=0)}
    d_hidden = (d_logits @ params["W2"].T) * (pre > 0.0)
    return loss, {
        "W1": x.T @ d_hidden,
        "b1": d_hidden.sum(axis=0),
        "W2": hidden.T @ d_logits,
        "b2": d_logits.sum(axis=0),
    }


def accuracy(params: Params, x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.argmax(forward(params, x), axis=1) == y))


def _finite(loss: float, arrays: Params) -> bool:
    return np.isfinite(loss) and all(np.all(np.isfinite(a)) for a in arrays.values())


def classifier_train(
    spec: ClassifierSpec,
    setting: Setting,
    epochs: int,
    seed: int,
    dataset: Optional[BlobDataset] = None,
) -> LearningCurve:
    """Train for up to `epochs` epochs, recording validation accuracy after each one.

    Stops early after `patience` epochs without improvement. A non-finite loss
    truncates the curve at the last finite epoch and flags it as diverged; if
    the first epoch already diverges the curve is chance level throughout.
    """
    if epochs < 1:
        raise ValidationError(f"epochs must be >= 1, got {epochs}")
    validate_setting(setting, list(spec.axes))
    data = dataset or BlobDataset.generate(spec)
    lr = float(setting[LEARNING_RATE])
    batch_size = int(setting[BATCH_SIZE])
    step = OPTIMIZERS[str(setting[OPTIMIZER])]

    # Initialization and shuffling depend on the seed only, so settings share them.
    params = init_params(spec.n_features, spec.n_classes, spec.hidden_units, derive_rng(seed, "init"))
    shuffle_rng = derive_rng(seed, "shuffle")
    state: dict = {}
    stopper = EarlyStopping(
        patience=spec.early_stopping.patience, min_delta=spec.early_stopping.min_delta
    )

    n_train = data.x_train.shape[0]
    accuracies: list[float] = []
    diverged = False
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(epochs):
            if batch_size >= n_train:
                order = np.arange(n_train)
            else:
                order = shuffle_rng.permutation(n_train)
            for start in range(0, n_train, batch_size):
                batch = order[start : start + batch_size]
                loss, grads = loss_and_grads(params, data.x_train[batch], data.y_train[batch])
                if not _finite(loss, grads):
                    diverged = True
                    break
                params, state = step(params, grads, state, lr)
            if diverged or not _finite(0.0, params):
                diverged = True
                break
            accuracies.append(accuracy(params, data.x_val, data.y_val))
            _, stopper = stopper.update(accuracies[-1])
            if stopper.should_stop:
                break

    if diverged:
        logger.warning(
            f"Non-finite loss for {setting.label()} after {len(accuracies)} finite epochs"
        )
        if not accuracies:
            accuracies = [spec.chance_level] * epochs
    return LearningCurve(
        epoch_accuracies=tuple(accuracies),
        final_accuracy=accuracies[-1],
        fin_epoch=epochs,
        diverged=diverged,
    )


class ClassifierTrainer:
    """Trainer backed by the blob classifier; the dataset is generated once and shared."""

    def __init__(self, spec: ClassifierSpec):
        self.spec = spec
        self.dataset = BlobDataset.generate(spec)

    def axes(self) -> list[HyperParamAxis]:
        return list(self.spec.axes)

    def train(self, setting: Setting, epochs: int, seed: int) -> LearningCurve:
        return classifier_train(self.spec, setting, epochs, seed, dataset=self.dataset)
