"""
Database service: grid enumeration, sampling, full-training builds, splits and CSV files.
"""
import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from apps.curves_db.schemas.curves import (
    Database,
    HyperParamAxis,
    LearningCurve,
    Setting,
    TrainingRecord,
    validate_setting,
)
from apps.trainers.services.base import Trainer
from core.config import settings as app_settings
from core.exceptions import CsvFormatError, EmptyGridError, ValidationError
from core.logger import get_logger

logger = get_logger(__name__)

FIXED_COLUMNS = ("fin_epoch", "final_accuracy", "n_epochs")


class CurvesDbService:
    """Service for the full-training database."""

    @staticmethod
    def enumerate_grid(axes: Sequence[HyperParamAxis]) -> list[Setting]:
        """All settings, lexicographic in axis order."""
        if not axes:
            raise EmptyGridError()
        names = [axis.name for axis in axes]
        return [
            Setting(values=dict(zip(names, combo)))
            for combo in itertools.product(*(axis.values for axis in axes))
        ]

    @staticmethod
    def sample_settings(
        axes: Sequence[HyperParamAxis], fraction: float, rng_seed: int
    ) -> list[Setting]:
        """Draw ceil(fraction * grid size) distinct settings uniformly."""
        if not 0.0 < fraction <= 1.0:
            raise ValidationError(f"fraction must lie in (0, 1], got {fraction}")
        grid = CurvesDbService.enumerate_grid(axes)
        # round() absorbs products like 0.1 * 60 = 6.000000000000001
        count = math.ceil(round(fraction * len(grid), 9))
        rng = np.random.default_rng(rng_seed)
        picks = rng.choice(len(grid), size=count, replace=False)
        return [grid[int(i)] for i in picks]

    @staticmethod
    def build_database(
        axes: Sequence[HyperParamAxis],
        settings: Sequence[Setting],
        trainer: Trainer,
        fin_epoch: int,
        seed: int = 0,
        max_workers: Optional[int] = None,
    ) -> Database:
        """Fully train every setting; failed trainings are skipped and logged."""
        if fin_epoch < 1:
            raise ValidationError(f"fin_epoch must be >= 1, got {fin_epoch}")
        seen = set()
        for setting in settings:
            validate_setting(setting, list(axes))
            if setting.identity() in seen:
                raise ValidationError(f"duplicate setting {setting.label()}")
            seen.add(setting.identity())

        def full_training(setting: Setting) -> Optional[TrainingRecord]:
            try:
                curve = trainer.train(setting, fin_epoch, seed)
                curve = LearningCurve(
                    epoch_accuracies=curve.epoch_accuracies,
                    final_accuracy=curve.epoch_accuracies[-1],
                    fin_epoch=fin_epoch,
                    diverged=curve.diverged,
                )
            except Exception as exc:  # a failed run must not sink the whole build
                logger.warning(f"Skipping setting {setting.label()}: {exc}")
                return None
            if curve.diverged:
                logger.warning(f"Setting {setting.label()} diverged after {curve.n_epochs} epochs")
            return TrainingRecord(setting=setting, curve=curve)

        workers = max_workers or app_settings.MAX_WORKERS
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map keeps input order whatever the completion order
            results = list(pool.map(full_training, settings))

        records = tuple(r for r in results if r is not None)
        skipped = len(results) - len(records)
        if skipped:
            logger.warning(f"{skipped} of {len(results)} settings failed and were skipped")
        logger.info(f"Built database with {len(records)} records (fin_epoch={fin_epoch})")
        return Database(axes=tuple(axes), records=records, seed=seed)

    @staticmethod
    def split(db: Database, n_train: int, rng_seed: int) -> tuple[Database, Database]:
        """Disjoint random partition; each part keeps the original record order."""
        total = len(db)
        if not 0 < n_train < total:
            raise ValidationError(f"n_train must lie in (0, {total}), got {n_train}")
        order = np.random.default_rng(rng_seed).permutation(total)
        train_idx = sorted(int(i) for i in order[:n_train])
        test_idx = sorted(int(i) for i in order[n_train:])
        train = Database(axes=db.axes, records=tuple(db.records[i] for i in train_idx), seed=db.seed)
        test = Database(axes=db.axes, records=tuple(db.records[i] for i in test_idx), seed=db.seed)
        return train, test

    @staticmethod
    def feature_matrix(db: Database, k: int) -> tuple[np.ndarray, np.ndarray]:
        """First-k accuracies of every record (rows) and their final accuracies."""
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        short = [i for i, record in enumerate(db.records) if record.curve.n_epochs < k]
        if short:
            raise ValidationError(f"records {short} have fewer than k={k} epochs")
        features = np.array(
            [record.curve.epoch_accuracies[:k] for record in db.records], dtype=float
        ).reshape(len(db), k)
        targets = np.array([record.final_accuracy for record in db.records], dtype=float)
        return features, targets

    @staticmethod
    def save_csv(db: Database, path: Union[str, Path]) -> None:
        """Write the database; rows carry a variable-length accuracy tail."""
        width = max((record.curve.n_epochs for record in db.records), default=0)
        header = (
            ["setting_id"]
            + [axis.name for axis in db.axes]
            + list(FIXED_COLUMNS)
            + [f"acc_{i}" for i in range(1, width + 1)]
        )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for setting_id, record in enumerate(db.records):
                curve = record.curve
                writer.writerow(
                    [setting_id]
                    + [axis.format(record.setting[axis.name]) for axis in db.axes]
                    + [curve.fin_epoch, repr(curve.final_accuracy), curve.n_epochs]
                    + [repr(acc) for acc in curve.epoch_accuracies]
                )

    @staticmethod
    def load_csv(path: Union[str, Path], axes: Sequence[HyperParamAxis], seed: int = 0) -> Database:
        """
        Read a database written by save_csv, validating every row.

        The file holds records only. The returned database takes `seed` from
        the caller, so a round trip restores records but not the build seed.
        """
        path = Path(path)
        axes = list(axes)
        names = [axis.name for axis in axes]
        records: list[TrainingRecord] = []
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None:
                raise CsvFormatError(1, "header", "file is empty")
            expected = ["setting_id"] + names + list(FIXED_COLUMNS)
            for column, name in enumerate(expected):
                if column >= len(header) or header[column] != name:
                    raise CsvFormatError(1, name, "missing or out of order in header")
            for row in reader:
                if not row:
                    continue
                records.append(_parse_row(row, reader.line_num, axes))

        try:
            return Database(axes=tuple(axes), records=tuple(records), seed=seed)
        except PydanticValidationError as exc:
            raise ValidationError(f"{path}: {exc.errors()[0]['msg']}") from exc


def _parse_row(row: list[str], line: int, axes: list[HyperParamAxis]) -> TrainingRecord:
    n_fixed = 1 + len(axes) + len(FIXED_COLUMNS)
    if len(row) < n_fixed:
        raise CsvFormatError(line, "row", f"expected at least {n_fixed} fields, got {len(row)}")

    def number(column: int, name: str, kind: type):
        try:
            return kind(row[column])
        except ValueError:
            raise CsvFormatError(line, name, f"cannot parse {row[column]!r}") from None

    number(0, "setting_id", int)
    values = {}
    for offset, axis in enumerate(axes, start=1):
        try:
            values[axis.name] = axis.parse(row[offset])
        except (ValueError, ValidationError):
            raise CsvFormatError(line, axis.name, f"invalid value {row[offset]!r}") from None

    base = 1 + len(axes)
    fin_epoch = number(base, "fin_epoch", int)
    final_accuracy = number(base + 1, "final_accuracy", float)
    n_epochs = number(base + 2, "n_epochs", int)
    tail = row[n_fixed:]
    if n_epochs < 1 or len(tail) != n_epochs:
        raise CsvFormatError(line, "n_epochs", f"declares {n_epochs} epochs, row has {len(tail)}")
    accuracies = [number(n_fixed + i, f"acc_{i + 1}", float) for i in range(n_epochs)]

    for name, value in [("final_accuracy", final_accuracy)] + [
        (f"acc_{i + 1}", acc) for i, acc in enumerate(accuracies)
    ]:
        if not 0.0 <= value <= 1.0:
            raise CsvFormatError(line, name, f"accuracy {value} outside [0, 1]")
    try:
        curve = LearningCurve(
            epoch_accuracies=tuple(accuracies), final_accuracy=final_accuracy, fin_epoch=fin_epoch
        )
    except PydanticValidationError as exc:
        raise CsvFormatError(line, "fin_epoch", exc.errors()[0]["msg"]) from exc
    return TrainingRecord(setting=Setting(values=values), curve=curve)
