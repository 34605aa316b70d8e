"""
Predictor service: SVR prediction gated by plausibility, with a power-law fallback.
"""
import csv
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from apps.curves_db.schemas.curves import Database, LearningCurve
from apps.power_fit.services.power_fit_service import PowerFitService
from apps.predictor.schemas.prediction import EvaluationReport, EvaluationRow, PredictionOutcome
from apps.svr.schemas.svr import SvrModel
from apps.svr.services.svr_service import SvrService
from core.exceptions import CsvFormatError, ValidationError
from core.logger import get_logger

logger = get_logger(__name__)

REPORT_COLUMNS = ("record_id", "true_final", "predicted", "source", "abs_error")


def accept_svr(svr_raw: float, acc_max: float) -> bool:
    """Gate: the SVR output is kept iff acc_max < svr_raw <= 1."""
    return acc_max < svr_raw <= 1.0


class PredictorService:
    """Service combining the SVR with the curve-fit fallback."""

    @staticmethod
    def extract_features(curve: LearningCurve, k: int) -> tuple[float, ...]:
        """First k epoch accuracies in epoch order."""
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        if k > curve.n_epochs:
            raise ValidationError(f"k={k} exceeds the curve length {curve.n_epochs}")
        return tuple(curve.epoch_accuracies[:k])

    @staticmethod
    def predict_final_accuracy(
        model: SvrModel, prefix: Sequence[tuple[int, float]], fin_epoch: int
    ) -> PredictionOutcome:
        """Predict the converged accuracy of a run from its first epochs."""
        points = [(int(epoch), float(acc)) for epoch, acc in prefix]
        if len(points) < 2:
            raise ValidationError(f"prefix needs at least 2 epochs, got {len(points)}")
        if [epoch for epoch, _ in points] != list(range(1, len(points) + 1)):
            raise ValidationError("prefix epochs must be 1..k in order")
        if not all(0.0 <= acc <= 1.0 for _, acc in points):
            raise ValidationError("prefix accuracies must lie in [0, 1]")
        if fin_epoch < len(points):
            raise ValidationError(f"fin_epoch={fin_epoch} precedes the observed prefix")

        accuracies = [acc for _, acc in points]
        svr_raw = SvrService.predict(model, accuracies)
        acc_max = max(accuracies)
        if accept_svr(svr_raw, acc_max):
            return PredictionOutcome(value=svr_raw, source="svr", svr_raw=svr_raw, acc_max=acc_max)

        fit = PowerFitService.fit_power_law(points, acc_max, fin_epoch)
        value = PowerFitService.predict_final(fit)
        logger.debug(f"SVR output {svr_raw:.6f} gated out (acc_max={acc_max:.6f}); curve fit gives {value:.6f}")
        return PredictionOutcome(
            value=value, source="curve_fit", svr_raw=svr_raw, acc_max=acc_max, fit=fit
        )

    @staticmethod
    def evaluate_predictor(model: SvrModel, test_db: Database, k: int) -> EvaluationReport:
        """Predict every test record from its first k epochs and compare with its final accuracy."""
        if len(test_db) == 0:
            raise ValidationError("empty test set")
        rows = []
        for record_id, record in enumerate(test_db.records):
            features = PredictorService.extract_features(record.curve, k)
            outcome = PredictorService.predict_final_accuracy(
                model, list(enumerate(features, start=1)), record.curve.fin_epoch
            )
            rows.append(
                EvaluationRow(
                    record_id=record_id,
                    true_final=record.final_accuracy,
                    predicted=outcome.value,
                    source=outcome.source,
                )
            )

        truth = np.array([row.true_final for row in rows])
        predicted = np.array([row.predicted for row in rows])
        fallbacks = sum(row.source == "curve_fit" for row in rows)
        report = EvaluationReport(
            rows=tuple(rows),
            mse=float(np.mean((predicted - truth) ** 2)),
            fallback_rate=fallbacks / len(rows),
            target_variance=float(np.var(truth)),
        )
        logger.info(
            f"Evaluated {len(rows)} records: MSE {report.mse:.6f}, "
            f"mean baseline {report.target_variance:.6f}, fallback rate {report.fallback_rate:.2f}"
        )
        if fallbacks:
            logger.warning(f"{fallbacks} of {len(rows)} predictions fell back to the curve fit")
        return report

    @staticmethod
    def write_report_csv(report: EvaluationReport, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for row in report.rows:
                writer.writerow(
                    [row.record_id, repr(row.true_final), repr(row.predicted), row.source, repr(row.abs_error)]
                )
            handle.write(
                f"# mse={report.mse!r} fallback_rate={report.fallback_rate!r} "
                f"target_variance={report.target_variance!r}\n"
            )

    @staticmethod
    def read_report_csv(path: Union[str, Path]) -> EvaluationReport:
        """Parse a report written by write_report_csv."""
        path = Path(path)
        rows = []
        summary: dict[str, float] = {}
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None:
                raise CsvFormatError(1, "header", "file is empty")
            if tuple(header) != REPORT_COLUMNS:
                raise CsvFormatError(1, "header", f"expected {','.join(REPORT_COLUMNS)}")
            for fields in reader:
                number = reader.line_num
                if not fields:
                    continue
                if fields[0].startswith("#"):
                    line = ",".join(fields)
                    try:
                        summary = {
                            key: float(value)
                            for key, value in (item.split("=", 1) for item in line[1:].split())
                        }
                    except ValueError:
                        raise CsvFormatError(number, "summary", f"cannot parse {line!r}") from None
                    continue
                if len(fields) != len(REPORT_COLUMNS):
                    raise CsvFormatError(number, "row", f"expected {len(REPORT_COLUMNS)} fields")
                try:
                    rows.append(
                        EvaluationRow(
                            record_id=int(fields[0]),
                            true_final=float(fields[1]),
                            predicted=float(fields[2]),
                            source=fields[3],
                        )
                    )
                except ValueError as exc:
                    raise CsvFormatError(number, "row", str(exc).splitlines()[0]) from None
            last_line = reader.line_num
        if not rows:
            raise CsvFormatError(last_line, "row", "report has no rows")
        truth = np.array([row.true_final for row in rows])
        predicted = np.array([row.predicted for row in rows])
        return EvaluationReport(
            rows=tuple(rows),
            mse=summary.get("mse", float(np.mean((predicted - truth) ** 2))),
            fallback_rate=summary.get(
                "fallback_rate", sum(row.source == "curve_fit" for row in rows) / len(rows)
            ),
            target_variance=summary.get("target_variance", float(np.var(truth))),
        )
