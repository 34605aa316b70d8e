"""
Tests for the gated predictor and its evaluation report.
"""
import numpy as np
import pytest

from apps.curves_db.schemas.curves import LearningCurve
from apps.curves_db.services.curves_db_service import CurvesDbService
from apps.predictor.services.predictor_service import PredictorService, accept_svr
from apps.svr.schemas.svr import KernelSpec, SvrHyper, SvrModel
from apps.svr.services.svr_service import SvrService
from apps.trainers.schemas.trainer_specs import SyntheticSurface, default_axes
from apps.trainers.services.synthetic import SyntheticTrainer
from core.exceptions import CsvFormatError, DegenerateCurveError, ValidationError

PREFIX = [(1, 0.5), (2, 0.6), (3, 0.7)]


def constant_model(value, dimension=3):
    return SvrModel(bias=value, kernel=KernelSpec(kind="gaussian", gamma=1.0), dimension=dimension)


@pytest.mark.parametrize(
    "svr_raw, expected_source",
    [
        (0.85, "svr"),
        (1.0, "svr"),
        (1.2, "curve_fit"),
        (0.25, "curve_fit"),
        (0.7, "curve_fit"),
    ],
)
def test_gate_truth_table(svr_raw, expected_source):
    outcome = PredictorService.predict_final_accuracy(constant_model(svr_raw), PREFIX, fin_epoch=50)
    assert outcome.source == expected_source
    assert outcome.svr_raw == svr_raw
    assert outcome.acc_max == 0.7
    if expected_source == "svr":
        assert outcome.value == svr_raw
        assert outcome.fit is None
    else:
        assert outcome.fit is not None
        assert 0.7 <= outcome.value <= 1.0


def test_accept_svr_boundaries():
    assert not accept_svr(0.7, 0.7)
    assert accept_svr(0.7000001, 0.7)
    assert accept_svr(1.0, 0.7)
    assert not accept_svr(1.0000001, 0.7)


def test_prediction_requires_two_epochs():
    with pytest.raises(ValidationError):
        PredictorService.predict_final_accuracy(constant_model(0.8, 1), [(1, 0.5)], fin_epoch=10)


def test_prediction_rejects_out_of_range_accuracy():
    with pytest.raises(ValidationError):
        PredictorService.predict_final_accuracy(constant_model(0.8), [(1, 0.5), (2, 1.2), (3, 0.9)], 10)


def test_prediction_rejects_unordered_epochs():
    with pytest.raises(ValidationError):
        PredictorService.predict_final_accuracy(constant_model(0.8), [(2, 0.5), (1, 0.6), (3, 0.7)], 10)


def test_prediction_rejects_short_budget():
    with pytest.raises(ValidationError):
        PredictorService.predict_final_accuracy(constant_model(0.8), PREFIX, fin_epoch=2)


def test_fallback_on_all_zero_prefix_is_degenerate():
    with pytest.raises(DegenerateCurveError):
        PredictorService.predict_final_accuracy(
            constant_model(2.0), [(1, 0.0), (2, 0.0), (3, 0.0)], fin_epoch=10
        )


def test_extract_features():
    curve = LearningCurve(epoch_accuracies=(0.1, 0.2, 0.3, 0.4, 0.5), fin_epoch=10)
    assert PredictorService.extract_features(curve, 3) == (0.1, 0.2, 0.3)
    assert PredictorService.extract_features(curve, 5) == curve.epoch_accuracies


@pytest.mark.parametrize("k", [0, 6])
def test_extract_features_rejects_bad_k(k):
    curve = LearningCurve(epoch_accuracies=(0.1, 0.2, 0.3, 0.4, 0.5), fin_epoch=10)
    with pytest.raises(ValidationError):
        PredictorService.extract_features(curve, k)


def test_out_of_range_model_always_falls_back(curves_db):
    report = PredictorService.evaluate_predictor(constant_model(2.0), curves_db, 3)
    assert report.fallback_rate == 1.0
    assert all(row.source == "curve_fit" for row in report.rows)
    assert len(report.rows) == len(curves_db)


def test_evaluation_statistics(curves_db, trained_model):
    report = PredictorService.evaluate_predictor(trained_model, curves_db, 3)
    truth = np.array([r.final_accuracy for r in curves_db.records])
    predicted = np.array([row.predicted for row in report.rows])
    assert report.mse == pytest.approx(float(np.mean((predicted - truth) ** 2)))
    assert report.target_variance == pytest.approx(float(np.var(truth)))
    assert 0.0 <= report.fallback_rate <= 1.0
    for row in report.rows:
        assert 0.0 <= row.predicted <= 1.0


def test_trained_model_beats_mean_baseline_on_training_records(curves_db, trained_model):
    report = PredictorService.evaluate_predictor(trained_model, curves_db, 3)
    assert report.mse < report.target_variance


def test_evaluate_rejects_prefix_longer_than_curves(curves_db):
    with pytest.raises(ValidationError):
        PredictorService.evaluate_predictor(constant_model(0.5, 40), curves_db, 40)


def test_report_csv_round_trip(curves_db, trained_model, tmp_path):
    report = PredictorService.evaluate_predictor(trained_model, curves_db, 3)
    path = tmp_path / "evaluation.csv"
    PredictorService.write_report_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "record_id,true_final,predicted,source,abs_error"
    assert lines[-1].startswith("# mse=")
    assert PredictorService.read_report_csv(path) == report


def test_report_csv_without_summary_recomputes(tmp_path):
    path = tmp_path / "evaluation.csv"
    path.write_text(
        "record_id,true_final,predicted,source,abs_error\n"
        "0,0.8,0.7,svr,0.1\n"
        "1,0.6,0.6,curve_fit,0.0\n"
    )
    report = PredictorService.read_report_csv(path)
    assert report.mse == pytest.approx(0.005)
    assert report.fallback_rate == 0.5
    assert report.target_variance == pytest.approx(0.01)


def test_report_csv_rejects_empty_file(tmp_path):
    path = tmp_path / "evaluation.csv"
    path.write_text("")
    with pytest.raises(CsvFormatError):
        PredictorService.read_report_csv(path)


def test_report_csv_rejects_bad_source(tmp_path):
    path = tmp_path / "evaluation.csv"
    path.write_text("record_id,true_final,predicted,source,abs_error\n0,0.8,0.7,guess,0.1\n")
    with pytest.raises(CsvFormatError) as info:
        PredictorService.read_report_csv(path)
    assert info.value.line == 2


def test_report_csv_accepts_quoted_fields(tmp_path):
    path = tmp_path / "evaluation.csv"
    path.write_text(
        "record_id,true_final,predicted,source,abs_error\n"
        "\"0\",\"0.8\",\"0.7\",\"svr\",\"0.1\"\n"
        "# mse=0.01 fallback_rate=0.0 target_variance=0.0\n"
    )
    report = PredictorService.read_report_csv(path)
    assert report.rows[0].source == "svr"
    assert report.rows[0].predicted == 0.7
    assert report.mse == 0.01


def test_report_csv_names_line_of_short_row(tmp_path):
    path = tmp_path / "evaluation.csv"
    path.write_text("record_id,true_final,predicted,source,abs_error\n0,0.8,0.7,svr,0.1\n1,0.6\n")
    with pytest.raises(CsvFormatError) as info:
        PredictorService.read_report_csv(path)
    assert info.value.line == 3


def test_split_evaluation_uses_only_test_records(curves_db, trained_model):
    _, test = CurvesDbService.split(curves_db, 12, rng_seed=3)
    report = PredictorService.evaluate_predictor(trained_model, test, 3)
    assert [row.record_id for row in report.rows] == [0, 1, 2, 3]


@pytest.mark.slow
@pytest.mark.parametrize("k", [2, 4])
def test_predictor_beats_mean_baseline_across_seeds(k):
    axes = default_axes()
    wins = 0
    for seed in range(20):
        trainer = SyntheticTrainer(SyntheticSurface.generate(axes, seed=seed, noise=0.01))
        sample = CurvesDbService.sample_settings(axes, 0.5, rng_seed=seed)[:44]
        db = CurvesDbService.build_database(axes, sample, trainer, fin_epoch=50, seed=seed)
        train, test = CurvesDbService.split(db, 35, rng_seed=seed)
        X, y = CurvesDbService.feature_matrix(train, k)
        model = SvrService.train_svr(X, y, KernelSpec(kind="gaussian"), SvrHyper())
        report = PredictorService.evaluate_predictor(model, test, k)
        wins += report.mse < report.target_variance
    assert wins >= 18
