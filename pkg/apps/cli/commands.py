"""
Pipeline commands behind manage.py.

Each command reads its inputs, calls the services and writes its files.
Return values are the written paths (or results) so callers and tests can
inspect them; the human-facing summary goes to stdout.
"""
import csv
from pathlib import Path
from typing import Optional, Sequence, Union

from apps.cli.schemas.run_config import RunConfig
from apps.curves_db.services.curves_db_service import CurvesDbService
from apps.explorer.schemas.explorer import ExplorationResult
from apps.explorer.services.explorer_service import ExplorerService
from apps.power_fit.services.power_fit_service import PowerFitService
from apps.predictor.schemas.prediction import PredictionOutcome
from apps.predictor.services.predictor_service import REPORT_COLUMNS, PredictorService
from apps.reports import svg
from apps.svr.services.svr_service import SvrService
from core.exceptions import CsvFormatError, DegenerateCurveError, ValidationError

PathLike = Union[str, Path]

DATABASE_FILE = "database.csv"
MODEL_FILE = "svr_model.txt"
KERNELS_FILE = "kernels.csv"
EVALUATION_FILE = "evaluation.csv"
HISTORY_FILE = "history.csv"
TOP_FILE = "top.csv"
SUMMARY_FILE = "summary.json"
EXHAUSTIVE_FILE = "exhaustive.csv"


def cmd_build_db(config: RunConfig, out_dir: PathLike) -> Path:
    """Sample a fraction of the grid, fully train it and write the database CSV."""
    pipeline = config.pipeline
    axes = config.hyper_axes()
    trainer = config.build_trainer()
    grid_size = len(CurvesDbService.enumerate_grid(axes))
    sample = CurvesDbService.sample_settings(axes, pipeline.fraction, pipeline.seed)
    if pipeline.n_records is not None:
        sample = sample[: pipeline.n_records]
    print(f"📊 Grid size: {grid_size} settings")
    print(f"📊 Sample fraction {pipeline.fraction:.2%}: {len(sample)} settings")

    db = CurvesDbService.build_database(axes, sample, trainer, pipeline.fin_epoch, seed=pipeline.seed)
    path = Path(out_dir) / DATABASE_FILE
    CurvesDbService.save_csv(db, path)
    print(f"✅ Wrote {len(db)} records to {path}")
    return path


def cmd_train_svr(config: RunConfig, db_path: PathLike, out_dir: PathLike) -> Path:
    """Train one SVR per kernel, keep the lowest test MSE and evaluate the gated predictor."""
    pipeline = config.pipeline
    db = CurvesDbService.load_csv(db_path, config.hyper_axes(), seed=pipeline.seed)
    n_train = pipeline.n_train if pipeline.n_train is not None else round(0.8 * len(db))
    train, test = CurvesDbService.split(db, n_train, pipeline.seed)
    print(f"📊 Split {len(db)} records: {len(train)} train / {len(test)} test (k={pipeline.k})")

    comparison = SvrService.compare_kernels(
        train,
        test,
        pipeline.k,
        config.svr_hyper(),
        config.kernel_specs(),
        tol=config.svr.tol,
        max_iter=config.svr.max_iter,
    )
    out = Path(out_dir)
    SvrService.write_kernels_csv(comparison, out / KERNELS_FILE)
    for kind, value in comparison.mse.items():
        marker = "✅" if kind == comparison.selected else "  "
        print(f"{marker} {kind:<10} test MSE {value:.6f}")

    model = comparison.models[comparison.selected]
    model_path = out / MODEL_FILE
    SvrService.save_model(model, model_path)
    report = PredictorService.evaluate_predictor(model, test, pipeline.k)
    PredictorService.write_report_csv(report, out / EVALUATION_FILE)
    print(
        f"📊 Predictor MSE {report.mse:.6f} (mean baseline {report.target_variance:.6f}), "
        f"fallback rate {report.fallback_rate:.2f}"
    )
    print(f"✅ Saved {comparison.selected} model ({model.n_sv} SVs) to {model_path}")
    return model_path


def cmd_evaluate(
    config: RunConfig, model_path: PathLike, db_path: PathLike, out_dir: PathLike
) -> Path:
    """Evaluate a saved model on every record of a database."""
    model = SvrService.load_model(model_path)
    db = CurvesDbService.load_csv(db_path, config.hyper_axes(), seed=config.pipeline.seed)
    report = PredictorService.evaluate_predictor(model, db, config.pipeline.k)
    path = Path(out_dir) / EVALUATION_FILE
    PredictorService.write_report_csv(report, path)
    print(f"📊 {len(report.rows)} records: MSE {report.mse:.6f}, fallback rate {report.fallback_rate:.2f}")
    print(f"✅ Wrote {path}")
    return path


def cmd_predict(
    model_path: PathLike,
    prefix: Sequence[float],
    fin_epoch: int,
    plot_path: Optional[PathLike] = None,
) -> PredictionOutcome:
    """Predict one run's final accuracy from its first epochs."""
    if not all(0.0 <= value <= 1.0 for value in prefix):
        raise ValidationError(f"accuracies must lie in [0, 1], got {list(prefix)}")
    model = SvrService.load_model(model_path)
    if len(prefix) != model.dimension:
        raise ValidationError(
            f"model was trained on {model.dimension} epochs, got a prefix of {len(prefix)}"
        )
    points = list(enumerate(prefix, start=1))
    outcome = PredictorService.predict_final_accuracy(model, points, fin_epoch)
    print(f"📊 value={outcome.value:.6f} source={outcome.source} svr_raw={outcome.svr_raw:.6f}")
    if outcome.fit is not None:
        print(f"📊 fit alpha={outcome.fit.alpha:.6f} beta={outcome.fit.beta:.6f} sse={outcome.fit.sse:.3e}")

    if plot_path is not None:
        fit = outcome.fit
        if fit is None:
            try:
                fit = PowerFitService.fit_power_law(points, max(prefix), fin_epoch)
            except DegenerateCurveError:
                fit = None
        fit_curve = fit.curve(range(1, fin_epoch + 1)) if fit is not None else None
        svg.curve_chart(prefix, outcome, fin_epoch, fit_curve=fit_curve).save(plot_path)
        print(f"✅ Wrote {plot_path}")
    return outcome


def cmd_explore(
    config: RunConfig, model_path: PathLike, out_dir: PathLike
) -> ExplorationResult:
    """Run the exploration and write history, top-n table and summary."""
    model = SvrService.load_model(model_path)
    axes = config.hyper_axes()
    trainer = config.build_trainer()
    result = ExplorerService.explore(axes, config.explorer_config(), trainer, model)

    out = Path(out_dir)
    ExplorerService.write_history_csv(result.history, axes, out / HISTORY_FILE)
    ExplorerService.write_top_csv(result.top, axes, out / TOP_FILE)
    ExplorerService.write_summary_json(result, out / SUMMARY_FILE)
    print(f"📊 {result.iterations} iterations, {len(result.history)} rewards, {len(result.top)} retrained")
    if result.converged_setting is not None:
        print(f"📊 Probabilities converged on {result.converged_setting.label()}")
    print(f"✅ Best setting {result.best_setting.label()}: {result.best_final_accuracy:.4f}")
    return result


def cmd_exhaustive(config: RunConfig, out_dir: PathLike) -> Path:
    """Fully train the whole grid; the reference the explorer is judged against."""
    axes = config.hyper_axes()
    db = ExplorerService.exhaustive_search(
        config.build_trainer(), axes, config.pipeline.fin_epoch, config.pipeline.seed
    )
    path = Path(out_dir) / EXHAUSTIVE_FILE
    CurvesDbService.save_csv(db, path)
    best = max(db.records, key=lambda record: record.final_accuracy)
    print(f"📊 Trained {len(db)} settings")
    print(f"✅ Best setting {best.setting.label()}: {best.final_accuracy:.4f}")
    return path


def cmd_plot(csv_path: PathLike, out_dir: Optional[PathLike] = None) -> Path:
    """Render an evaluation, history or kernel CSV as SVG named after the CSV."""
    csv_path = Path(csv_path)
    with csv_path.open("r", encoding="utf-8", newline="") as handle:
        header = next(csv.reader(handle), None)
    if not header:
        raise CsvFormatError(1, "header", "file is empty")

    if tuple(header) == REPORT_COLUMNS:
        chart = svg.evaluation_chart(PredictorService.read_report_csv(csv_path))
    elif header[0] == "t":
        chart = svg.history_chart(ExplorerService.read_history_rewards(csv_path))
    elif header[:2] == ["record_id", "ground_truth"]:
        chart = svg.kernel_chart(SvrService.read_kernels_csv(csv_path))
    else:
        raise CsvFormatError(1, "header", "not an evaluation, history or kernel table")

    directory = Path(out_dir) if out_dir is not None else csv_path.parent
    path = directory / f"{csv_path.stem}.svg"
    chart.save(path)
    print(f"✅ Wrote {path}")
    return path
