"""
Probability-matching hyper-parameter exploration.

Each axis keeps a probability vector over its values. A sampled setting is
partially trained, its final accuracy is predicted, and the vectors are pushed
towards (reward up) or away from (reward down) the sampled values and their
index neighbours. The best predicted settings are fully trained at the end.
"""
import csv
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from apps.curves_db.schemas.curves import Database, HyperParamAxis, Setting
from apps.curves_db.services.curves_db_service import CurvesDbService
from apps.explorer.schemas.explorer import (
    ExplorationResult,
    ExplorerConfig,
    ExplorerState,
    HistoryEntry,
    TopEntry,
)
from apps.predictor.services.predictor_service import PredictorService
from apps.svr.schemas.svr import SvrModel
from apps.trainers.services.base import Trainer
from core.config import settings as app_settings
from core.exceptions import CsvFormatError, ExplorationError, ValidationError
from core.logger import get_logger
from shared.utils.seeding import derive_rng

logger = get_logger(__name__)


def apply_floor(p: np.ndarray, p_floor: float) -> np.ndarray:
    """Lift entries to p_floor, taking the mass from the excess of the others.

    Vectors already at or above the floor and summing to one come back unchanged.
    """
    excess = np.maximum(p - p_floor, 0.0)
    return p_floor + (1.0 - p.size * p_floor) * excess / excess.sum()


def neighbourhood(axis: HyperParamAxis, index: int, radius: int) -> np.ndarray:
    """Boolean mask of indices within radius of index, clipped at the ends."""
    reach = radius if axis.ordered else 0
    positions = np.arange(axis.size)
    return np.abs(positions - index) <= reach


class ExplorerService:
    """Service for the exploration loop and its files."""

    @staticmethod
    def init_state(axes: Sequence[HyperParamAxis], config: ExplorerConfig) -> ExplorerState:
        """Uniform vectors, no baseline reward, empty history."""
        axes = tuple(axes)
        if not axes:
            raise ValidationError("exploration needs at least one axis")
        names = {axis.name for axis in axes}
        unknown = sorted(set(config.thresholds) - names)
        if unknown:
            raise ValidationError(f"thresholds name unknown axes {unknown}")
        for axis in axes:
            if config.p_floor * axis.size >= 1.0:
                raise ValidationError(
                    f"p_floor={config.p_floor} leaves no mass on axis '{axis.name}' of size {axis.size}"
                )
        return ExplorerState(
            axes=axes,
            config=config,
            probabilities=tuple(tuple([1.0 / axis.size] * axis.size) for axis in axes),
        )

    @staticmethod
    def sample_setting(state: ExplorerState, rng: np.random.Generator) -> Setting:
        """Draw each axis value independently from its probability vector."""
        values = {}
        for axis, probabilities in zip(state.axes, state.probabilities):
            p = np.asarray(probabilities, dtype=float)
            values[axis.name] = axis.values[int(rng.choice(axis.size, p=p / p.sum()))]
        return Setting(values=values)

    @staticmethod
    def update_probabilities(
        state: ExplorerState, chosen: Setting, reward: float, source: str = "svr"
    ) -> ExplorerState:
        """Compare reward with the previous one and move probability mass accordingly."""
        if not 0.0 <= reward <= 1.0:
            raise ValidationError(f"reward must lie in [0, 1], got {reward}")
        iteration = state.iteration + 1
        history = state.history + (
            HistoryEntry(iteration=iteration, setting=chosen, reward=reward, source=source),
        )
        previous = state.last_reward
        if previous is None or reward == previous:
            return state.model_copy(
                update={"last_reward": reward, "history": history, "iteration": iteration}
            )

        sign = 1.0 if reward > previous else -1.0
        config = state.config
        updated = []
        for axis, probabilities in zip(state.axes, state.probabilities):
            p = np.asarray(probabilities, dtype=float)
            inside = neighbourhood(axis, axis.index_of(chosen[axis.name]), config.radius)
            n_in, n_out = int(inside.sum()), int((~inside).sum())
            if n_out:
                p = p + np.where(inside, sign * config.delta / n_in, -sign * config.delta / n_out)
                p = apply_floor(p, config.p_floor)
            updated.append(tuple(float(v) for v in p))
        return state.model_copy(
            update={
                "probabilities": tuple(updated),
                "last_reward": reward,
                "history": history,
                "iteration": iteration,
            }
        )

    @staticmethod
    def converged(state: ExplorerState, config: Optional[ExplorerConfig] = None) -> Optional[Setting]:
        """The argmax setting once every axis maximum strictly exceeds its threshold."""
        config = config or state.config
        values = {}
        for axis, probabilities in zip(state.axes, state.probabilities):
            p = np.asarray(probabilities)
            best = int(np.argmax(p))
            if not p[best] > config.threshold_for(axis.name):
                return None
            values[axis.name] = axis.values[best]
        return Setting(values=values)

    @staticmethod
    def explore(
        axes: Sequence[HyperParamAxis],
        config: ExplorerConfig,
        trainer: Trainer,
        svr_model: SvrModel,
        rng: Optional[np.random.Generator] = None,
    ) -> ExplorationResult:
        """Run the sampling loop, then fully train the best predicted settings."""
        if svr_model.dimension != config.k:
            raise ValidationError(
                f"SVR model expects {svr_model.dimension} epochs, explorer uses k={config.k}"
            )
        rng = rng or derive_rng(config.seed, "explore")
        state = ExplorerService.init_state(axes, config)
        converged_setting = None
        failures = 0
        steps = 0
        for step in range(1, config.max_iterations + 1):
            steps = step
            setting = ExplorerService.sample_setting(state, rng)
            try:
                # one trainer seed for every setting, so a resample reproduces its prefix
                curve = trainer.train(setting, config.k, config.seed)
                prefix = PredictorService.extract_features(curve, config.k)
                outcome = PredictorService.predict_final_accuracy(
                    svr_model, list(enumerate(prefix, start=1)), config.fin_epoch
                )
            except Exception as exc:
                failures += 1
                logger.warning(f"Iteration {step} skipped for {setting.label()}: {exc}")
                continue
            # keep history iteration numbers aligned with loop steps
            state = state.model_copy(update={"iteration": step - 1})
            state = ExplorerService.update_probabilities(
                state, setting, outcome.value, outcome.source
            )
            converged_setting = ExplorerService.converged(state, config)
            if converged_setting is not None:
                logger.info(f"Converged on {converged_setting.label()} after {step} iterations")
                break

        if not state.history:
            raise ExplorationError(f"all {failures} exploration iterations failed")
        if failures:
            logger.warning(f"{failures} exploration iterations failed and were skipped")

        top = ExplorerService.retrain_top(state.history, trainer, config)
        best = max(top, key=lambda entry: (entry.final_accuracy, -entry.rank))
        logger.info(
            f"Best setting {best.setting.label()}: final accuracy {best.final_accuracy:.4f}"
        )
        return ExplorationResult(
            best_setting=best.setting,
            best_final_accuracy=best.final_accuracy,
            history=state.history,
            top=tuple(top),
            converged_setting=converged_setting,
            probabilities={
                axis.name: p for axis, p in zip(state.axes, state.probabilities)
            },
            iterations=steps,
        )

    @staticmethod
    def top_candidates(history: Sequence[HistoryEntry], top_n: int) -> list[HistoryEntry]:
        """Distinct settings with the highest rewards; ties keep the earliest iteration."""
        ranked = sorted(history, key=lambda entry: (-entry.reward, entry.iteration))
        seen = set()
        picked = []
        for entry in ranked:
            if entry.setting.identity() in seen:
                continue
            seen.add(entry.setting.identity())
            picked.append(entry)
            if len(picked) == top_n:
                break
        return picked

    @staticmethod
    def retrain_top(
        history: Sequence[HistoryEntry], trainer: Trainer, config: ExplorerConfig
    ) -> list[TopEntry]:
        candidates = ExplorerService.top_candidates(history, config.top_n)

        def full_training(entry: HistoryEntry) -> Optional[float]:
            try:
                curve = trainer.train(entry.setting, config.fin_epoch, config.seed)
            except Exception as exc:
                logger.warning(f"Full training of {entry.setting.label()} failed: {exc}")
                return None
            return curve.epoch_accuracies[-1]

        with ThreadPoolExecutor(max_workers=app_settings.MAX_WORKERS) as pool:
            finals = list(pool.map(full_training, candidates))

        top = [
            TopEntry(rank=rank, setting=entry.setting, predicted=entry.reward, final_accuracy=final)
            for rank, (entry, final) in enumerate(zip(candidates, finals), start=1)
            if final is not None
        ]
        if not top:
            raise ExplorationError("every full retraining of the top settings failed")
        for entry in top:
            logger.info(
                f"#{entry.rank} {entry.setting.label()}: predicted {entry.predicted:.4f}, "
                f"trained {entry.final_accuracy:.4f}"
            )
        return top

    @staticmethod
    def exhaustive_search(
        trainer: Trainer, axes: Sequence[HyperParamAxis], fin_epoch: int, seed: int
    ) -> Database:
        """Fully train every setting of the grid."""
        grid = CurvesDbService.enumerate_grid(axes)
        logger.info(f"Exhaustive search over {len(grid)} settings")
        return CurvesDbService.build_database(axes, grid, trainer, fin_epoch, seed=seed)

    @staticmethod
    def write_history_csv(
        history: Sequence[HistoryEntry], axes: Sequence[HyperParamAxis], path: Union[str, Path]
    ) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["t"] + [axis.name for axis in axes] + ["reward", "source"])
            for entry in history:
                writer.writerow(
                    [entry.iteration]
                    + [axis.format(entry.setting[axis.name]) for axis in axes]
                    + [repr(entry.reward), entry.source]
                )

    @staticmethod
    def read_history_rewards(path: Union[str, Path]) -> list[tuple[int, float]]:
        """(iteration, reward) pairs of a history CSV."""
        path = Path(path)
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if not header or header[0] != "t" or header[-2:] != ["reward", "source"]:
                raise CsvFormatError(1, "header", "expected t,<axes...>,reward,source")
            trace = []
            for row in reader:
                if not row:
                    continue
                try:
                    trace.append((int(row[0]), float(row[-2])))
                except (ValueError, IndexError):
                    raise CsvFormatError(reader.line_num, "reward", f"cannot parse {row!r}") from None
        if not trace:
            raise CsvFormatError(1, "row", "history has no rows")
        return trace

    @staticmethod
    def write_top_csv(
        top: Sequence[TopEntry], axes: Sequence[HyperParamAxis], path: Union[str, Path]
    ) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["rank"] + [axis.name for axis in axes] + ["predicted", "final_accuracy"])
            for entry in top:
                writer.writerow(
                    [entry.rank]
                    + [axis.format(entry.setting[axis.name]) for axis in axes]
                    + [repr(entry.predicted), repr(entry.final_accuracy)]
                )

    @staticmethod
    def write_summary_json(result: ExplorationResult, path: Union[str, Path]) -> None:
        summary = {
            "best_setting": result.best_setting.values,
            "best_final_accuracy": result.best_final_accuracy,
            "converged_setting": (
                result.converged_setting.values if result.converged_setting else None
            ),
            "iterations": result.iterations,
            "history_length": len(result.history),
            "probabilities": {name: list(p) for name, p in result.probabilities.items()},
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
