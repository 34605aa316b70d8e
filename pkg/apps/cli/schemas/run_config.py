"""
Run configuration: one sectioned TOML file per experiment.

Every section has defaults, so an empty file is a valid configuration.
Unknown keys are rejected with the dotted key in the message.
"""
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field
from pydantic import ValidationError as PydanticValidationError

from apps.curves_db.schemas.curves import HyperParamAxis
from apps.explorer.schemas.explorer import ExplorerConfig, Threshold
from apps.svr.schemas.svr import KERNEL_KINDS, KernelKind, KernelSpec, SvrHyper
from apps.trainers.schemas.trainer_specs import (
    BATCH_SIZE,
    LEARNING_RATE,
    OPTIMIZER,
    ClassifierSpec,
    EarlyStoppingSpec,
    SyntheticSurface,
    default_axes,
)
from apps.trainers.services.base import Trainer
from apps.trainers.services.classifier import ClassifierTrainer
from apps.trainers.services.synthetic import SyntheticTrainer
from core.exceptions import ConfigError


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PipelineSection(Section):
    seed: int = 0
    k: int = Field(default=3, ge=2)
    fin_epoch: int = Field(default=50, ge=2)
    fraction: float = Field(default=0.10, gt=0.0, le=1.0)
    # Cap on the sampled settings kept for the database.
    n_records: Optional[int] = Field(default=None, ge=2)
    n_train: Optional[int] = Field(default=None, ge=1)


def _default_values(name: str) -> list:
    return list(next(axis for axis in default_axes() if axis.name == name).values)


class AxesSection(Section):
    learning_rates: list[float] = Field(default_factory=lambda: _default_values(LEARNING_RATE))
    batch_sizes: list[int] = Field(default_factory=lambda: _default_values(BATCH_SIZE))
    optimizers: list[str] = Field(default_factory=lambda: _default_values(OPTIMIZER))


class TrainerSection(Section):
    kind: Literal["synthetic", "classifier"] = "synthetic"
    patience: int = Field(default=5, ge=1)
    min_delta: float = Field(default=1e-4, ge=0.0)
    # Seeds the blob dataset or the synthetic surface.
    data_seed: int = 0
    noise: float = Field(default=0.01, ge=0.0)
    early_noise: float = Field(default=0.0, ge=0.0)
    rate_low: float = Field(default=0.2, gt=0.0)
    rate_high: float = Field(default=0.6, gt=0.0)
    plateau_low: float = Field(default=0.3, gt=0.0, le=1.0)
    plateau_high: float = Field(default=0.95, gt=0.0, le=1.0)
    n_classes: int = Field(default=5, ge=2)
    n_features: int = Field(default=2, ge=1)
    n_samples: int = Field(default=600, ge=10)
    cluster_std: float = Field(default=1.5, gt=0.0)
    center_box: float = Field(default=5.0, gt=0.0)
    hidden_units: int = Field(default=16, ge=0)
    validation_fraction: float = Field(default=0.25, gt=0.0, lt=1.0)


class SvrSection(Section):
    C: float = Field(default=10.0, gt=0.0)
    epsilon: float = Field(default=0.01, ge=0.0)
    gamma: Optional[float] = Field(default=None, gt=0.0)
    degree: int = Field(default=3, ge=1)
    coef0: float = 1.0
    tol: float = Field(default=1e-4, gt=0.0)
    max_iter: int = Field(default=1_000_000, ge=1)
    kernels: list[KernelKind] = Field(default_factory=lambda: list(KERNEL_KINDS), min_length=1)


class ExplorerSection(Section):
    delta: float = Field(default=0.05, gt=0.0, lt=1.0)
    radius: int = Field(default=1, ge=0)
    threshold: Threshold = 0.8
    thresholds: dict[str, Threshold] = Field(default_factory=dict)
    max_iterations: int = Field(default=200, ge=1)
    p_floor: float = Field(default=0.01, ge=0.0, lt=1.0)
    top_n: int = Field(default=10, ge=1)


class RunConfig(Section):
    """Everything a pipeline run needs, one section per stage."""

    pipeline: PipelineSection = Field(default_factory=PipelineSection)
    axes: AxesSection = Field(default_factory=AxesSection)
    trainer: TrainerSection = Field(default_factory=TrainerSection)
    svr: SvrSection = Field(default_factory=SvrSection)
    explorer: ExplorerSection = Field(default_factory=ExplorerSection)

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except PydanticValidationError as exc:
            error = exc.errors()[0]
            key = ".".join(str(part) for part in error["loc"])
            if error["type"] == "extra_forbidden":
                raise ConfigError(f"unknown config key '{key}'", key=key) from None
            raise ConfigError(f"invalid value for '{key}': {error['msg']}", key=key) from None

    @classmethod
    def load(cls, path: Optional[Union[str, Path]]) -> "RunConfig":
        """Read a TOML file; no path means all defaults."""
        if path is None:
            return cls()
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            data = tomllib.loads(path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_mapping(data)

    def with_overrides(self, **overrides: Optional[Union[int, float]]) -> "RunConfig":
        """Apply command-line flags given as dotted keys with `__`, e.g. pipeline__seed=3."""
        data = self.model_dump()
        for flag, value in overrides.items():
            if value is None:
                continue
            section, key = flag.split("__", 1)
            data[section][key] = value
        return RunConfig.from_mapping(data)

    def hyper_axes(self) -> list[HyperParamAxis]:
        try:
            return [
                HyperParamAxis(name=LEARNING_RATE, kind="real", values=tuple(self.axes.learning_rates)),
                HyperParamAxis(name=BATCH_SIZE, kind="integer", values=tuple(self.axes.batch_sizes)),
                HyperParamAxis(name=OPTIMIZER, kind="categorical", values=tuple(self.axes.optimizers)),
            ]
        except PydanticValidationError as exc:
            raise ConfigError(f"invalid axes: {exc.errors()[0]['msg']}", key="axes") from None

    def early_stopping(self) -> EarlyStoppingSpec:
        return EarlyStoppingSpec(patience=self.trainer.patience, min_delta=self.trainer.min_delta)

    def build_trainer(self) -> Trainer:
        section = self.trainer
        axes = self.hyper_axes()
        try:
            if section.kind == "synthetic":
                surface = SyntheticSurface.generate(
                    axes,
                    seed=section.data_seed,
                    noise=section.noise,
                    early_noise=section.early_noise,
                    plateau_low=section.plateau_low,
                    plateau_high=section.plateau_high,
                    rate_low=section.rate_low,
                    rate_high=section.rate_high,
                    early_stopping=self.early_stopping(),
                )
                return SyntheticTrainer(surface)
            spec = ClassifierSpec(
                axes=tuple(axes),
                n_classes=section.n_classes,
                n_features=section.n_features,
                n_samples=section.n_samples,
                cluster_std=section.cluster_std,
                center_box=section.center_box,
                hidden_units=section.hidden_units,
                validation_fraction=section.validation_fraction,
                data_seed=section.data_seed,
                early_stopping=self.early_stopping(),
            )
        except PydanticValidationError as exc:
            raise ConfigError(f"invalid trainer: {exc.errors()[0]['msg']}", key="trainer") from None
        return ClassifierTrainer(spec)

    def svr_hyper(self) -> SvrHyper:
        return SvrHyper(C=self.svr.C, epsilon=self.svr.epsilon)

    def kernel_specs(self) -> list[KernelSpec]:
        return [self.kernel_spec(kind) for kind in self.svr.kernels]

    def kernel_spec(self, kind: KernelKind) -> KernelSpec:
        return KernelSpec(kind=kind, gamma=self.svr.gamma, degree=self.svr.degree, coef0=self.svr.coef0)

    def explorer_config(self) -> ExplorerConfig:
        section = self.explorer
        return ExplorerConfig(
            delta=section.delta,
            radius=section.radius,
            threshold=section.threshold,
            thresholds=section.thresholds,
            max_iterations=section.max_iterations,
            p_floor=section.p_floor,
            k=self.pipeline.k,
            fin_epoch=self.pipeline.fin_epoch,
            top_n=section.top_n,
            seed=self.pipeline.seed,
        )
