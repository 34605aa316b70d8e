"""
Grid, learning-curve and database schemas.
"""
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.exceptions import ValidationError

AxisValue = Union[int, float, str]
Accuracy = Annotated[float, Field(ge=0.0, le=1.0, allow_inf_nan=False)]

OPTIMIZER_TAGS = ("sgd", "momentum", "adam")


class HyperParamAxis(BaseModel):
    """One hyper-parameter and its ordered admissible values."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1, pattern=r"^[A-Za-z_][A-Za-z0-9_]*$")
    kind: Literal["real", "integer", "categorical"]
    values: tuple[AxisValue, ...] = Field(..., min_length=1)

    @model_validator(mode="before")
    @classmethod
    def coerce_reals(cls, data):
        if isinstance(data, dict) and data.get("kind") == "real":
            values = data.get("values")
            if isinstance(values, (list, tuple)):
                data = {
                    **data,
                    "values": tuple(
                        float(v) if isinstance(v, int) and not isinstance(v, bool) else v
                        for v in values
                    ),
                }
        return data

    @model_validator(mode="after")
    def check_values(self) -> "HyperParamAxis":
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"axis '{self.name}' has duplicate values")
        if self.kind == "categorical":
            if not all(isinstance(v, str) and v for v in self.values):
                raise ValueError(f"axis '{self.name}' must hold non-empty tags")
            return self
        if self.kind == "integer":
            if not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in self.values):
                raise ValueError(f"axis '{self.name}' must hold positive integers")
        else:
            if not all(isinstance(v, float) for v in self.values):
                raise ValueError(f"axis '{self.name}' must hold real numbers")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"axis '{self.name}' values must be strictly increasing")
        return self

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def ordered(self) -> bool:
        """Whether index distance means anything on this axis."""
        return self.kind != "categorical"

    def index_of(self, value: AxisValue) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ValidationError(f"value {value!r} is not on axis '{self.name}'") from None

    def parse(self, text: str) -> AxisValue:
        """Parse a serialized value of this axis."""
        if self.kind == "real":
            value: AxisValue = float(text)
        elif self.kind == "integer":
            value = int(text)
        else:
            value = text
        self.index_of(value)
        return value

    def format(self, value: AxisValue) -> str:
        # repr keeps full round-trip precision for floats
        return repr(value) if self.kind == "real" else str(value)


class Setting(BaseModel):
    """One chosen value per axis, keyed by axis name."""

    model_config = ConfigDict(frozen=True)

    values: dict[str, AxisValue]

    def __getitem__(self, name: str) -> AxisValue:
        return self.values[name]

    def identity(self) -> tuple[tuple[str, AxisValue], ...]:
        """Hashable key independent of insertion order."""
        return tuple(sorted(self.values.items()))

    def label(self) -> str:
        return ",".join(f"{name}={value}" for name, value in self.values.items())

    def __hash__(self) -> int:
        return hash(self.identity())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Setting):
            return NotImplemented
        return self.identity() == other.identity()


def validate_setting(setting: Setting, axes: list[HyperParamAxis]) -> None:
    """Raise unless the setting holds exactly one admissible value per axis."""
    names = [axis.name for axis in axes]
    if set(setting.values) != set(names):
        raise ValidationError(
            f"setting keys {sorted(setting.values)} do not match axes {sorted(names)}"
        )
    for axis in axes:
        axis.index_of(setting[axis.name])


class LearningCurve(BaseModel):
    """Per-epoch accuracies of one training run. Index 0 is epoch 1."""

    model_config = ConfigDict(frozen=True)

    epoch_accuracies: tuple[Accuracy, ...] = Field(..., min_length=1)
    final_accuracy: Optional[Accuracy] = None
    fin_epoch: int = Field(..., ge=1)
    # Runtime-only: set when a non-finite loss truncated the run. Not persisted.
    diverged: bool = False

    @model_validator(mode="after")
    def check_length(self) -> "LearningCurve":
        if len(self.epoch_accuracies) > self.fin_epoch:
            raise ValueError(
                f"curve has {len(self.epoch_accuracies)} epochs, budget is {self.fin_epoch}"
            )
        return self

    @property
    def n_epochs(self) -> int:
        return len(self.epoch_accuracies)

    @property
    def acc_max(self) -> float:
        return max(self.epoch_accuracies)


class TrainingRecord(BaseModel):
    """A database row: a setting and the curve of its full training."""

    model_config = ConfigDict(frozen=True)

    setting: Setting
    curve: LearningCurve

    @model_validator(mode="after")
    def check_final(self) -> "TrainingRecord":
        if self.curve.final_accuracy is None:
            raise ValueError("database records need a final accuracy")
        return self

    @property
    def final_accuracy(self) -> float:
        return self.curve.final_accuracy  # type: ignore[return-value]


class Database(BaseModel):
    """Full-training records the SVR learns from."""

    model_config = ConfigDict(frozen=True)

    axes: tuple[HyperParamAxis, ...]
    records: tuple[TrainingRecord, ...] = ()
    seed: int = 0

    @model_validator(mode="after")
    def check_records(self) -> "Database":
        seen = set()
        for position, record in enumerate(self.records):
            validate_setting(record.setting, list(self.axes))
            key = record.setting.identity()
            if key in seen:
                raise ValueError(f"duplicate setting at record {position}: {record.setting.label()}")
            seen.add(key)
        return self

    def __len__(self) -> int:
        return len(self.records)
