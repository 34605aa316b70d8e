"""
SVR schemas: kernel choice, training hyper-parameters and trained models.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

KernelKind = Literal["linear", "polynomial", "gaussian"]
KERNEL_KINDS: tuple[KernelKind, ...] = ("linear", "polynomial", "gaussian")


class KernelSpec(BaseModel):
    """Kernel function. A gaussian kernel without gamma takes 1/dimension at training time."""

    model_config = ConfigDict(frozen=True)

    kind: KernelKind = "gaussian"
    gamma: Optional[float] = Field(default=None, gt=0.0)
    degree: int = Field(default=3, ge=1)
    coef0: float = 1.0

    def resolved(self, dimension: int) -> "KernelSpec":
        if self.kind == "gaussian" and self.gamma is None:
            return self.model_copy(update={"gamma": 1.0 / dimension})
        return self


class SvrHyper(BaseModel):
    model_config = ConfigDict(frozen=True)

    C: float = Field(default=10.0, gt=0.0)
    epsilon: float = Field(default=0.01, ge=0.0)


class SvrModel(BaseModel):
    """Trained epsilon-SVR: f(x) = sum_i c_i K(x_i, x) + b, with c_i = alpha_i - alpha_i*."""

    model_config = ConfigDict(frozen=True)

    support_vectors: tuple[tuple[float, ...], ...] = ()
    dual_coeffs: tuple[float, ...] = ()
    bias: float
    kernel: KernelSpec
    dimension: int = Field(..., ge=1)
    hyper: SvrHyper = Field(default_factory=SvrHyper)

    @model_validator(mode="after")
    def check_shapes(self) -> "SvrModel":
        if len(self.support_vectors) != len(self.dual_coeffs):
            raise ValueError("one dual coefficient per support vector")
        if any(len(sv) != self.dimension for sv in self.support_vectors):
            raise ValueError(f"support vectors must have dimension {self.dimension}")
        if self.kernel.kind == "gaussian" and self.kernel.gamma is None:
            raise ValueError("trained gaussian kernels carry an explicit gamma")
        bound = self.hyper.C * (1.0 + 1e-9)
        if any(abs(c) > bound for c in self.dual_coeffs):
            raise ValueError(f"dual coefficients must lie in [-C, C] with C={self.hyper.C}")
        return self

    @property
    def n_sv(self) -> int:
        return len(self.support_vectors)


class KernelComparison(BaseModel):
    """Held-out raw SVR predictions for several kernels, one column per kernel."""

    model_config = ConfigDict(frozen=True)

    record_ids: tuple[int, ...]
    ground_truth: tuple[float, ...]
    predictions: dict[str, tuple[float, ...]]
    mse: dict[str, float]
    models: dict[str, SvrModel] = Field(default_factory=dict)
    selected: KernelKind
