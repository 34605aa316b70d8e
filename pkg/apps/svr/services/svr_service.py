"""
Epsilon-SVR trained in the dual by sequential minimal optimization.

The dual is solved over 2n variables beta = [alpha; alpha*] with signs
z = [+1; -1]:

    min  1/2 beta' Q beta + p' beta
    s.t. z' beta = 0,  0 <= beta <= C,
    Q_uv = z_u z_v K(x_u, x_v),  p = [eps - y; eps + y].

Each step moves the maximal violating pair (i in I_up, j in I_low) by the exact
minimizer of the two-variable subproblem, clipped to the box.
"""
import csv
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from apps.curves_db.schemas.curves import Database
from apps.curves_db.services.curves_db_service import CurvesDbService
from apps.svr.schemas.svr import (
    KERNEL_KINDS,
    KernelComparison,
    KernelSpec,
    SvrHyper,
    SvrModel,
)
from core.exceptions import (
    CsvFormatError,
    DimensionMismatchError,
    NotFoundError,
    SolverError,
    ValidationError,
)
from core.logger import get_logger

logger = get_logger(__name__)

MAX_ITER = 1_000_000
SV_THRESHOLD = 1e-12
TAU = 1e-12
MODEL_MAGIC = "svr-model"


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """K[i, j] = K(a_i, b_j) for row-stacked vectors."""
    if spec.kind == "linear":
        return a @ b.T
    if spec.kind == "polynomial":
        return (a @ b.T + spec.coef0) ** spec.degree
    if spec.gamma is None:
        raise ValidationError("gaussian kernel needs gamma")
    # explicit differences keep K(x, x) exactly 1
    diff = a[:, None, :] - b[None, :, :]
    return np.exp(-spec.gamma * np.einsum("ijk,ijk->ij", diff, diff))


def _as_matrix(X: Sequence[Sequence[float]]) -> np.ndarray:
    rows = [list(map(float, x)) for x in X]
    dims = {len(r) for r in rows}
    if len(dims) > 1:
        first = len(rows[0])
        raise DimensionMismatchError(first, next(len(r) for r in rows if len(r) != first))
    return np.asarray(rows, dtype=float).reshape(len(rows), dims.pop() if dims else 0)


class SvrService:
    """Service for epsilon-SVR training, prediction and persistence."""

    @staticmethod
    def kernel_eval(spec: KernelSpec, x: Sequence[float], y: Sequence[float]) -> float:
        xv, yv = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if xv.shape != yv.shape:
            raise DimensionMismatchError(xv.size, yv.size)
        if xv.size == 0:
            raise ValidationError("feature vectors must be non-empty")
        spec = spec.resolved(xv.size)
        return float(kernel_matrix(spec, xv[None, :], yv[None, :])[0, 0])

    @staticmethod
    def train_svr(
        X: Sequence[Sequence[float]],
        y: Sequence[float],
        kernel: KernelSpec,
        hyper: SvrHyper,
        tol: float = 1e-4,
        max_iter: int = MAX_ITER,
    ) -> SvrModel:
        """Solve the dual until the maximal KKT violation drops to tol."""
        features = _as_matrix(X)
        targets = np.asarray(y, dtype=float)
        n = features.shape[0]
        if n < 2 or targets.shape != (n,):
            raise ValidationError(f"need matching X and y with at least 2 samples, got {n}")
        if features.shape[1] == 0:
            raise ValidationError("feature vectors must be non-empty")
        if not (np.all(np.isfinite(features)) and np.all(np.isfinite(targets))):
            raise ValidationError("features and targets must be finite")
        if tol <= 0:
            raise ValidationError(f"tol must be positive, got {tol}")

        kernel = kernel.resolved(features.shape[1])
        K = kernel_matrix(kernel, features, features)
        diag = np.diag(K).copy()
        C, eps = hyper.C, hyper.epsilon

        z = np.concatenate([np.ones(n), -np.ones(n)])
        sample = np.concatenate([np.arange(n), np.arange(n)])
        beta = np.zeros(2 * n)
        grad = np.concatenate([eps - targets, eps + targets])

        for iteration in range(max_iter):
            score = -z * grad
            up = ((z > 0) & (beta < C)) | ((z < 0) & (beta > 0))
            low = ((z > 0) & (beta > 0)) | ((z < 0) & (beta < C))
            i = int(np.argmax(np.where(up, score, -np.inf)))
            j = int(np.argmin(np.where(low, score, np.inf)))
            gap = score[i] - score[j]
            if gap <= tol:
                break
            si, sj = sample[i], sample[j]
            curvature = diag[si] + diag[sj] - 2.0 * K[si, sj]
            step = gap / (curvature if curvature > 0 else TAU)
            room_i = C - beta[i] if z[i] > 0 else beta[i]
            room_j = beta[j] if z[j] > 0 else C - beta[j]
            step = min(step, room_i, room_j)

            beta[i] += z[i] * step
            beta[j] -= z[j] * step
            for t in (i, j):
                # snap to the box so bound tests stay exact
                if beta[t] < SV_THRESHOLD:
                    beta[t] = 0.0
                elif beta[t] > C - SV_THRESHOLD * C:
                    beta[t] = C
            grad += step * z * (K[sample, si] - K[sample, sj])
        else:
            raise SolverError(f"SMO did not reach tol={tol} within {max_iter} iterations")
        logger.debug(f"SMO converged after {iteration} iterations (n={n}, kernel={kernel.kind})")

        coeffs = beta[:n] - beta[n:]
        score = -z * grad
        bias = _bias(score, beta, z, C)
        keep = np.abs(coeffs) > SV_THRESHOLD
        return SvrModel(
            support_vectors=tuple(tuple(float(v) for v in row) for row in features[keep]),
            dual_coeffs=tuple(float(c) for c in coeffs[keep]),
            bias=bias,
            kernel=kernel,
            dimension=features.shape[1],
            hyper=hyper,
        )

    @staticmethod
    def predict(model: SvrModel, x: Sequence[float]) -> float:
        """f(x) = sum_i c_i K(x_i, x) + b, unclamped."""
        xv = np.asarray(x, dtype=float).ravel()
        if xv.size != model.dimension:
            raise DimensionMismatchError(model.dimension, xv.size)
        if model.n_sv == 0:
            return float(model.bias)
        sv = np.asarray(model.support_vectors, dtype=float)
        k = kernel_matrix(model.kernel, sv, xv[None, :])[:, 0]
        return float(np.asarray(model.dual_coeffs) @ k + model.bias)

    @staticmethod
    def predict_many(model: SvrModel, X: Sequence[Sequence[float]]) -> np.ndarray:
        return np.array([SvrService.predict(model, x) for x in X], dtype=float)

    @staticmethod
    def mse(model: SvrModel, X_test: Sequence[Sequence[float]], y_test: Sequence[float]) -> float:
        if len(X_test) == 0:
            raise ValidationError("empty test set")
        errors = SvrService.predict_many(model, X_test) - np.asarray(y_test, dtype=float)
        return float(np.mean(errors**2))

    @staticmethod
    def kkt_residuals(
        model: SvrModel, X: Sequence[Sequence[float]], y: Sequence[float]
    ) -> np.ndarray:
        """Per-sample violation of the dual optimality conditions, with r = y - f(x):

        alpha < C needs r <= eps, alpha > 0 needs r >= eps,
        alpha* < C needs r >= -eps, alpha* > 0 needs r <= -eps.
        Training rows are matched to support vectors in order; the rest have c = 0.
        """
        features = _as_matrix(X)
        targets = np.asarray(y, dtype=float)
        C, eps = model.hyper.C, model.hyper.epsilon
        pending: dict[tuple[float, ...], list[float]] = {}
        for sv, c in zip(model.support_vectors, model.dual_coeffs):
            pending.setdefault(sv, []).append(c)
        coeffs = np.zeros(len(targets))
        for idx, row in enumerate(features):
            queue = pending.get(tuple(float(v) for v in row))
            if queue:
                coeffs[idx] = queue.pop(0)
        r = targets - SvrService.predict_many(model, features)
        alpha, alpha_star = np.maximum(coeffs, 0.0), np.maximum(-coeffs, 0.0)
        zeros = np.zeros_like(r)
        return np.max(
            [
                np.where(alpha < C, np.maximum(r - eps, 0.0), zeros),
                np.where(alpha > 0, np.maximum(eps - r, 0.0), zeros),
                np.where(alpha_star < C, np.maximum(-eps - r, 0.0), zeros),
                np.where(alpha_star > 0, np.maximum(r + eps, 0.0), zeros),
            ],
            axis=0,
        )

    @staticmethod
    def compare_kernels(
        train_db: Database,
        test_db: Database,
        k: int,
        hyper: SvrHyper,
        kernels: Sequence[KernelSpec] = tuple(KernelSpec(kind=kind) for kind in KERNEL_KINDS),
        tol: float = 1e-4,
        max_iter: int = MAX_ITER,
    ) -> KernelComparison:
        """Train one SVR per kernel on first-k accuracies and score raw predictions on the test set."""
        if len(test_db) == 0:
            raise ValidationError("empty test set")
        X_train, y_train = CurvesDbService.feature_matrix(train_db, k)
        X_test, y_test = CurvesDbService.feature_matrix(test_db, k)
        predictions: dict[str, tuple[float, ...]] = {}
        mse: dict[str, float] = {}
        models: dict[str, SvrModel] = {}
        for spec in kernels:
            model = SvrService.train_svr(X_train, y_train, spec, hyper, tol=tol, max_iter=max_iter)
            predicted = SvrService.predict_many(model, X_test)
            models[spec.kind] = model
            predictions[spec.kind] = tuple(float(p) for p in predicted)
            mse[spec.kind] = float(np.mean((predicted - y_test) ** 2))
            logger.info(f"Kernel {spec.kind}: test MSE {mse[spec.kind]:.6f} ({model.n_sv} SVs)")
        if not mse:
            raise ValidationError("no kernels to compare")
        selected = min(mse, key=lambda kind: (mse[kind], KERNEL_KINDS.index(kind)))
        return KernelComparison(
            record_ids=tuple(range(len(test_db))),
            ground_truth=tuple(float(t) for t in y_test),
            predictions=predictions,
            mse=mse,
            models=models,
            selected=selected,
        )

    @staticmethod
    def write_kernels_csv(comparison: KernelComparison, path: Union[str, Path]) -> None:
        """`record_id,ground_truth,<kernels...>` rows, then an `MSE` row."""
        kinds = list(comparison.predictions)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["record_id", "ground_truth"] + kinds)
            for row, record_id in enumerate(comparison.record_ids):
                writer.writerow(
                    [record_id, repr(comparison.ground_truth[row])]
                    + [repr(comparison.predictions[kind][row]) for kind in kinds]
                )
            writer.writerow(["MSE", ""] + [repr(comparison.mse[kind]) for kind in kinds])

    @staticmethod
    def read_kernels_csv(path: Union[str, Path]) -> KernelComparison:
        path = Path(path)
        with path.open("r", encoding="utf-8", newline="") as handle:
            rows = [row for row in csv.reader(handle) if row]
        if not rows or rows[0][:2] != ["record_id", "ground_truth"] or len(rows[0]) < 3:
            raise CsvFormatError(1, "header", "expected record_id,ground_truth,<kernels...>")
        kinds = rows[0][2:]
        unknown = [kind for kind in kinds if kind not in KERNEL_KINDS]
        if unknown:
            raise CsvFormatError(1, "header", f"unknown kernels {unknown}")
        body = [row for row in rows[1:] if row[0] != "MSE"]
        if not body:
            raise CsvFormatError(2, "record_id", "kernel table has no rows")
        try:
            record_ids = tuple(int(row[0]) for row in body)
            truth = tuple(float(row[1]) for row in body)
            predictions = {
                kind: tuple(float(row[2 + col]) for row in body) for col, kind in enumerate(kinds)
            }
        except (ValueError, IndexError) as exc:
            raise CsvFormatError(len(rows), "row", str(exc)) from None
        target = np.asarray(truth)
        mse = {
            kind: float(np.mean((np.asarray(values) - target) ** 2))
            for kind, values in predictions.items()
        }
        return KernelComparison(
            record_ids=record_ids,
            ground_truth=truth,
            predictions=predictions,
            mse=mse,
            selected=min(mse, key=lambda kind: (mse[kind], KERNEL_KINDS.index(kind))),
        )

    @staticmethod
    def save_model(model: SvrModel, path: Union[str, Path]) -> None:
        """Header line, then one `coefficient features...` line per support vector."""
        spec = model.kernel
        header = [
            MODEL_MAGIC,
            f"kind={spec.kind}",
            f"gamma={'none' if spec.gamma is None else repr(spec.gamma)}",
            f"degree={spec.degree}",
            f"coef0={spec.coef0!r}",
            f"bias={model.bias!r}",
            f"n_sv={model.n_sv}",
            f"dim={model.dimension}",
            f"C={model.hyper.C!r}",
            f"epsilon={model.hyper.epsilon!r}",
        ]
        lines = [" ".join(header)]
        for c, sv in zip(model.dual_coeffs, model.support_vectors):
            lines.append(" ".join([repr(c)] + [repr(v) for v in sv]))
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    @staticmethod
    def load_model(path: Union[str, Path]) -> SvrModel:
        path = Path(path)
        if not path.is_file():
            raise NotFoundError("SVR model", str(path))
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines or not lines[0].startswith(MODEL_MAGIC):
            raise ValidationError(f"{path}: not an SVR model file")
        try:
            fields = dict(item.split("=", 1) for item in lines[0].split()[1:])
            n_sv, dim = int(fields["n_sv"]), int(fields["dim"])
            rows = [[float(v) for v in line.split()] for line in lines[1 : 1 + n_sv]]
            if len(rows) != n_sv or any(len(r) != dim + 1 for r in rows):
                raise ValueError("support vector block does not match header")
            kernel = KernelSpec(
                kind=fields["kind"],
                gamma=None if fields["gamma"] == "none" else float(fields["gamma"]),
                degree=int(fields["degree"]),
                coef0=float(fields["coef0"]),
            )
            return SvrModel(
                support_vectors=tuple(tuple(r[1:]) for r in rows),
                dual_coeffs=tuple(r[0] for r in rows),
                bias=float(fields["bias"]),
                kernel=kernel,
                dimension=dim,
                hyper=SvrHyper(C=float(fields["C"]), epsilon=float(fields["epsilon"])),
            )
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{path}: malformed model file ({exc})") from exc


def _bias(score: np.ndarray, beta: np.ndarray, z: np.ndarray, C: float) -> float:
    """Mean score over free variables, else the midpoint of the feasible interval."""
    free = (beta > 0) & (beta < C)
    if np.any(free):
        return float(np.mean(score[free]))
    up = ((z > 0) & (beta < C)) | ((z < 0) & (beta > 0))
    low = ((z > 0) & (beta > 0)) | ((z < 0) & (beta < C))
    m = float(np.max(score[up])) if np.any(up) else None
    M = float(np.min(score[low])) if np.any(low) else None
    if m is None:
        return M  # type: ignore[return-value]
    if M is None:
        return m
    return 0.5 * (m + M)
