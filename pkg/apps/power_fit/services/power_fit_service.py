"""
Constrained least-squares fit of g(x) = alpha * x**beta to the first epochs of a curve.

For a fixed beta the least-squares alpha has a closed form, so the problem
reduces to a one-dimensional search over beta: a uniform grid locates the best
cell, golden-section search refines inside it.

The bound alpha > acc_max / fin_epoch does not by itself force
g(fin_epoch) >= acc_max when beta < 1; `predict_final` clamps the
extrapolation to [acc_max, 1] instead.
"""
import math
from typing import Callable, Sequence

import numpy as np

from apps.power_fit.schemas.power_fit import PowerFit
from core.exceptions import DegenerateCurveError, ValidationError
from core.logger import get_logger

logger = get_logger(__name__)

# Open constraints realized as closed ones with a margin below solver tolerance.
ALPHA_MARGIN = 1e-12
BETA_LOW = 1e-6
BETA_HIGH = 1.0 - 1e-6

BETA_GRID_SIZE = 512
GOLDEN_TOL = 1e-8
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_minimize(
    f: Callable[[float], float], lo: float, hi: float, tol: float = GOLDEN_TOL, max_iter: int = 200
) -> tuple[float, float]:
    """Minimize a unimodal f on [lo, hi]; returns (argmin, min), endpoints included."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    f_lo, f_hi = f(lo), f(hi)
    a, b = lo, hi
    iterations = 0
    while b - a > tol and iterations < max_iter:
        if f2 > f1:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        iterations += 1
    best_x, best_f = (x1, f1) if f1 <= f2 else (x2, f2)
    if f_lo < best_f:
        best_x, best_f = lo, f_lo
    if f_hi < best_f:
        best_x, best_f = hi, f_hi
    return best_x, best_f


def optimal_alpha(
    epochs: np.ndarray, accuracies: np.ndarray, beta: float | np.ndarray
) -> float | np.ndarray:
    """
    Unconstrained least-squares alpha for a fixed beta.

    Broadcasts over an array of betas and returns one alpha per beta.
    """
    powers = np.power.outer(np.atleast_1d(np.asarray(beta, dtype=float)), epochs)
    alphas = (powers @ accuracies) / np.einsum("ij,ij->i", powers, powers)
    if np.ndim(beta) == 0:
        return float(alphas[0])
    return alphas


class PowerFitService:
    """Service for power-law curve fitting and extrapolation."""

    @staticmethod
    def fit_power_law(
        points: Sequence[tuple[int, float]], acc_max: float, fin_epoch: int
    ) -> PowerFit:
        """Least-squares (alpha, beta) subject to alpha > acc_max/fin_epoch, 0 < beta < 1."""
        x, a = _validate_points(points, acc_max, fin_epoch)
        if not np.any(a > 0.0):
            raise DegenerateCurveError()
        alpha_floor = acc_max / fin_epoch + ALPHA_MARGIN

        def profile(beta: float) -> tuple[float, float]:
            xb = x**beta
            alpha = max(alpha_floor, float(optimal_alpha(x, a, beta)))
            residual = a - alpha * xb
            return alpha, float(residual @ residual)

        def sse(beta: float) -> float:
            return profile(beta)[1]

        grid = np.linspace(BETA_LOW, BETA_HIGH, BETA_GRID_SIZE)
        powers = np.power.outer(grid, x)
        alphas = np.maximum(alpha_floor, optimal_alpha(x, a, grid))
        errors = ((a[None, :] - alphas[:, None] * powers) ** 2).sum(axis=1)
        best = int(np.argmin(errors))
        center, center_sse = float(grid[best]), float(errors[best])

        warm = _log_log_warm_start(x, a)
        if warm is not None and sse(warm) < center_sse:
            center, center_sse = warm, sse(warm)

        step = grid[1] - grid[0]
        lo, hi = max(BETA_LOW, center - step), min(BETA_HIGH, center + step)
        beta, beta_sse = golden_section_minimize(sse, lo, hi)
        if center_sse < beta_sse:
            beta = center
        alpha, final_sse = profile(beta)
        logger.debug(f"power fit bracket [{lo:.6f}, {hi:.6f}] -> beta={beta:.9f} sse={final_sse:.3e}")
        return PowerFit(alpha=alpha, beta=beta, sse=final_sse, acc_max=acc_max, fin_epoch=fin_epoch)

    @staticmethod
    def predict_final(fit: PowerFit) -> float:
        """g(fin_epoch) clamped to [acc_max, 1]."""
        raw = fit.alpha * float(fit.fin_epoch) ** fit.beta
        return min(max(raw, fit.acc_max), 1.0)


def _validate_points(
    points: Sequence[tuple[int, float]], acc_max: float, fin_epoch: int
) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 2:
        raise ValidationError(f"power-law fit needs at least 2 points, got {len(points)}")
    epochs = [int(e) for e, _ in points]
    accuracies = [float(acc) for _, acc in points]
    if len(set(epochs)) != len(epochs):
        raise ValidationError("epochs must be distinct")
    if min(epochs) < 1:
        raise ValidationError("epochs are 1-indexed")
    if not all(0.0 <= acc <= 1.0 for acc in accuracies):
        raise ValidationError("accuracies must lie in [0, 1]")
    if fin_epoch < max(epochs):
        raise ValidationError(f"fin_epoch={fin_epoch} precedes the last fitted epoch")
    if abs(acc_max - max(accuracies)) > 1e-12:
        raise ValidationError(f"acc_max={acc_max} differs from the largest accuracy")
    return np.asarray(epochs, dtype=float), np.asarray(accuracies, dtype=float)


def _log_log_warm_start(x: np.ndarray, a: np.ndarray):
    """Slope of log a = log alpha + beta log x, clipped to the beta box."""
    if np.any(a <= 0.0):
        return None
    slope, _ = np.polyfit(np.log(x), np.log(a), 1)
    return float(np.clip(slope, BETA_LOW, BETA_HIGH))
