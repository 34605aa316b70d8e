"""
Dependency-free SVG charts for evaluation reports, exploration traces,
kernel comparisons and single-curve predictions.

Output is a pure function of the input: coordinates use fixed formatting and
series are drawn in a fixed order, so the same data gives byte-identical files.
"""
from pathlib import Path
from typing import Optional, Sequence, Union

from apps.predictor.schemas.prediction import EvaluationReport, PredictionOutcome
from apps.svr.schemas.svr import KernelComparison

WIDTH, HEIGHT = 720, 360
MARGIN = {"left": 56, "right": 150, "top": 40, "bottom": 44}
PALETTE = ("#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#76b7b2", "#b07aa1")


def _esc(text: str) -> str:
    return (
        (text or "")
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _fmt(value: float) -> str:
    return f"{value:.2f}"


class SvgBuilder:
    """Accumulates SVG elements on a plot area with data-to-pixel scaling."""

    def __init__(
        self,
        title: str,
        x_range: tuple[float, float],
        y_range: tuple[float, float],
        width: int = WIDTH,
        height: int = HEIGHT,
    ):
        self.title = title
        self.width = width
        self.height = height
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range
        if self.x_hi <= self.x_lo:
            self.x_hi = self.x_lo + 1.0
        if self.y_hi <= self.y_lo:
            self.y_hi = self.y_lo + 1.0
        self.elements: list[str] = []
        self.legend: list[tuple[str, str]] = []

    @property
    def plot_width(self) -> float:
        return self.width - MARGIN["left"] - MARGIN["right"]

    @property
    def plot_height(self) -> float:
        return self.height - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x: float) -> float:
        return MARGIN["left"] + (x - self.x_lo) / (self.x_hi - self.x_lo) * self.plot_width

    def py(self, y: float) -> float:
        return MARGIN["top"] + (self.y_hi - y) / (self.y_hi - self.y_lo) * self.plot_height

    def add_axes(self, x_label: str, y_label: str, ticks: int = 5) -> None:
        left, bottom = MARGIN["left"], MARGIN["top"] + self.plot_height
        right = left + self.plot_width
        self.elements.append(
            f'<line x1="{left}" y1="{_fmt(bottom)}" x2="{_fmt(right)}" y2="{_fmt(bottom)}" stroke="#000"/>'
        )
        self.elements.append(
            f'<line x1="{left}" y1="{MARGIN["top"]}" x2="{left}" y2="{_fmt(bottom)}" stroke="#000"/>'
        )
        for i in range(ticks + 1):
            x_value = self.x_lo + (self.x_hi - self.x_lo) * i / ticks
            y_value = self.y_lo + (self.y_hi - self.y_lo) * i / ticks
            self.add_text(self.px(x_value), bottom + 16, f"{x_value:.4g}", anchor="middle")
            self.add_text(left - 6, self.py(y_value) + 4, f"{y_value:.3g}", anchor="end")
        self.add_text(left + self.plot_width / 2, self.height - 8, x_label, anchor="middle")
        self.elements.append(
            f'<text x="14" y="{_fmt(MARGIN["top"] + self.plot_height / 2)}" font-size="11" '
            f'text-anchor="middle" transform="rotate(-90 14 {_fmt(MARGIN["top"] + self.plot_height / 2)})">'
            f"{_esc(y_label)}</text>"
        )

    def add_text(self, x: float, y: float, text: str, anchor: str = "start", font_size: int = 10) -> None:
        self.elements.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{font_size}" text-anchor="{anchor}">'
            f"{_esc(text)}</text>"
        )

    def add_polyline(
        self, xs: Sequence[float], ys: Sequence[float], color: str, label: str, dashed: bool = False
    ) -> None:
        points = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        dash = ' stroke-dasharray="5,3"' if dashed else ""
        self.elements.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>'
        )
        self.legend.append((label, color))

    def add_markers(
        self, xs: Sequence[float], ys: Sequence[float], color: str, label: Optional[str] = None, radius: float = 3.0
    ) -> None:
        for x, y in zip(xs, ys):
            self.elements.append(
                f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="{radius}" fill="{color}"/>'
            )
        if label:
            self.legend.append((label, color))

    def add_star(self, x: float, y: float, color: str, label: str, size: float = 7.0) -> None:
        cx, cy = self.px(x), self.py(y)
        self.elements.append(
            f'<path d="M{_fmt(cx - size)},{_fmt(cy)} L{_fmt(cx + size)},{_fmt(cy)} '
            f'M{_fmt(cx)},{_fmt(cy - size)} L{_fmt(cx)},{_fmt(cy + size)}" stroke="{color}" stroke-width="2.5"/>'
        )
        self.legend.append((label, color))

    def render(self) -> str:
        lines = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'role="img" aria-label="{_esc(self.title)}">',
            f"<title>{_esc(self.title)}</title>",
            '<rect width="100%" height="100%" fill="white"/>',
            f'<text x="{_fmt(self.width / 2)}" y="22" text-anchor="middle" font-size="14">{_esc(self.title)}</text>',
            *self.elements,
        ]
        if self.legend:
            x0 = self.width - MARGIN["right"] + 12
            lines.append('<g class="legend">')
            for row, (label, color) in enumerate(self.legend):
                y = MARGIN["top"] + 14 + 18 * row
                lines.append(f'<rect x="{x0}" y="{y - 8}" width="12" height="8" fill="{color}"/>')
                lines.append(
                    f'<text x="{x0 + 18}" y="{y}" font-size="10" text-anchor="start">{_esc(label)}</text>'
                )
            lines.append("</g>")
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(), encoding="utf-8")


def _accuracy_range(*series: Sequence[float]) -> tuple[float, float]:
    """[0, 1] widened to any raw value outside it."""
    values = [v for s in series for v in s]
    return min([0.0] + values), max([1.0] + values)


def evaluation_chart(report: EvaluationReport) -> SvgBuilder:
    """Predicted against true final accuracy, one point per test record."""
    ids = [row.record_id for row in report.rows]
    truth = [row.true_final for row in report.rows]
    predicted = [row.predicted for row in report.rows]
    chart = SvgBuilder(
        f"Predicted vs ground truth (MSE {report.mse:.5f}, fallback {report.fallback_rate:.0%})",
        (min(ids), max(ids)),
        _accuracy_range(truth, predicted),
    )
    chart.add_axes("record", "final accuracy")
    chart.add_polyline(ids, truth, PALETTE[0], "ground truth")
    chart.add_polyline(ids, predicted, PALETTE[1], "predicted", dashed=True)
    fallback = [(i, p) for i, p, row in zip(ids, predicted, report.rows) if row.source == "curve_fit"]
    if fallback:
        chart.add_markers([i for i, _ in fallback], [p for _, p in fallback], PALETTE[3], "curve fit")
    return chart


def history_chart(trace: Sequence[tuple[int, float]]) -> SvgBuilder:
    """Reward per exploration iteration with its running best."""
    iterations = [t for t, _ in trace]
    rewards = [r for _, r in trace]
    running, best = [], float("-inf")
    for reward in rewards:
        best = max(best, reward)
        running.append(best)
    chart = SvgBuilder(
        "Exploration reward trace", (min(iterations), max(iterations)), _accuracy_range(rewards)
    )
    chart.add_axes("iteration", "predicted final accuracy")
    chart.add_polyline(iterations, rewards, PALETTE[0], "reward")
    chart.add_polyline(iterations, running, PALETTE[2], "running best", dashed=True)
    return chart


def kernel_chart(comparison: KernelComparison) -> SvgBuilder:
    """Raw held-out SVR predictions of every kernel against the ground truth."""
    ids = list(comparison.record_ids)
    kinds = list(comparison.predictions)
    chart = SvgBuilder(
        f"Kernel comparison (selected: {comparison.selected})",
        (min(ids), max(ids)),
        _accuracy_range(comparison.ground_truth, *comparison.predictions.values()),
    )
    chart.add_axes("record", "final accuracy")
    chart.add_polyline(ids, comparison.ground_truth, "#000000", "ground truth")
    for color, kind in zip(PALETTE, kinds):
        chart.add_polyline(
            ids, comparison.predictions[kind], color, f"{kind} ({comparison.mse[kind]:.4f})", dashed=True
        )
    return chart


def curve_chart(
    prefix: Sequence[float],
    outcome: PredictionOutcome,
    fin_epoch: int,
    fit_curve: Optional[Sequence[float]] = None,
    truth: Optional[Sequence[float]] = None,
) -> SvgBuilder:
    """Observed prefix, power-law extrapolation and SVR prediction for one run.

    `fit_curve` holds g(1..fin_epoch); `outcome.fit` is used when it is absent.
    """
    epochs = list(range(1, fin_epoch + 1))
    if fit_curve is None and outcome.fit is not None:
        fit_curve = outcome.fit.curve(epochs)
    series = [list(prefix), [outcome.svr_raw, outcome.value]]
    if fit_curve is not None:
        series.append(list(fit_curve))
    if truth is not None:
        series.append(list(truth))
    chart = SvgBuilder(
        f"Prediction from {len(prefix)} epochs: {outcome.value:.4f} ({outcome.source})",
        (1, fin_epoch),
        _accuracy_range(*series),
    )
    chart.add_axes("epoch", "accuracy")
    if truth is not None:
        chart.add_polyline(list(range(1, len(truth) + 1)), truth, "#000000", "ground truth")
    if fit_curve is not None:
        chart.add_polyline(epochs, fit_curve, PALETTE[2], "curve fit", dashed=True)
    chart.add_markers(list(range(1, len(prefix) + 1)), prefix, PALETTE[0], "observed")
    chart.add_star(fin_epoch, outcome.svr_raw, PALETTE[1], "SVR")
    return chart
