"""Deterministic SVG boxplots and bias-versus-bin-width lines."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib import pyplot as plt  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from ..errors import PlotError  # noqa: E402
from ..summary import Summary, SummaryRow  # noqa: E402


LOG_RATIO = 10.0
SVG_SALT = "hawkes-agg"
FIGURE_WIDTH = 8.0
FIGURE_HEIGHT = 4.5


def _configure() -> None:
    matplotlib.rcParams["svg.hashsalt"] = SVG_SALT
    matplotlib.rcParams["svg.fonttype"] = "none"
    matplotlib.rcParams["path.simplify"] = False


def bias_ratio(summary: Summary, parameter: str) -> float:
    """Largest over smallest mean absolute bias across methods and bin widths."""
    values = [
        row.mean_abs_bias
        for row in summary.rows_for(parameter)
        if not math.isnan(row.mean_abs_bias)
    ]
    if len(values) < 2:
        return 1.0
    smallest = min(values)
    if smallest <= 0:
        return math.inf if max(values) > 0 else 1.0
    return max(values) / smallest


def _box_stats(row: SummaryRow) -> dict[str, object]:
    return {
        "label": f"{row.method.value}\nΔ={row.delta:g}",
        "med": row.median,
        "q1": row.q1,
        "q3": row.q3,
        "whislo": row.whisker_low,
        "whishi": row.whisker_high,
        "mean": row.mean,
        "fliers": list(row.outliers),
    }


def _save(figure: Figure, path: Path) -> Path:
    try:
        figure.savefig(path, format="svg", metadata={"Date": None})
    except (OSError, ValueError) as exc:
        raise PlotError(f"Cannot write plot {path}: {exc}") from exc
    finally:
        plt.close(figure)
    return path


class MatplotlibPlotRenderer:
    def render(self, summary: Summary, output_dir: Path) -> tuple[Path, ...]:
        if not summary.rows:
            raise PlotError("Cannot plot an empty summary")
        output_dir = Path(output_dir)
        try:
            output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise PlotError(f"Cannot create plot directory {output_dir}: {exc}") from exc
        _configure()
        written: list[Path] = []
        any_log = False
        for parameter in summary.parameters:
            log_scale = bias_ratio(summary, parameter) > LOG_RATIO
            any_log = any_log or log_scale
            written.append(self._boxplot(summary, parameter, output_dir, log=False))
            if log_scale:
                written.append(self._boxplot(summary, parameter, output_dir, log=True))
        written.append(self._bias_lines(summary, output_dir, log=False))
        if any_log:
            written.append(self._bias_lines(summary, output_dir, log=True))
        return tuple(written)

    def _boxplot(
        self,
        summary: Summary,
        parameter: str,
        output_dir: Path,
        *,
        log: bool,
    ) -> Path:
        rows = [row for row in summary.rows_for(parameter) if row.n > 0]
        figure, axes = plt.subplots(figsize=(FIGURE_WIDTH, FIGURE_HEIGHT))
        if rows:
            axes.bxp([_box_stats(row) for row in rows], showmeans=True)
        else:
            axes.text(0.5, 0.5, "no estimates", ha="center", va="center")
        axes.set_title(f"Estimates of {parameter}")
        axes.set_ylabel(parameter)
        if log and rows and min(row.whisker_low for row in rows) > 0:
            axes.set_yscale("log")
        figure.tight_layout()
        suffix = "_log" if log else ""
        return _save(figure, output_dir / f"boxplot_{parameter}{suffix}.svg")

    def _bias_lines(self, summary: Summary, output_dir: Path, *, log: bool) -> Path:
        parameters = summary.parameters
        figure, axes_list = plt.subplots(
            1,
            len(parameters),
            figsize=(FIGURE_WIDTH * max(1, len(parameters)) / 2, FIGURE_HEIGHT),
            squeeze=False,
        )
        deltas = summary.deltas
        for axes, parameter in zip(axes_list[0], parameters):
            for method in summary.methods:
                points = sorted(
                    (row.delta, abs(row.mean_bias) if log else row.mean_bias)
                    for row in summary.rows_for(parameter)
                    if row.method is method and not math.isnan(row.mean_bias)
                )
                if points:
                    axes.plot(
                        [delta for delta, _ in points],
                        [value for _, value in points],
                        marker="o",
                        label=method.value,
                    )
            axes.set_xticks(deltas)
            axes.set_xticklabels([f"{delta:g}" for delta in deltas])
            axes.set_xlabel("bin width Δ")
            label = "|mean bias|" if log else "mean bias"
            axes.set_ylabel(f"{label} of {parameter}")
            if log:
                axes.set_yscale("log")
            else:
                axes.axhline(0.0, color="grey", linewidth=0.8)
            if axes.get_legend_handles_labels()[0]:
                axes.legend()
        figure.tight_layout()
        suffix = "_log" if log else ""
        return _save(figure, output_dir / f"bias_vs_delta{suffix}.svg")
