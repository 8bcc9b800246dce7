"""Figure rendering for scenario runs: one PNG per emitted series."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .scenarios import ScenarioResult, Series  # noqa: E402


def _plot_series(ax, series: Series) -> None:
    cols = list(zip(*series.rows)) if series.rows else []
    if not cols:
        ax.set_axis_off()
        return
    t = cols[0]
    positive = all(
        all(v > 0 for v in col) for col in cols[1:] if col
    )
    for label, col in zip(series.columns[1:], cols[1:]):
        ax.plot(t, col, label=label, linewidth=1.2)
    ax.set_xlabel(series.columns[0])
    if positive and cols[1:] and max(max(c) for c in cols[1:]) / max(
            min(min(c) for c in cols[1:]), 1e-300) > 1e3:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    if len(series.columns) > 2:
        ax.legend(fontsize=8)
    else:
        ax.set_ylabel(series.columns[1])


def render_series_figures(out_dir: Path, result: ScenarioResult) -> dict[str, str]:
    """Render each series to <name>.png alongside the CSVs."""
    paths: dict[str, str] = {}
    for name, series in result.series.items():
        fig, ax = plt.subplots(figsize=(6.0, 3.6))
        _plot_series(ax, series)
        ax.set_title(f"{result.name}: {name}", fontsize=10)
        fig.tight_layout()
        png = out_dir / f"{name}.png"
        fig.savefig(png, dpi=120)
        plt.close(fig)
        paths[name] = png.name
    return paths
