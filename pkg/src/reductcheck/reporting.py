"""Machine-readable run artifacts: JSON report, CSV series, optional figures.

The report JSON is fully deterministic for a given resolved config (seeds
included); wall-clock metadata goes to a separate run_meta.json so reports
stay byte-identical across reruns.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .scenarios import ScenarioResult, Series


def _plain(value):
    """Coerce numpy scalars/arrays into JSON-serializable Python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        try:
            return value.item()
        except (AttributeError, ValueError):
            pass
    if hasattr(value, "tolist"):
        return value.tolist()
    return value


@dataclass
class RunReport:
    scenario: str
    config: dict
    verdicts: dict
    metrics: dict
    series_paths: dict[str, str] = field(default_factory=dict)
    figure_paths: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_json(self) -> str:
        payload = _plain({
            "scenario": self.scenario,
            "config": self.config,
            "verdicts": {k: bool(v) for k, v in self.verdicts.items()},
            "metrics": self.metrics,
            "series": self.series_paths,
            "figures": self.figure_paths,
            "overall_pass": bool(self.passed),
        })
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_series_csv(path: Path, series: Series) -> None:
    lines = [",".join(series.columns)]
    for row in series.rows:
        lines.append(",".join(repr(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_run(
    out_dir: Path,
    result: ScenarioResult,
    config: dict,
    render_figures: bool = True,
) -> RunReport:
    """Write report.json, one CSV per series, figures, and run_meta.json."""
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport(
        scenario=result.name,
        config=config,
        verdicts=dict(result.verdicts),
        metrics={k: float(v) for k, v in result.metrics.items()},
    )
    for name, series in result.series.items():
        csv_path = out_dir / f"{name}.csv"
        write_series_csv(csv_path, series)
        report.series_paths[name] = csv_path.name
    if render_figures and result.series:
        from .plotting import render_series_figures

        report.figure_paths = render_series_figures(out_dir, result)
    (out_dir / "report.json").write_text(report.to_json())
    meta = {"written_at": datetime.now(timezone.utc).isoformat()}
    (out_dir / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return report
