"""JSON reports with CSV mirrors for plotting."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .metrics import delay_distribution

__all__ = ["build_report", "write_json", "write_csv", "to_jsonable"]


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and NaN into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def build_report(config: dict, sample_metrics=None, event_metrics=None, sweep=None) -> dict:
    """Assemble ``{config, sample_metrics, event_metrics, sweep, histogram}``."""
    report = {"config": config, "sample_metrics": None, "event_metrics": None, "sweep": [], "histogram": None}
    if sample_metrics is not None:
        report["sample_metrics"] = sample_metrics.to_dict()
    if event_metrics is not None:
        report["event_metrics"] = event_metrics.to_dict()
        edges, counts = delay_distribution(event_metrics)
        report["histogram"] = {"edges": edges, "counts": counts}
    if sweep is not None:
        report["sweep"] = [{"threshold": r["threshold"], "p": r["precision"], "r": r["recall"], "f1": r["f1"]}
                           for r in sweep.rows()]
        report["best_threshold"] = sweep.best_threshold
    return to_jsonable(report)


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.9g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return path
