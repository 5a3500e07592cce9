"""Threshold sweeps over a cached score stream."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..detector.stream import DetectorConfig
from ..exceptions import ParameterError
from .metrics import StimulationMetrics, stimulation_prf

__all__ = ["SweepResult", "threshold_sweep", "default_thresholds", "detections_at"]


def default_thresholds() -> np.ndarray:
    """0.05, 0.06, ..., 0.95."""
    return np.round(np.arange(5, 96) / 100.0, 2)


def detections_at(scores, threshold: float) -> np.ndarray:
    """Boolean detection trace; a threshold above 1 detects nothing."""
    return np.asarray(scores) >= threshold


@dataclass
class SweepResult:
    thresholds: np.ndarray
    metrics: list
    n_detections: list = field(default_factory=list)

    @property
    def best_index(self) -> int:
        """Index of the highest f1; the lowest threshold wins ties."""
        f1 = np.array([m.f1 for m in self.metrics])
        return int(np.argmax(f1))

    @property
    def best_threshold(self) -> float:
        return float(self.thresholds[self.best_index])

    @property
    def best(self) -> StimulationMetrics:
        return self.metrics[self.best_index]

    def rows(self) -> list[dict]:
        return [{"threshold": float(t), "precision": m.precision, "recall": m.recall, "f1": m.f1,
                 "tp": m.tp, "fp": m.fp, "fn": m.fn} for t, m in zip(self.thresholds, self.metrics)]


def threshold_sweep(scores, times_s, spindles, thresholds=None, config: DetectorConfig | None = None) -> SweepResult:
    """Re-run the stimulation policy at each threshold without re-scoring.

    Parameters
    ----------
    scores : ndarray
        Per-stride detection scores.
    times_s : ndarray
        Window-end times on the input clock (the policy adds the constant delay).
    spindles : array-like (n, 2)
        Labeled intervals in seconds.
    thresholds : array-like, optional
        Strictly increasing; defaults to :func:`default_thresholds`.
    """
    config = config or DetectorConfig()
    thr = default_thresholds() if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    if thr.ndim != 1 or thr.size == 0:
        raise ParameterError("thresholds must be a non-empty 1-D sequence")
    if np.any(np.diff(thr) <= 0):
        raise ParameterError("thresholds must be strictly increasing")
    scores = np.asarray(scores)
    times_s = np.asarray(times_s, dtype=np.float64)
    metrics, counts = [], []
    for t in thr:
        det = detections_at(scores, t)
        counts.append(int(np.count_nonzero(det)))
        metrics.append(stimulation_prf(config.policy().run(det, times_s), spindles))
    return SweepResult(thr, metrics, counts)
