"""Sample-wise and event-level detection metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..exceptions import DataError, ShapeError

__all__ = [
    "f1_from_pr",
    "SampleMetrics",
    "StimulationMetrics",
    "samplewise_prf",
    "stimulation_prf",
    "delay_distribution",
    "NEAREST_LOOKBACK_S",
]

# stimuli up to this long before a spindle onset still count for its delay
NEAREST_LOOKBACK_S = 2.0


def f1_from_pr(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall, 0 when either is 0."""
    if precision <= 0 or recall <= 0:
        return 0.0
    return 2.0 / (1.0 / precision + 1.0 / recall)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class SampleMetrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        return f1_from_pr(self.precision, self.recall)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(precision=self.precision, recall=self.recall, f1=self.f1)
        return d


def samplewise_prf(predictions, labels) -> SampleMetrics:
    """Per-sample confusion counts of boolean predictions against labels."""
    pred = np.asarray(predictions, dtype=bool).ravel()
    lab = np.asarray(labels, dtype=bool).ravel()
    if pred.shape != lab.shape:
        raise ShapeError(f"predictions ({pred.size}) and labels ({lab.size}) differ in length")
    tp = int(np.count_nonzero(pred & lab))
    fp = int(np.count_nonzero(pred & ~lab))
    fn = int(np.count_nonzero(~pred & lab))
    return SampleMetrics(tp, fp, fn, pred.size - tp - fp - fn)


@dataclass
class StimulationMetrics:
    """Event-level outcome.

    ``delays_ms[i]`` is the delay of spindle ``i``'s nearest stimulus
    (trigger minus onset), or NaN when no stimulus lies in
    ``[onset - 2 s, end]``. ``stimulus_is_tp[j]`` marks stimuli that were the
    first one inside a spindle.
    """

    tp: int
    fp: int
    fn: int
    delays_ms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    stimulus_is_tp: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        return f1_from_pr(self.precision, self.recall)

    @property
    def n_spindles(self) -> int:
        return self.tp + self.fn

    @property
    def n_stimuli(self) -> int:
        return self.tp + self.fp

    @property
    def valid_delays_ms(self) -> np.ndarray:
        return self.delays_ms[np.isfinite(self.delays_ms)]

    def to_dict(self) -> dict:
        d = self.valid_delays_ms
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "mean_delay_ms": float(d.mean()) if d.size else None,
            "median_delay_ms": float(np.median(d)) if d.size else None,
        }


def _check_intervals(spindles) -> np.ndarray:
    iv = np.asarray(spindles, dtype=np.float64).reshape(-1, 2)
    if np.any(iv[:, 1] < iv[:, 0]):
        raise DataError("spindle interval ends before it starts")
    if len(iv) > 1 and np.any(iv[1:, 0] <= iv[:-1, 1]):
        raise DataError("spindle intervals must be sorted and non-overlapping")
    return iv


def stimulation_prf(stimuli, spindles) -> StimulationMetrics:
    """Score stimuli against labeled spindles.

    A spindle is a true positive when at least one stimulus triggers inside
    its closed interval ``[onset, end]``; the first such stimulus is the true
    positive stimulus and every other stimulus is a false positive. Spindles
    without a stimulus inside are false negatives, so a stimulus sent just
    before an onset counts as both a false positive and a missed spindle.

    Parameters
    ----------
    stimuli : iterable of StimulusEvent or float
        Events or trigger times in seconds.
    spindles : array-like (n, 2)
        Sorted, non-overlapping ``(onset_s, end_s)`` intervals.
    """
    times = np.sort(np.array([getattr(s, "trigger_time_s", s) for s in stimuli], dtype=np.float64))
    iv = _check_intervals(spindles)
    is_tp = np.zeros(times.size, dtype=bool)
    delays = np.full(len(iv), np.nan)
    tp = 0
    for i, (onset, end) in enumerate(iv):
        first = np.searchsorted(times, onset, side="left")
        if first < times.size and times[first] <= end:
            is_tp[first] = True
            tp += 1
        lo = np.searchsorted(times, onset - NEAREST_LOOKBACK_S, side="left")
        hi = np.searchsorted(times, end, side="right")
        if hi > lo:
            cand = times[lo:hi]
            # ties go to the earlier stimulus
            delays[i] = 1000.0 * (cand[np.argmin(np.abs(cand - onset))] - onset)
    return StimulationMetrics(tp, int(times.size - tp), int(len(iv) - tp), delays, is_tp)


def delay_distribution(delays, bin_ms: float = 50.0, low_ms: float = -500.0, high_ms: float = 1500.0):
    """Histogram of stimulation delays with fixed bins; out-of-range delays go to the edge bins.

    ``delays`` may be a :class:`StimulationMetrics` or an array of milliseconds
    (NaN entries are ignored). Returns ``(edges, counts)``.
    """
    if isinstance(delays, StimulationMetrics):
        delays = delays.delays_ms
    d = np.asarray(delays, dtype=np.float64).ravel()
    d = d[np.isfinite(d)]
    edges = np.arange(low_ms, high_ms + bin_ms / 2, bin_ms)
    clipped = np.clip(d, low_ms, np.nextafter(high_ms, low_ms))
    counts, _ = np.histogram(clipped, bins=edges)
    return edges, counts.astype(np.int64)
