"""Expert-score to binary label post-processing and interval helpers."""
from __future__ import annotations

import numpy as np

from ..exceptions import ParameterError

__all__ = [
    "PHASE_THRESHOLDS",
    "score_to_binary",
    "runs",
    "binary_to_intervals",
]

PHASE_THRESHOLDS = {1: 0.2, 2: 0.35}

MERGE_GAP_S = 0.1
MIN_DURATION_S = 0.3
MAX_DURATION_S = 2.5


def runs(mask) -> np.ndarray:
    """Half-open ``[start, stop)`` index pairs of the True runs in ``mask``."""
    m = np.asarray(mask, dtype=bool).ravel()
    if m.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    padded = np.concatenate([[False], m, [False]])
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return edges.reshape(-1, 2).astype(np.int64)


def score_to_binary(scores, phase: int, sample_rate: float = 250.0, threshold: float | None = None) -> np.ndarray:
    """Binary spindle labels from per-sample mean expert scores.

    Steps, in order: threshold (0.2 for phase 1, 0.35 for phase 2), merge
    segments separated by less than 0.1 s, then relabel as negative every
    segment shorter than 0.3 s or longer than 2.5 s.
    """
    if threshold is None:
        if phase not in PHASE_THRESHOLDS:
            raise ParameterError(f"phase must be 1 or 2, got {phase!r}")
        threshold = PHASE_THRESHOLDS[phase]
    s = np.asarray(scores, dtype=np.float64).ravel()
    segments = runs(s >= threshold)
    out = np.zeros(s.size, dtype=bool)
    if len(segments) == 0:
        return out

    merged = [list(segments[0])]
    for start, stop in segments[1:]:
        if start - merged[-1][1] < MERGE_GAP_S * sample_rate:
            merged[-1][1] = stop
        else:
            merged.append([start, stop])

    for start, stop in merged:
        duration = (stop - start) / sample_rate
        if MIN_DURATION_S <= duration <= MAX_DURATION_S:
            out[start:stop] = True
    return out


def binary_to_intervals(binary, sample_rate: float) -> list[tuple[float, float]]:
    """Labeled spindles as ``(onset_s, end_s)``; ``end_s`` is the exclusive stop index over the rate."""
    return [(start / sample_rate, stop / sample_rate) for start, stop in runs(binary)]
