"""Strided streaming inference with interleaved hidden states."""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ParameterError, ShapeError

__all__ = ["strided_windows", "interleave_factor", "score_signal"]


def interleave_factor(dilation: int, stride: int) -> int:
    """Number ``K`` of hidden states so each one sees windows ``dilation`` samples apart."""
    if stride < 1 or dilation < 1:
        raise ParameterError("stride and dilation must be positive")
    if dilation % stride:
        raise ParameterError(f"dilation {dilation} is not a multiple of stride {stride}")
    return dilation // stride


def strided_windows(signal: np.ndarray, window: int, stride: int, first_end: int | None = None):
    """Windows of ``(n_inputs, n)`` signal every ``stride`` samples.

    Returns ``(windows, ends)`` where ``windows`` is a ``(m, n_inputs, window)``
    view and ``ends[j]`` is the index of window ``j``'s last sample.
    """
    signal = np.atleast_2d(signal)
    n = signal.shape[1]
    first_end = window - 1 if first_end is None else first_end
    if first_end < window - 1:
        raise ShapeError("first window would start before the signal")
    if n <= first_end:
        return np.zeros((0, signal.shape[0], window), dtype=signal.dtype), np.zeros(0, dtype=np.int64)
    views = sliding_window_view(signal, window, axis=1)  # (n_inputs, n - window + 1, window)
    starts = np.arange(first_end - window + 1, n - window + 1, stride)
    return np.moveaxis(views[:, starts], 0, 1), starts + window - 1


def score_signal(net, signal: np.ndarray, stride: int, dilation: int | None = None):
    """Score a whole preprocessed signal from a zero state.

    Returns ``(scores, ends)``: one score per stride, at window end indices ``ends``.
    """
    spec = net.spec
    signal = np.atleast_2d(np.asarray(signal))
    if signal.shape[0] != spec.n_inputs:
        raise ShapeError(f"signal has {signal.shape[0]} inputs, network expects {spec.n_inputs}")
    K = interleave_factor(spec.dilation_samples if dilation is None else dilation, stride)
    windows, ends = strided_windows(signal, spec.window_samples, stride)
    scores, _ = net.scan_interleaved(windows, K)
    return scores, ends
