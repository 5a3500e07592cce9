"""Integrated-gradients attribution along the straight path from a baseline."""
from __future__ import annotations

import numpy as np

from ..exceptions import ParameterError, ShapeError

__all__ = ["integrated_gradients", "network_attributions"]


def _path_weights(steps: int) -> tuple[np.ndarray, np.ndarray]:
    # midpoints avoid the baseline itself, where ReLU units sit exactly at their kink
    alphas = (np.arange(steps) + 0.5) / steps
    return alphas, np.full(steps, 1.0 / steps)


def _check_path(x, baseline, steps):
    if steps < 2:
        raise ParameterError(f"steps must be >= 2, got {steps}")
    x = np.asarray(x, dtype=np.float64)
    x0 = np.zeros_like(x) if baseline is None else np.asarray(baseline, dtype=np.float64)
    if x0.shape != x.shape:
        raise ShapeError(f"baseline shape {x0.shape} differs from input shape {x.shape}")
    return x, x0


def integrated_gradients(fn, x, baseline=None, steps: int = 64) -> np.ndarray:
    """Attribution ``(x - x0) * mean_path(grad)``, averaging gradients at path midpoints.

    Parameters
    ----------
    fn : callable
        Maps an array shaped like ``x`` to ``(y, dy/dx)``.
    x, baseline : ndarray
        ``baseline`` defaults to zeros.
    steps : int
        Number of path intervals; one gradient evaluation at each midpoint.
    """
    x, x0 = _check_path(x, baseline, steps)
    total = np.zeros_like(x)
    for a, w in zip(*_path_weights(steps)):
        _, g = fn(x0 + a * (x - x0))
        total += w * np.asarray(g, dtype=np.float64)
    return (x - x0) * total


def network_attributions(net, sequence, baseline=None, steps: int = 64) -> np.ndarray:
    """Attribute the network's final-step score to every input sample.

    ``sequence`` is ``(T, n_inputs, window)``; the network runs in float64
    from a zero state and the score is the output after the last window.
    All path points are evaluated as one batch.
    """
    net64 = net.astype(np.float64)
    seq, x0 = _check_path(sequence, baseline, steps)
    if seq.ndim != 3:
        raise ShapeError(f"sequence must be (T, n_inputs, window), got shape {seq.shape}")
    alphas, weights = _path_weights(steps)
    path = x0[None] + alphas[:, None, None, None] * (seq - x0)[None]
    logits, _, cache = net64.forward(path, keep_cache=True)
    y = net64.output(logits)
    dy = y * (1 - y) if net64.spec.mode == "classifier" else np.ones_like(y)
    _, dX = net64.backward(dy, cache, need_input_grad=True)
    return (seq - x0) * np.tensordot(weights, dX, axes=1)
