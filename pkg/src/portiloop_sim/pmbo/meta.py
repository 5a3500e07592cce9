"""Meta network predicting software cost from encoded hyperparameters."""
from __future__ import annotations

import numpy as np

from .._validation import check_random_state
from ..exceptions import ParameterError

__all__ = ["MetaNetwork", "train_meta"]


class MetaNetwork:
    """Three fully connected layers (ReLU hidden, linear output), float64.

    Hidden layers use He-uniform weights; the output layer starts at zero.

    Parameters
    ----------
    n_inputs : int
    hidden : int
        Width of both hidden layers (200).
    seed : int or Generator, optional
    """

    def __init__(self, n_inputs: int, hidden: int = 200, seed=None):
        rng = check_random_state(seed)
        sizes = [n_inputs, hidden, hidden, 1]
        self.weights, self.biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = np.sqrt(6.0 / fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out))
        # a zero output layer starts every prediction at 0; with He-scaled output
        # weights the initial predictions spread over several units and full-batch
        # SGD needs thousands of epochs to flatten them
        self.weights[-1][:] = 0.0
        self.loss_history: list[float] = []

    def _forward(self, X):
        acts = [X]
        h = X
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W.T + b
            if i < len(self.weights) - 1:
                h = np.maximum(h, 0)
            acts.append(h)
        return h[:, 0], acts

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self._forward(X)[0]

    def sgd_step(self, X, y, lr: float, weight_decay: float) -> float:
        """One full-batch SGD step on mean squared error; returns the pre-step loss."""
        pred, acts = self._forward(X)
        err = pred - y
        loss = float(np.mean(err * err))
        d = (2.0 * err / err.size)[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            W = self.weights[i]
            gW = d.T @ acts[i] + weight_decay * W
            gb = d.sum(axis=0)
            if i > 0:
                d = (d @ W) * (acts[i] > 0)
            W -= lr * gW
            self.biases[i] -= lr * gb
        return loss


def train_meta(X, y, hidden: int = 200, lr: float = 0.05, weight_decay: float = 0.01, epochs: int = 300,
               seed=None) -> MetaNetwork:
    """Fit a fresh :class:`MetaNetwork` to encoded hyperparameters ``X`` and costs ``y``."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise ParameterError("X and y must have the same number of rows")
    if y.size < 2:
        raise ParameterError(f"the meta network needs at least 2 experiments, got {y.size}")
    net = MetaNetwork(X.shape[1], hidden, seed)
    for _ in range(epochs):
        net.loss_history.append(net.sgd_step(X, y, lr, weight_decay))
    return net
