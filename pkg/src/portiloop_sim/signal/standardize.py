"""Online standardization by exponential moving averages."""
from __future__ import annotations

import math

import numpy as np

from .._validation import check_fraction
from ..exceptions import ParameterError

__all__ = ["OnlineStandardizer", "ExponentialMovingAverage", "standardize_step"]


class OnlineStandardizer:
    """Running z-score of a scalar stream.

    Each sample ``s`` updates the estimates once::

        delta  = s - mu
        mu     = mu + alpha_mu * delta
        var    = (1 - alpha_sigma) * (var + alpha_sigma * delta**2)
        output = (s - mu) / (sqrt(var) + epsilon)

    Parameters
    ----------
    alpha_mu, alpha_sigma : float in [0, 1]
        Smoothing factors of the mean and variance estimates.
    epsilon : float
        Added to the standard deviation before dividing.
    mu0 : float, optional
        Initial mean. ``None`` seeds it with the first sample seen.
    var0 : float
        Initial variance.
    """

    def __init__(self, alpha_mu: float = 0.1, alpha_sigma: float = 0.001, epsilon: float = 1e-6,
                 mu0: float | None = None, var0: float = 1.0):
        self.alpha_mu = check_fraction(alpha_mu, "alpha_mu")
        self.alpha_sigma = check_fraction(alpha_sigma, "alpha_sigma")
        if epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {epsilon}")
        if var0 < 0:
            raise ParameterError(f"var0 must be non-negative, got {var0}")
        self.epsilon = float(epsilon)
        self._mu0 = mu0
        self._var0 = float(var0)
        self.reset()

    def reset(self) -> None:
        self.mu_hat = None if self._mu0 is None else float(self._mu0)
        self.sigma2_hat = self._var0

    def step(self, sample: float) -> float:
        s = float(sample)
        if self.mu_hat is None:
            self.mu_hat = s
        delta = s - self.mu_hat
        self.mu_hat += self.alpha_mu * delta
        self.sigma2_hat = (1.0 - self.alpha_sigma) * (self.sigma2_hat + self.alpha_sigma * delta * delta)
        return (s - self.mu_hat) / (math.sqrt(self.sigma2_hat) + self.epsilon)

    def process(self, samples) -> np.ndarray:
        x = np.asarray(samples, dtype=np.float64).ravel()
        if x.size == 0:
            return np.zeros(0)
        a_mu, a_sig, eps = self.alpha_mu, self.alpha_sigma, self.epsilon
        keep_sig = 1.0 - a_sig
        mu = x[0] if self.mu_hat is None else self.mu_hat
        var = self.sigma2_hat
        out = []
        append = out.append
        sqrt = math.sqrt
        # same arithmetic as step(), unrolled for speed
        for s in x.tolist():
            delta = s - mu
            mu += a_mu * delta
            var = keep_sig * (var + a_sig * delta * delta)
            append((s - mu) / (sqrt(var) + eps))
        self.mu_hat = mu
        self.sigma2_hat = var
        return np.asarray(out)


def standardize_step(std: OnlineStandardizer, sample: float) -> float:
    return std.step(sample)


class ExponentialMovingAverage:
    """``m <- m + alpha * (x - m)``; starts from the first sample unless ``initial`` is given."""

    def __init__(self, alpha: float = 0.01, initial: float | None = None):
        self.alpha = check_fraction(alpha, "alpha")
        self._initial = initial
        self.reset()

    def reset(self) -> None:
        self.value = None if self._initial is None else float(self._initial)

    def step(self, sample: float) -> float:
        s = float(sample)
        if self.value is None:
            self.value = s
        self.value += self.alpha * (s - self.value)
        return self.value

    def process(self, samples) -> np.ndarray:
        x = np.asarray(samples, dtype=np.float64).ravel()
        if x.size == 0:
            return np.zeros(0)
        m = x[0] if self.value is None else self.value
        a = self.alpha
        out = []
        append = out.append
        for s in x.tolist():
            m += a * (s - m)
            append(m)
        self.value = m
        return np.asarray(out)
