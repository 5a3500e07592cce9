"""Windowed-sinc FIR design and a streaming FIR filter.

A linear-phase FIR of order ``o`` delays every frequency by ``o / 2`` samples,
i.e. ``o / (2 f)`` seconds at sampling rate ``f``. The pipeline relies on this
to give both preprocessing branches the same software delay.
"""
from __future__ import annotations

import numpy as np

from .._validation import check_positive_int, check_signal
from ..exceptions import ParameterError

__all__ = ["FirFilter", "design_fir", "fir_step", "frequency_response"]

_KINDS = ("lowpass", "bandpass", "notch")


class FirFilter:
    """Streaming FIR filter with an explicit input history.

    Parameters
    ----------
    coefficients : array_like
        Filter taps ``h[0..order]``; output is ``y[n] = sum_k h[k] x[n-k]``.
    delay : float, optional
        Group delay in samples. Defaults to ``order / 2``, which is exact for
        symmetric (linear-phase) taps.

    Attributes
    ----------
    history : ndarray of shape (order + 1,)
        The last ``order + 1`` inputs, oldest first. Zero-filled on reset.
    """

    def __init__(self, coefficients, delay: float | None = None):
        taps = np.asarray(coefficients, dtype=np.float64).ravel()
        if taps.size == 0:
            raise ParameterError("an FIR filter needs at least one tap")
        self.coefficients = taps
        self.order = taps.size - 1
        self.delay = float(self.order / 2 if delay is None else delay)
        self.history = np.zeros(taps.size)

    @classmethod
    def delay_line(cls, n_samples: int) -> "FirFilter":
        """Pure delay of ``n_samples`` (a single unit tap)."""
        n_samples = check_positive_int(n_samples, "n_samples", minimum=0)
        taps = np.zeros(n_samples + 1)
        taps[-1] = 1.0
        return cls(taps, delay=n_samples)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.allclose(self.coefficients, self.coefficients[::-1], rtol=0, atol=1e-15))

    def reset(self) -> None:
        self.history[:] = 0.0

    def step(self, sample: float) -> float:
        return float(self.process(np.array([sample], dtype=np.float64))[0])

    def process(self, samples) -> np.ndarray:
        """Filter a chunk, carrying history across calls.

        Accumulation runs tap by tap over the whole chunk, so every output
        sample is computed with the same floating-point operations regardless
        of how the stream is split into chunks.
        """
        x = np.asarray(samples, dtype=np.float64).ravel()
        m = x.size
        if m == 0:
            return np.zeros(0)
        n = self.coefficients.size
        ext = np.concatenate([self.history[1:], x])
        out = np.zeros(m)
        for k, tap in enumerate(self.coefficients):
            start = n - 1 - k
            out += tap * ext[start:start + m]
        self.history = ext[-n:].copy()
        return out

    def frequency_response(self, freqs, sample_rate: float) -> np.ndarray:
        return frequency_response(self.coefficients, freqs, sample_rate)

    def __repr__(self) -> str:
        return f"FirFilter(order={self.order}, delay={self.delay:g})"


def fir_step(filt: FirFilter, sample: float) -> float:
    """Push one sample through ``filt`` and return the filtered value."""
    return filt.step(sample)


def frequency_response(taps, freqs, sample_rate: float) -> np.ndarray:
    """Complex response ``H(f) = sum_k h[k] exp(-2j pi f k / fs)``."""
    taps = np.asarray(taps, dtype=np.float64)
    f = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    k = np.arange(taps.size)
    return np.exp(-2j * np.pi * np.outer(f, k) / sample_rate) @ taps


def _lowpass_prototype(cutoff: float, n: np.ndarray, sample_rate: float) -> np.ndarray:
    fc = 2.0 * cutoff / sample_rate
    return fc * np.sinc(fc * n)


def design_fir(kind: str, cutoffs, order: int, sample_rate: float, window: str = "hamming") -> FirFilter:
    """Design a linear-phase FIR filter by the windowed-sinc method.

    Parameters
    ----------
    kind : {"lowpass", "bandpass", "notch"}
        ``lowpass`` takes one cutoff; ``bandpass`` and ``notch`` (band-stop)
        take ``(low, high)``.
    cutoffs : float or sequence of float
        Band edges in Hz, strictly inside ``(0, sample_rate / 2)``.
    order : int
        Filter order (number of taps minus one), at least 2. ``notch`` needs
        an even order so the response is not forced to zero at Nyquist.
    sample_rate : float
        Sampling rate in Hz.
    window : {"hamming", "hann", "blackman", "boxcar"}

    Returns
    -------
    FirFilter
        Symmetric taps. Lowpass and notch are scaled to unit DC gain, bandpass
        to unit gain at the band centre.
    """
    if kind not in _KINDS:
        raise ParameterError(f"kind must be one of {_KINDS}, got {kind!r}")
    order = check_positive_int(order, "order", minimum=2)
    sample_rate = float(sample_rate)
    if sample_rate <= 0:
        raise ParameterError(f"sample_rate must be positive, got {sample_rate}")
    edges = [float(c) for c in np.atleast_1d(cutoffs)]
    expected = 1 if kind == "lowpass" else 2
    if len(edges) != expected:
        raise ParameterError(f"{kind} takes {expected} cutoff(s), got {len(edges)}")
    nyquist = sample_rate / 2.0
    for c in edges:
        if not 0.0 < c < nyquist:
            raise ParameterError(f"cutoff {c} Hz must lie strictly inside (0, {nyquist}) Hz")
    if expected == 2 and not edges[0] < edges[1]:
        raise ParameterError(f"band edges must be increasing, got {edges}")
    if kind == "notch" and order % 2:
        raise ParameterError("a notch (band-stop) filter needs an even order")

    numtaps = order + 1
    n = np.arange(numtaps) - order / 2.0
    win = _window(window, numtaps)

    if kind == "lowpass":
        h = _lowpass_prototype(edges[0], n, sample_rate) * win
        h /= h.sum()
    elif kind == "bandpass":
        h = (_lowpass_prototype(edges[1], n, sample_rate) - _lowpass_prototype(edges[0], n, sample_rate)) * win
        centre = 0.5 * (edges[0] + edges[1])
        # amplitude of the zero-phase response at the band centre
        h /= np.sum(h * np.cos(2.0 * np.pi * centre * n / sample_rate))
    else:
        impulse = (n == 0).astype(np.float64)
        band = _lowpass_prototype(edges[1], n, sample_rate) - _lowpass_prototype(edges[0], n, sample_rate)
        h = (impulse - band) * win
        h /= h.sum()
    # symmetrize away rounding so the linear-phase delay is exact
    h = 0.5 * (h + h[::-1])
    return FirFilter(h)


def _window(name: str, numtaps: int) -> np.ndarray:
    if name == "hamming":
        return np.hamming(numtaps)
    if name == "hann":
        return np.hanning(numtaps)
    if name == "blackman":
        return np.blackman(numtaps)
    if name == "boxcar":
        return np.ones(numtaps)
    raise ParameterError(f"unknown window {name!r}")


def impulse_response(filt: FirFilter, n_samples: int) -> np.ndarray:
    """Response of a freshly reset copy of ``filt`` to a unit impulse."""
    probe = FirFilter(filt.coefficients, delay=filt.delay)
    x = np.zeros(check_positive_int(n_samples, "n_samples"))
    x[0] = 1.0
    return probe.process(check_signal(x))
