"""Synthetic sleep EEG with spindle bursts and MODA-style expert scores.

The background is 1/f^beta Gaussian noise. Each spindle is a sinusoid in the
12-16 Hz band whose amplitude follows a triangular envelope; the expert score
follows the same triangle scaled to a peak in [0.3, 1]. Louder spindles get
higher peaks, mimicking raters who agree more on obvious events.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .._validation import check_positive_int
from ..exceptions import ParameterError
from .labels import PHASE_THRESHOLDS, binary_to_intervals, score_to_binary

__all__ = ["SyntheticConfig", "SpindleAnnotation", "Recording", "generate_recording", "generate_dataset"]


@dataclass(frozen=True)
class SyntheticConfig:
    seed: int = 0
    duration_s: float = 360.0
    sample_rate: float = 250.0
    spindle_density: float = 0.05
    noise_exponent: float = 1.0
    noise_std: float = 20.0
    noise_low_hz: float = 0.5
    frequency_range: tuple = (12.0, 16.0)
    duration_range: tuple = (0.6, 2.5)
    snr_range: tuple = (0.5, 3.0)
    score_peak_range: tuple = (0.3, 1.0)
    subject_gain_range: tuple = (0.5, 2.0)
    min_gap_s: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.spindle_density <= 0.2:
            raise ParameterError(f"spindle_density must lie in (0, 0.2], got {self.spindle_density}")
        if self.duration_s <= 0 or self.sample_rate <= 0:
            raise ParameterError("duration_s and sample_rate must be positive")
        for name in ("frequency_range", "duration_range", "snr_range", "score_peak_range", "subject_gain_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ParameterError(f"{name} must satisfy 0 < low <= high, got {(lo, hi)}")
        lo, hi = self.score_peak_range
        if hi > 1.0:
            raise ParameterError("score peaks must not exceed 1")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True)
class SpindleAnnotation:
    onset_s: float
    duration_s: float
    frequency_hz: float
    amplitude: float
    score_peak: float


@dataclass
class Recording:
    """One subject's signal at ``sample_rate`` with per-sample scores and binary labels."""

    subject_id: int
    phase: int
    samples: np.ndarray
    scores: np.ndarray
    binary: np.ndarray
    sample_rate: float = 250.0
    annotations: tuple = field(default=(), compare=False)

    def __post_init__(self):
        n = len(self.samples)
        if len(self.scores) != n or len(self.binary) != n:
            raise ParameterError("samples, scores and binary must have equal lengths")
        if self.phase not in (1, 2):
            raise ParameterError(f"phase must be 1 or 2, got {self.phase}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate

    @property
    def density(self) -> float:
        return float(np.mean(self.binary)) if len(self) else 0.0

    def spindle_intervals(self) -> list[tuple[float, float]]:
        return binary_to_intervals(self.binary, self.sample_rate)


def _pink_noise(n: int, exponent: float, sample_rate: float, low_hz: float, rng) -> np.ndarray:
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    # flat below low_hz so slow drifts do not dominate the variance
    shaped = np.maximum(freqs, low_hz) ** (-exponent / 2.0)
    shaped[0] = 0.0
    noise = np.fft.irfft(spectrum * shaped, n=n)
    return noise / noise.std()


def _draw_burst(cfg: SyntheticConfig, rng) -> tuple[float, float, float, float]:
    duration = rng.uniform(*cfg.duration_range)
    freq = rng.uniform(*cfg.frequency_range)
    snr = rng.uniform(*cfg.snr_range)
    lo, hi = cfg.snr_range
    p_lo, p_hi = cfg.score_peak_range
    peak = p_lo + (p_hi - p_lo) * ((snr - lo) / (hi - lo) if hi > lo else 1.0)
    return duration, freq, snr, peak


def _expected_lengths(cfg: SyntheticConfig, threshold: float) -> tuple[float, float]:
    """Mean burst length and mean labeled length per burst, by Monte Carlo."""
    rng = np.random.default_rng([cfg.seed, 7919])
    draws = np.array([_draw_burst(cfg, rng) for _ in range(4000)])
    duration, peak = draws[:, 0], draws[:, 3]
    labeled = duration * np.clip(1.0 - threshold / peak, 0.0, None)
    labeled = np.where((labeled >= 0.3) & (labeled <= 2.5), labeled, 0.0)
    return float(duration.mean()), float(labeled.mean())


def generate_recording(cfg: SyntheticConfig, subject_id: int, phase: int = 1) -> Recording:
    """Deterministic (under ``cfg.seed``, ``subject_id``, ``phase``) synthetic recording."""
    if phase not in PHASE_THRESHOLDS:
        raise ParameterError(f"phase must be 1 or 2, got {phase!r}")
    subject_id = check_positive_int(subject_id, "subject_id", minimum=0)
    fs = cfg.sample_rate
    n = int(round(cfg.duration_s * fs))
    rng = np.random.default_rng([cfg.seed, subject_id, phase])

    gain = rng.uniform(*cfg.subject_gain_range)
    background = cfg.noise_std * gain * _pink_noise(n, cfg.noise_exponent, fs, cfg.noise_low_hz, rng)
    bursts = np.zeros(n)
    scores = np.zeros(n)

    mean_duration, mean_labeled = _expected_lengths(cfg, PHASE_THRESHOLDS[phase])
    cycle = mean_labeled / cfg.spindle_density if mean_labeled > 0 else cfg.duration_s
    mean_gap = max(cfg.min_gap_s, cycle - mean_duration)
    t = np.arange(n) / fs

    annotations = []
    onset = rng.uniform(cfg.min_gap_s, 2 * mean_gap - cfg.min_gap_s)
    while True:
        duration, freq, snr, peak = _draw_burst(cfg, rng)
        phase0 = rng.uniform(0, 2 * np.pi)
        if onset + duration >= cfg.duration_s - cfg.min_gap_s:
            break
        start = int(np.ceil(onset * fs))
        stop = min(n, int(np.floor((onset + duration) * fs)) + 1)
        tt = t[start:stop] - onset
        tri = np.clip(1.0 - np.abs(2.0 * tt / duration - 1.0), 0.0, 1.0)
        amplitude = snr * cfg.noise_std * gain
        bursts[start:stop] += amplitude * tri * np.sin(2 * np.pi * freq * tt + phase0)
        scores[start:stop] = np.maximum(scores[start:stop], peak * tri)
        annotations.append(SpindleAnnotation(onset, duration, freq, amplitude, peak))
        onset += duration + rng.uniform(cfg.min_gap_s, 2 * mean_gap - cfg.min_gap_s)

    samples = (background + bursts).astype(np.float32)
    scores = np.clip(scores, 0.0, 1.0).astype(np.float32)
    binary = score_to_binary(scores, phase, fs)
    return Recording(subject_id, phase, samples, scores, binary, fs, tuple(annotations))


def generate_dataset(cfg: SyntheticConfig, n_subjects: int, phase2_fraction: float = 0.4) -> list[Recording]:
    """``n_subjects`` recordings; the last ``phase2_fraction`` of subject ids are phase 2."""
    n_subjects = check_positive_int(n_subjects, "n_subjects")
    n_phase1 = n_subjects - int(round(phase2_fraction * n_subjects))
    return [generate_recording(cfg, sid, 1 if sid < n_phase1 else 2) for sid in range(n_subjects)]
