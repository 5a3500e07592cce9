"""Two-branch streaming preprocessing: cleaned signal and spindle-band envelope.

Branch delays are matched: the clean branch (band-pass + mains notch) and the
envelope branch (12-16 Hz band-pass) carry the same FIR group delay, so a pair
``(clean[i], envelope[i])`` always refers to the same input instant.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..exceptions import ParameterError
from .fir import FirFilter, design_fir
from .standardize import ExponentialMovingAverage, OnlineStandardizer

__all__ = [
    "PipelineConfig",
    "CleanBranch",
    "EnvelopeBranch",
    "PreprocessPipeline",
    "Decimator",
    "downsample",
    "envelope_step",
    "pipeline_step",
]


@dataclass(frozen=True)
class PipelineConfig:
    sample_rate: float = 250.0
    mains_hz: float = 60.0
    clean_band: tuple = (0.5, 30.0)
    clean_order: int = 10
    notch_order: int = 10
    notch_bandwidth: float = 20.0
    clean_alpha_mu: float = 0.1
    clean_alpha_sigma: float = 0.001
    envelope_band: tuple = (12.0, 16.0)
    envelope_order: int = 20
    envelope_alpha_mu: float = 0.001
    envelope_alpha_sigma: float = 0.001
    smoothing_alpha: float = 0.01
    epsilon: float = 1e-6
    var0: float = 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["clean_band"] = list(self.clean_band)
        d["envelope_band"] = list(self.envelope_band)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        for key in ("clean_band", "envelope_band"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


class _Chain:
    """FIR stages followed by an optional pure delay that pads to a target delay."""

    def __init__(self, filters):
        self.filters = list(filters)

    @property
    def fir_delay(self) -> float:
        return sum(f.delay for f in self.filters)

    def pad_to(self, delay: float) -> None:
        extra = delay - self.fir_delay
        if extra < 0 or not float(extra).is_integer():
            raise ParameterError(f"cannot pad branch delay {self.fir_delay} to {delay}")
        if extra:
            self.filters.append(FirFilter.delay_line(int(extra)))

    def process(self, x: np.ndarray) -> np.ndarray:
        for f in self.filters:
            x = f.process(x)
        return x

    def impulse_response(self, n: int) -> np.ndarray:
        x = np.zeros(n)
        x[0] = 1.0
        for f in self.filters:
            x = FirFilter(f.coefficients, delay=f.delay).process(x)
        return x


class CleanBranch:
    """Band-pass, mains notch, then fast-mean standardization (removes drifts under ~4 Hz)."""

    def __init__(self, config: PipelineConfig = PipelineConfig()):
        fs = config.sample_rate
        half = config.notch_bandwidth / 2.0
        self.bandpass = design_fir("bandpass", config.clean_band, config.clean_order, fs)
        self.notch = design_fir("notch", (config.mains_hz - half, config.mains_hz + half), config.notch_order, fs)
        self.chain = _Chain([self.bandpass, self.notch])
        self.standardizer = OnlineStandardizer(config.clean_alpha_mu, config.clean_alpha_sigma,
                                               config.epsilon, var0=config.var0)

    def reset(self) -> None:
        for f in self.chain.filters:
            f.reset()
        self.standardizer.reset()

    def process(self, x: np.ndarray) -> np.ndarray:
        return self.standardizer.process(self.chain.process(x))

    def step(self, sample: float) -> float:
        return float(self.process(np.array([sample]))[0])


class EnvelopeBranch:
    """Spindle-band power: band-pass, slow standardization, square, exponential smoothing."""

    def __init__(self, config: PipelineConfig = PipelineConfig()):
        fs = config.sample_rate
        self.bandpass = design_fir("bandpass", config.envelope_band, config.envelope_order, fs)
        self.chain = _Chain([self.bandpass])
        self.standardizer = OnlineStandardizer(config.envelope_alpha_mu, config.envelope_alpha_sigma,
                                               config.epsilon, var0=config.var0)
        self.smoother = ExponentialMovingAverage(config.smoothing_alpha)

    def reset(self) -> None:
        for f in self.chain.filters:
            f.reset()
        self.standardizer.reset()
        self.smoother.reset()

    def process(self, x: np.ndarray) -> np.ndarray:
        z = self.standardizer.process(self.chain.process(x))
        return self.smoother.process(z * z)

    def step(self, sample: float) -> float:
        return float(self.process(np.array([sample]))[0])


def envelope_step(branch: EnvelopeBranch, sample: float) -> float:
    return branch.step(sample)


class PreprocessPipeline:
    """Streaming preprocessing producing time-aligned ``(clean, envelope)`` pairs.

    Examples
    --------
    >>> p = PreprocessPipeline()
    >>> p.group_delay_ms()
    40.0
    """

    def __init__(self, config: PipelineConfig | None = None):
        self.config = config or PipelineConfig()
        self.branch_clean = CleanBranch(self.config)
        self.branch_envelope = EnvelopeBranch(self.config)
        target = max(self.branch_clean.chain.fir_delay, self.branch_envelope.chain.fir_delay)
        self.branch_clean.chain.pad_to(target)
        self.branch_envelope.chain.pad_to(target)

    @property
    def sample_rate(self) -> float:
        return self.config.sample_rate

    def reset(self) -> None:
        self.branch_clean.reset()
        self.branch_envelope.reset()

    def group_delay_samples(self) -> float:
        return self.branch_clean.chain.fir_delay

    def group_delay_ms(self) -> float:
        return 1000.0 * self.group_delay_samples() / self.sample_rate

    def branch_delays_ms(self) -> dict:
        fs = self.sample_rate
        return {
            "clean": 1000.0 * self.branch_clean.chain.fir_delay / fs,
            "envelope": 1000.0 * self.branch_envelope.chain.fir_delay / fs,
        }

    def step(self, raw_sample: float) -> tuple[float, float]:
        clean, env = self.process(np.array([raw_sample], dtype=np.float64))
        return float(clean[0]), float(env[0])

    def process(self, raw) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(raw, dtype=np.float64).ravel()
        return self.branch_clean.process(x), self.branch_envelope.process(x)

    def impulse_responses(self, n_samples: int = 64) -> dict:
        """Impulse responses of the linear (FIR) part of each branch."""
        return {
            "clean": self.branch_clean.chain.impulse_response(n_samples),
            "envelope": self.branch_envelope.chain.impulse_response(n_samples),
        }

    def describe(self) -> dict:
        """Resolved configuration, including the notch settings and achieved gains."""
        fs = self.sample_rate
        mains = self.config.mains_hz
        notch_gain = abs(self.branch_clean.notch.frequency_response(mains, fs)[0])
        clean_gain = notch_gain * abs(self.branch_clean.bandpass.frequency_response(mains, fs)[0])
        return {
            **self.config.to_dict(),
            "notch_band_hz": [mains - self.config.notch_bandwidth / 2, mains + self.config.notch_bandwidth / 2],
            "notch_gain_at_mains": float(notch_gain),
            "clean_branch_gain_at_mains": float(clean_gain),
            "group_delay_ms": self.group_delay_ms(),
            "branch_delays_ms": self.branch_delays_ms(),
        }


def pipeline_step(p: PreprocessPipeline, raw_sample: float) -> tuple[float, float]:
    return p.step(raw_sample)


def _decimation_factor(in_rate: float, out_rate: float) -> int:
    if in_rate <= 0 or out_rate <= 0:
        raise ParameterError("sample rates must be positive")
    ratio = in_rate / out_rate
    if ratio < 1 or not float(ratio).is_integer():
        raise ParameterError(f"input rate {in_rate} is not an integer multiple of output rate {out_rate}")
    return int(ratio)


def downsample(samples, in_rate: float = 500.0, out_rate: float = 250.0) -> np.ndarray:
    """Keep samples 0, q, 2q, ... where ``q = in_rate / out_rate``. No anti-alias filter."""
    q = _decimation_factor(in_rate, out_rate)
    return np.asarray(samples)[::q].copy()


@dataclass
class Decimator:
    """Streaming counterpart of :func:`downsample` that keeps phase across chunks."""

    in_rate: float = 500.0
    out_rate: float = 250.0
    _offset: int = field(default=0, init=False)

    def __post_init__(self):
        self.factor = _decimation_factor(self.in_rate, self.out_rate)

    def process(self, chunk) -> np.ndarray:
        x = np.asarray(chunk)
        out = x[self._offset::self.factor].copy()
        self._offset = (self._offset - x.size) % self.factor
        return out


def make_pipeline(sample_rate: float = 250.0, mains_hz: float = 60.0, **overrides) -> PreprocessPipeline:
    return PreprocessPipeline(PipelineConfig(sample_rate=sample_rate, mains_hz=mains_hz, **overrides))
