"""Streaming inference with virtual parallelization and stimulation events."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from ..exceptions import ParameterError, ShapeError
from ..nn.inference import interleave_factor, strided_windows
from ..signal.pipeline import PipelineConfig, PreprocessPipeline
from .policy import StimulationPolicy, StimulusEvent

__all__ = [
    "DetectorConfig",
    "VirtualHiddenFifo",
    "fifo_step",
    "StreamingDetector",
    "StreamResult",
    "run_stream",
]


@dataclass(frozen=True)
class DetectorConfig:
    """Streaming detector settings.

    The default pairs a 40-sample dilation with a 5-sample (20 ms) stride,
    giving ``K = 8`` hidden states. Networks trained with the 42-sample
    dilation should run with ``dilation_samples=42, stride_samples=6``
    (``K = 7``); see :meth:`for_network`.
    """

    threshold: float = 0.5
    stride_samples: int = 5
    dilation_samples: int = 40
    constant_delay_ms: float = 64.0
    stimulus_ms: float = 100.0
    refractory_ms: float = 400.0
    sample_rate: float = 250.0

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ParameterError(f"threshold must lie in [0, 1], got {self.threshold}")
        if self.stride_samples < 1 or self.dilation_samples < 1:
            raise ParameterError("stride and dilation must be positive")
        interleave_factor(self.dilation_samples, self.stride_samples)
        if min(self.constant_delay_ms, self.stimulus_ms, self.refractory_ms) < 0:
            raise ParameterError("delays and durations must be non-negative")

    @property
    def K(self) -> int:
        return self.dilation_samples // self.stride_samples

    @classmethod
    def for_network(cls, spec, stride_samples: int | None = None, **overrides) -> "DetectorConfig":
        from ..nn.train import default_stride

        dilation = spec.dilation_samples
        stride = stride_samples or default_stride(dilation)
        return cls(stride_samples=stride, dilation_samples=dilation, sample_rate=spec.sample_rate, **overrides)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ParameterError(f"unknown DetectorConfig field(s): {sorted(unknown)}")
        return cls(**d)

    def policy(self) -> StimulationPolicy:
        return StimulationPolicy(self.refractory_ms / 1000.0, self.stimulus_ms / 1000.0,
                                 self.constant_delay_ms / 1000.0)


class VirtualHiddenFifo:
    """Queue of ``K`` hidden states; each window pops the oldest and pushes its successor.

    Stored as a ring buffer: ``states[(head + i) % K]`` is the ``i``-th oldest.
    """

    def __init__(self, K: int, state_shape: tuple, dtype=np.float32):
        if K < 1:
            raise ParameterError(f"K must be positive, got {K}")
        self.K = K
        self.states = np.zeros((K,) + tuple(state_shape), dtype=dtype)
        self.head = 0

    def __len__(self) -> int:
        return self.K

    def pop(self) -> np.ndarray:
        return self.states[self.head].copy()

    def push(self, h: np.ndarray) -> None:
        # the slot just popped is the one that becomes the newest
        self.states[self.head] = h
        self.head = (self.head + 1) % self.K

    def ordered(self) -> np.ndarray:
        """States oldest first."""
        return np.roll(self.states, -self.head, axis=0)

    def set_ordered(self, states: np.ndarray) -> None:
        self.states = np.array(states, dtype=self.states.dtype)
        self.head = 0

    def reset(self) -> None:
        self.states[:] = 0
        self.head = 0


def fifo_step(fifo: VirtualHiddenFifo, net, window) -> float:
    """Score one window with the oldest hidden state, then queue the updated state."""
    y, h = net.forward_window(window, fifo.pop())
    fifo.push(h)
    return y


@dataclass
class StreamResult:
    scores: np.ndarray
    window_ends: np.ndarray
    score_times_s: np.ndarray
    events: list
    n_samples: int
    wall_time_s: float
    sample_rate: float = 250.0

    @property
    def trigger_times_s(self) -> np.ndarray:
        return np.array([e.trigger_time_s for e in self.events])

    @property
    def samples_per_second(self) -> float:
        return self.n_samples / self.wall_time_s if self.wall_time_s > 0 else float("inf")

    @property
    def realtime_factor(self) -> float:
        return self.samples_per_second / self.sample_rate


class StreamingDetector:
    """Chunk-at-a-time detector over a preprocessed (or raw) stream.

    Windows end every ``stride_samples`` samples starting at the first full
    window. Window ``j`` uses FIFO slot ``j mod K``; windows arriving in one
    chunk are scored together through :meth:`Network.scan_interleaved`,
    which is equivalent to stepping the FIFO one window at a time.

    Parameters
    ----------
    net : Network
    config : DetectorConfig
    preprocess : bool
        If True, chunks are raw samples and go through a :class:`PreprocessPipeline` first.
    pipeline_config : PipelineConfig, optional
    """

    def __init__(self, net, config: DetectorConfig | None = None, preprocess: bool = False,
                 pipeline_config: PipelineConfig | None = None):
        self.net = net
        self.config = config or DetectorConfig()
        spec = net.spec
        self.pipeline = None
        if preprocess:
            self.pipeline = PreprocessPipeline(pipeline_config or PipelineConfig(sample_rate=self.config.sample_rate))
        self.fifo = VirtualHiddenFifo(self.config.K, (spec.n_inputs, spec.rnn_layers, spec.rnn_hidden), net.dtype)
        self.policy = self.config.policy()
        self.reset()

    def reset(self) -> None:
        spec = self.net.spec
        self.fifo.reset()
        self.policy.reset()
        if self.pipeline is not None:
            self.pipeline.reset()
        self._buffer = np.zeros((spec.n_inputs, 0), dtype=self.net.dtype)
        self._consumed = 0  # samples seen so far
        self._next_end = spec.window_samples - 1
        self._n_windows = 0

    def _prepare(self, chunk) -> np.ndarray:
        spec = self.net.spec
        chunk = np.asarray(chunk)
        if self.pipeline is not None:
            clean, env = self.pipeline.process(np.ravel(chunk))
            chunk = clean[None] if spec.n_inputs == 1 else np.stack([clean, env])
        chunk = np.atleast_2d(chunk)
        if chunk.shape[0] != spec.n_inputs:
            raise ShapeError(f"chunk has {chunk.shape[0]} inputs, network expects {spec.n_inputs}")
        return chunk.astype(self.net.dtype, copy=False)

    def process(self, chunk):
        """Consume samples; returns ``(scores, window_ends, events)`` produced by this chunk."""
        spec, cfg = self.net.spec, self.config
        chunk = self._prepare(chunk)
        data = np.concatenate([self._buffer, chunk], axis=1)
        base = self._consumed - self._buffer.shape[1]  # global index of data[:, 0]
        self._consumed += chunk.shape[1]
        windows, local_ends = strided_windows(data, spec.window_samples, cfg.stride_samples,
                                              first_end=self._next_end - base)
        ends = local_ends + base
        if len(ends):
            # the oldest state belongs to the next window, i.e. relative slot 0
            scores, state = self.net.scan_interleaved(windows, cfg.K, self.fifo.ordered())
            self._n_windows += len(ends)
            self.fifo.set_ordered(np.roll(state, -(len(ends) % cfg.K), axis=0))
            self._next_end = int(ends[-1]) + cfg.stride_samples
        else:
            scores = np.zeros(0, dtype=self.net.dtype)
        keep_from = max(0, self._next_end - spec.window_samples + 1 - base)
        self._buffer = data[:, keep_from:].copy()
        times = ends / cfg.sample_rate
        events = self.policy.run(scores >= cfg.threshold, times)
        return scores, ends, events


def run_stream(signal, net, config: DetectorConfig | None = None, *, preprocess: bool = False,
               pipeline_config: PipelineConfig | None = None, chunk_size: int | None = None) -> StreamResult:
    """Run a detector over a whole signal, optionally in chunks of ``chunk_size`` samples.

    ``signal`` is ``(n_inputs, n)`` preprocessed data, or a raw 1-D signal when
    ``preprocess`` is True. Score times are window ends plus the constant delay.
    """
    config = config or DetectorConfig()
    det = StreamingDetector(net, config, preprocess=preprocess, pipeline_config=pipeline_config)
    signal = np.asarray(signal)
    n = signal.shape[-1]
    if n < net.spec.window_samples:
        raise ShapeError(f"signal of {n} samples is shorter than one window")
    step = chunk_size or n
    all_scores, all_ends, events = [], [], []
    start = time.perf_counter()
    for lo in range(0, n, step):
        s, e, ev = det.process(signal[..., lo:lo + step])
        all_scores.append(s)
        all_ends.append(e)
        events.extend(ev)
    wall = time.perf_counter() - start
    ends = np.concatenate(all_ends)
    result = StreamResult(
        scores=np.concatenate(all_scores),
        window_ends=ends,
        score_times_s=ends / config.sample_rate + config.constant_delay_ms / 1000.0,
        events=events,
        n_samples=n,
        wall_time_s=wall,
        sample_rate=config.sample_rate,
    )
    return result
