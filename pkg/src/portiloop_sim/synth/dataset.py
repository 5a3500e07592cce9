"""Subject splits and BPTT batch sampling with class oversampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._validation import check_positive_int, check_random_state
from ..exceptions import ParameterError
from ..signal.pipeline import PipelineConfig, PreprocessPipeline

__all__ = ["split_subjects", "prepare_inputs", "SequenceDataset", "oversample_batches"]


def split_subjects(recordings, seed=None, fraction: float = 0.1):
    """Split recordings into disjoint ``(train, validation, test)`` sets by subject.

    Validation and test each receive ``ceil(fraction * n_subjects)`` subjects.
    """
    subjects = sorted({r.subject_id for r in recordings})
    if len(subjects) < 10:
        raise ParameterError(f"need at least 10 subjects to split, got {len(subjects)}")
    n_hold = math.ceil(fraction * len(subjects))
    order = check_random_state(seed).permutation(len(subjects))
    shuffled = [subjects[i] for i in order]
    val_ids = set(shuffled[:n_hold])
    test_ids = set(shuffled[n_hold:2 * n_hold])
    train = [r for r in recordings if r.subject_id not in val_ids | test_ids]
    validation = [r for r in recordings if r.subject_id in val_ids]
    test = [r for r in recordings if r.subject_id in test_ids]
    return train, validation, test


def prepare_inputs(recording, inputs: str = "clean", pipeline_config: PipelineConfig | None = None) -> np.ndarray:
    """Run the preprocessing pipeline over a recording; returns ``(n_inputs, n)`` float32."""
    config = pipeline_config or PipelineConfig(sample_rate=recording.sample_rate)
    clean, envelope = PreprocessPipeline(config).process(recording.samples)
    if inputs == "clean":
        return clean[None].astype(np.float32)
    if inputs == "clean+envelope":
        return np.stack([clean, envelope]).astype(np.float32)
    raise ParameterError(f"inputs must be 'clean' or 'clean+envelope', got {inputs!r}")


@dataclass
class SequenceDataset:
    """Preprocessed streams and per-sample targets, concatenated for fast gathering.

    Attributes
    ----------
    signal : ndarray (n_inputs, total_samples)
    targets : ndarray (total_samples,)
        Binary labels (classifier) or expert scores (regressor).
    labels : ndarray of bool (total_samples,)
        Binary labels, used to decide which positions are positive.
    offsets : ndarray (n_recordings + 1,)
        Recording boundaries inside the concatenated arrays.
    """

    signal: np.ndarray
    targets: np.ndarray
    labels: np.ndarray
    offsets: np.ndarray

    @classmethod
    def from_recordings(cls, recordings, inputs: str = "clean", target: str = "binary",
                        pipeline_config: PipelineConfig | None = None) -> "SequenceDataset":
        if not recordings:
            raise ParameterError("no recordings given")
        if target not in ("binary", "scores"):
            raise ParameterError(f"target must be 'binary' or 'scores', got {target!r}")
        signals = [prepare_inputs(r, inputs, pipeline_config) for r in recordings]
        return cls.from_arrays(signals, [getattr(r, target) for r in recordings], [r.binary for r in recordings])

    @classmethod
    def from_arrays(cls, signals, targets, labels=None) -> "SequenceDataset":
        signals = [np.atleast_2d(np.asarray(s, dtype=np.float32)) for s in signals]
        labels = targets if labels is None else labels
        offsets = np.concatenate([[0], np.cumsum([s.shape[1] for s in signals])]).astype(np.int64)
        return cls(
            signal=np.concatenate(signals, axis=1),
            targets=np.concatenate([np.asarray(t, dtype=np.float32) for t in targets]),
            labels=np.concatenate([np.asarray(b, dtype=bool) for b in labels]),
            offsets=offsets,
        )

    @property
    def n_inputs(self) -> int:
        return self.signal.shape[0]

    @property
    def n_recordings(self) -> int:
        return len(self.offsets) - 1

    def recording(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return self.signal[:, lo:hi], self.targets[lo:hi], self.labels[lo:hi]

    def valid_ends(self, span: int) -> np.ndarray:
        """Global indices that can end a sequence spanning ``span`` samples of one recording."""
        parts = [np.arange(lo + span - 1, hi) for lo, hi in zip(self.offsets[:-1], self.offsets[1:])]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    def gather(self, ends: np.ndarray, window: int, dilation: int, seq_len: int) -> np.ndarray:
        """Sequences ending at ``ends``: shape ``(B, seq_len, n_inputs, window)``."""
        ends = np.asarray(ends, dtype=np.int64)
        back = dilation * np.arange(seq_len - 1, -1, -1)
        starts = ends[:, None] - back[None, :] - (window - 1)
        idx = starts[:, :, None] + np.arange(window)[None, None, :]
        return np.ascontiguousarray(np.moveaxis(self.signal[:, idx], 0, 2))


def oversample_batches(dataset: SequenceDataset, batch_size: int, seed=None, *, window: int, dilation: int,
                       seq_len: int, balanced: bool = True, positive_fraction: float = 0.5):
    """Endless stream of ``(X, y, positive)`` training batches.

    Each item is a sequence of ``seq_len`` windows whose ends are ``dilation``
    samples apart; ``y`` is the target at the last window's end. With
    ``balanced=True`` each item is positive with probability
    ``positive_fraction``; otherwise end positions are uniform.
    """
    batch_size = check_positive_int(batch_size, "batch_size")
    rng = check_random_state(seed)
    span = window + dilation * (seq_len - 1)
    ends = dataset.valid_ends(span)
    if ends.size == 0:
        raise ParameterError(f"no recording is long enough for a {span}-sample sequence")
    is_pos = dataset.labels[ends]
    positives, negatives = ends[is_pos], ends[~is_pos]
    if balanced and (positives.size == 0 or negatives.size == 0):
        raise ParameterError("oversampling needs both positive and negative positions")

    while True:
        if balanced:
            want_pos = rng.random(batch_size) < positive_fraction
            chosen = np.where(
                want_pos,
                positives[rng.integers(0, positives.size, batch_size)],
                negatives[rng.integers(0, negatives.size, batch_size)],
            )
        else:
            chosen = ends[rng.integers(0, ends.size, batch_size)]
        X = dataset.gather(chosen, window, dilation, seq_len)
        yield X, dataset.targets[chosen], dataset.labels[chosen]
