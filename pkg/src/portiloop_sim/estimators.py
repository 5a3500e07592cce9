"""scikit-learn style wrappers around the preprocessing pipeline and the detector network.

Signals are laid out time-first: ``X`` has shape ``(n_samples,)`` for a raw
single-channel stream, or ``(n_samples, n_inputs)`` once preprocessed, so
that per-sample labels ``y`` align with rows of ``X``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .evaluation.metrics import samplewise_prf
from .exceptions import ParameterError, ShapeError
from .nn.inference import score_signal
from .nn.network import Network, NetworkSpec
from .nn.train import TrainConfig, default_stride, train
from .signal.pipeline import PipelineConfig, PreprocessPipeline
from .synth.dataset import SequenceDataset

__all__ = ["SpindlePreprocessor", "SpindleDetector"]


def _as_signal(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    if X.ndim != 1:
        raise ShapeError(f"expected a 1-D raw signal, got shape {X.shape}")
    if X.size == 0:
        raise ShapeError("empty signal")
    if not np.all(np.isfinite(X)):
        raise ParameterError("signal contains NaN or infinite values")
    return X


class SpindlePreprocessor(TransformerMixin, BaseEstimator):
    """Stateless transformer: raw samples to ``(n_samples, n_inputs)`` filtered features.

    Each :meth:`transform` call starts from a fresh pipeline, so the output
    depends only on the input.

    Parameters
    ----------
    sample_rate : float
    mains_hz : float
        Notch centre, 50 or 60.
    inputs : {"clean", "clean+envelope"}
    """

    def __init__(self, sample_rate: float = 250.0, mains_hz: float = 60.0, inputs: str = "clean"):
        self.sample_rate = sample_rate
        self.mains_hz = mains_hz
        self.inputs = inputs

    def fit(self, X, y=None):
        _as_signal(X)
        if self.inputs not in ("clean", "clean+envelope"):
            raise ParameterError(f"inputs must be 'clean' or 'clean+envelope', got {self.inputs!r}")
        self.pipeline_config_ = PipelineConfig(sample_rate=self.sample_rate, mains_hz=self.mains_hz)
        self.n_features_in_ = 1
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "pipeline_config_")
        clean, env = PreprocessPipeline(self.pipeline_config_).process(_as_signal(X))
        out = clean[:, None] if self.inputs == "clean" else np.stack([clean, env], axis=1)
        return out.astype(np.float32)


class SpindleDetector(ClassifierMixin, BaseEstimator):
    """Per-sample spindle classifier backed by the recurrent detector network.

    ``fit`` takes a preprocessed stream ``(n_samples, n_inputs)`` and binary
    labels; the last ``validation_fraction`` of the stream is held out for
    early stopping. Scores are produced every ``stride`` samples and held
    until the next window end; samples before the first full window score 0.

    ``score`` returns the sample-wise f1, which is more informative than
    accuracy at a 5% positive rate.
    """

    def __init__(self, threshold: float = 0.5, inputs: str = "clean", rnn_hidden: int = 7,
                 cnn_channels: int = 31, lr: float = 5e-4, batch_size: int = 32, batches_per_epoch: int = 20,
                 max_epochs: int = 20, patience: int = 5, seq_len: int = 50, dropout: float = 0.5,
                 stride: int | None = None, validation_fraction: float = 0.2, random_state: int = 0):
        self.threshold = threshold
        self.inputs = inputs
        self.rnn_hidden = rnn_hidden
        self.cnn_channels = cnn_channels
        self.lr = lr
        self.batch_size = batch_size
        self.batches_per_epoch = batches_per_epoch
        self.max_epochs = max_epochs
        self.patience = patience
        self.seq_len = seq_len
        self.dropout = dropout
        self.stride = stride
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _features(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float32)
        if X.ndim == 1:
            X = X[:, None]
        n_in = 1 if self.inputs == "clean" else 2
        if X.ndim != 2 or X.shape[1] != n_in:
            raise ShapeError(f"expected (n_samples, {n_in}) preprocessed input, got shape {X.shape}")
        return X.T

    def fit(self, X, y):
        signal = self._features(X)
        y = np.asarray(y).astype(bool).ravel()
        if y.size != signal.shape[1]:
            raise ShapeError("X and y differ in length")
        if not 0 < self.validation_fraction < 1:
            raise ParameterError("validation_fraction must lie in (0, 1)")
        spec = NetworkSpec(inputs=self.inputs, rnn_hidden=self.rnn_hidden, cnn_channels=self.cnn_channels)
        cut = int(round(signal.shape[1] * (1 - self.validation_fraction)))
        train_set = SequenceDataset.from_arrays([signal[:, :cut]], [y[:cut]])
        val_set = SequenceDataset.from_arrays([signal[:, cut:]], [y[cut:]])
        config = TrainConfig(lr=self.lr, batch_size=self.batch_size, batches_per_epoch=self.batches_per_epoch,
                             max_epochs=self.max_epochs, patience=self.patience, seq_len=self.seq_len,
                             dropout=self.dropout, validation_stride=self.stride, seed=self.random_state)
        net = Network.initialize(spec, seed=self.random_state)
        self.network_, self.history_ = train(net, config, train_set, val_set)
        self.classes_ = np.array([False, True])
        self.n_features_in_ = signal.shape[0]
        return self

    def decision_scores(self, X) -> np.ndarray:
        """Held per-sample detection scores."""
        check_is_fitted(self, "network_")
        signal = self._features(X)
        stride = self.stride or default_stride(self.network_.spec.dilation_samples)
        scores, ends = score_signal(self.network_, signal, stride)
        held = np.zeros(signal.shape[1], dtype=np.float64)
        if ends.size:
            idx = np.searchsorted(ends, np.arange(signal.shape[1]), side="right") - 1
            valid = idx >= 0
            held[valid] = scores[idx[valid]]
        return held

    def predict_proba(self, X) -> np.ndarray:
        p = self.decision_scores(X)
        return np.stack([1 - p, p], axis=1)

    def predict(self, X) -> np.ndarray:
        return self.decision_scores(X) >= self.threshold

    def score(self, X, y, sample_weight=None) -> float:
        return samplewise_prf(self.predict(X), np.asarray(y).astype(bool)).f1
