"""Truncated-BPTT training with oversampled batches and running-average early stopping."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .._validation import check_random_state
from ..exceptions import ParameterError, TrainingError
from .inference import score_signal
from .layers import bce_with_logits, mse_loss
from .network import Network
from .optim import AdamW

__all__ = ["TrainConfig", "TrainHistory", "train", "validation_f1", "default_stride"]


def default_stride(dilation: int, target: int = 5) -> int:
    """Divisor of ``dilation`` closest to ``target`` samples (ties go to the larger one)."""
    divisors = [d for d in range(1, dilation + 1) if dilation % d == 0]
    return min(divisors, key=lambda d: (abs(d - target), -d))


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    ``validation_stride`` defaults to the divisor of the network dilation
    closest to 5 samples (20 ms). ``validation_threshold`` defaults to 0.5 for
    classifiers and 0.2 (the lower label threshold) for regressors.
    ``max_seconds`` bounds wall time; the best snapshot so far is returned.
    """

    lr: float = 5e-4
    weight_decay: float = 0.01
    max_epochs: int = 150
    patience: int = 20
    es_factor: float = 0.1
    batches_per_epoch: int = 1000
    batch_size: int = 256
    dropout: float = 0.5
    seq_len: int = 50
    positive_fraction: float = 0.5
    validation_stride: int | None = None
    validation_threshold: float | None = None
    max_seconds: float | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("max_epochs", "patience", "batches_per_epoch", "batch_size", "seq_len"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")
        if self.lr <= 0 or self.weight_decay < 0:
            raise ParameterError("lr must be positive and weight_decay non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ParameterError(f"dropout must lie in [0, 1), got {self.dropout}")
        if not 0.0 < self.es_factor <= 1.0:
            raise ParameterError(f"es_factor must lie in (0, 1], got {self.es_factor}")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ParameterError("positive_fraction must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ParameterError(f"unknown TrainConfig field(s): {sorted(unknown)}")
        return cls(**d)


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_f1: list = field(default_factory=list)
    val_f1_avg: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float = float("nan")
    stopped_early: bool = False
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def validation_f1(net: Network, dataset, stride: int | None = None, threshold: float = 0.5) -> float:
    """Pooled sample-wise f1 of thresholded streaming scores over every recording."""
    from ..evaluation.metrics import samplewise_prf

    stride = stride or default_stride(net.spec.dilation_samples)
    preds, labels = [], []
    for i in range(dataset.n_recordings):
        signal, _, lab = dataset.recording(i)
        scores, ends = score_signal(net, signal, stride)
        preds.append(scores >= threshold)
        labels.append(lab[ends])
    return samplewise_prf(np.concatenate(preds), np.concatenate(labels)).f1


def train(net: Network, config: TrainConfig, train_set, validation_set, callback=None):
    """Train ``net`` in place and return ``(best_network, history)``.

    Classifiers see class-balanced batches and BCE on the last step's logit;
    regressors see uniformly drawn batches and MSE against the expert score.
    Each item is a sequence of ``seq_len`` windows spaced by the network's
    dilation, so the hidden state is trained over exactly the horizon it sees
    at inference.

    Raises
    ------
    TrainingError
        When the loss or gradients become non-finite.
    """
    from ..synth.dataset import oversample_batches

    spec = net.spec
    if train_set.n_inputs != spec.n_inputs or validation_set.n_inputs != spec.n_inputs:
        raise ParameterError("dataset inputs do not match the network")
    classifier = spec.mode == "classifier"
    threshold = config.validation_threshold
    if threshold is None:
        threshold = 0.5 if classifier else 0.2
    rng = check_random_state([config.seed, 1])
    batches = oversample_batches(
        train_set, config.batch_size, [config.seed, 2], window=spec.window_samples,
        dilation=spec.dilation_samples, seq_len=config.seq_len, balanced=classifier,
        positive_fraction=config.positive_fraction,
    )
    opt = AdamW(net.params, lr=config.lr, weight_decay=config.weight_decay)
    history = TrainHistory()
    best = net.copy()
    best_avg = -np.inf
    since_best = 0
    start = time.perf_counter()

    for epoch in range(config.max_epochs):
        losses = []
        for b in range(config.batches_per_epoch):
            X, y, _ = next(batches)
            logits, _, cache = net.forward(X, training=True, dropout=config.dropout, rng=rng, keep_cache=True)
            if classifier:
                loss, dlogits = bce_with_logits(logits, y)
            else:
                loss, dlogits = mse_loss(logits, y)
            grads, _ = net.backward(dlogits.astype(net.dtype), cache)
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                norm = float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))
                raise TrainingError(
                    f"non-finite loss or gradient at epoch {epoch}, batch {b}",
                    {"epoch": epoch, "batch": b, "loss": loss, "grad_norm": norm,
                     "recent_losses": losses[-10:]},
                )
            opt.step(grads)
            losses.append(loss)

        f1 = validation_f1(net, validation_set, config.validation_stride, threshold)
        avg = f1 if not history.val_f1_avg else (
            (1 - config.es_factor) * history.val_f1_avg[-1] + config.es_factor * f1)
        history.train_loss.append(float(np.mean(losses)))
        history.val_f1.append(float(f1))
        history.val_f1_avg.append(float(avg))
        if history.best_epoch < 0 or f1 > history.best_val_f1:
            history.best_epoch, history.best_val_f1 = epoch, float(f1)
            best = net.copy()
        if avg > best_avg:
            best_avg, since_best = avg, 0
        else:
            since_best += 1
        if callback is not None:
            callback(epoch, history)
        if since_best >= config.patience:
            history.stopped_early = True
            break
        if config.max_seconds is not None and time.perf_counter() - start > config.max_seconds:
            break

    history.wall_time_s = time.perf_counter() - start
    return best, history
