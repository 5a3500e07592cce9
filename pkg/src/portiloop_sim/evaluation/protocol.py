"""Repeated subject-shuffle evaluation: train several models, keep the best on validation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn.network import Network, NetworkSpec
from ..nn.train import TrainConfig, train, validation_f1
from ..synth.dataset import SequenceDataset, split_subjects

__all__ = ["ProtocolResult", "protocol_evaluate"]


@dataclass
class ProtocolResult:
    test_f1: list = field(default_factory=list)
    validation_f1: list = field(default_factory=list)
    selected_model: list = field(default_factory=list)
    histories: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.test_f1))

    @property
    def std(self) -> float:
        """Sample standard deviation (ddof=1); 0 for a single shuffle."""
        return float(np.std(self.test_f1, ddof=1)) if len(self.test_f1) > 1 else 0.0

    def summary(self) -> str:
        return f"{self.mean:.3f} ({self.std:.3f})"

    def to_dict(self) -> dict:
        return {"test_f1": self.test_f1, "validation_f1": self.validation_f1,
                "selected_model": self.selected_model, "mean": self.mean, "std": self.std}


def protocol_evaluate(recordings, spec: NetworkSpec, config: TrainConfig, seed: int = 0, n_shuffles: int = 10,
                      n_models: int = 3, threshold: float = 0.5, pipeline_config=None,
                      callback=None) -> ProtocolResult:
    """Shuffle subjects ``n_shuffles`` times; per shuffle train ``n_models`` networks.

    Each shuffle splits subjects into train/validation/test, trains
    ``n_models`` differently seeded networks, keeps the one with the best
    validation f1 and records its pooled sample-wise test f1.
    """
    target = "binary" if spec.mode == "classifier" else "scores"
    cache = {}

    def dataset(recs):
        key = tuple(r.subject_id for r in recs)
        if key not in cache:
            cache[key] = SequenceDataset.from_recordings(recs, spec.inputs, target, pipeline_config)
        return cache[key]

    result = ProtocolResult()
    for shuffle in range(n_shuffles):
        train_recs, val_recs, test_recs = split_subjects(recordings, seed=[seed, shuffle])
        train_set, val_set, test_set = dataset(train_recs), dataset(val_recs), dataset(test_recs)
        best_net, best_val, best_idx, histories = None, -np.inf, -1, []
        for m in range(n_models):
            model_seed = int(np.random.default_rng([seed, shuffle, m]).integers(2**31))
            net = Network.initialize(spec, seed=model_seed)
            cfg = TrainConfig.from_dict({**config.to_dict(), "seed": model_seed})
            trained, history = train(net, cfg, train_set, val_set)
            histories.append(history)
            if history.best_val_f1 > best_val:
                best_net, best_val, best_idx = trained, history.best_val_f1, m
        test = validation_f1(best_net, test_set, config.validation_stride,
                             threshold if spec.mode == "classifier" else 0.2)
        result.test_f1.append(float(test))
        result.validation_f1.append(float(best_val))
        result.selected_model.append(best_idx)
        result.histories.append(histories)
        if callback is not None:
            callback(shuffle, result)
    return result
