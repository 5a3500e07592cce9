"""Hyperparameter search space: sampling, perturbation, encoding and hardware cost."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..exceptions import ParameterError
from ..nn.network import NetworkSpec, count_parameters

__all__ = ["Dimension", "SearchSpace", "default_space"]

TRAINING_KEYS = ("lr", "batch_size")


@dataclass(frozen=True)
class Dimension:
    """One searchable hyperparameter; ``log`` dimensions are handled in log10 space."""

    name: str
    low: float
    high: float
    integer: bool = True
    log: bool = False

    def __post_init__(self):
        if not self.low < self.high:
            raise ParameterError(f"{self.name}: low must be below high")
        if self.log and self.low <= 0:
            raise ParameterError(f"{self.name}: log dimensions need a positive range")

    def _to_unit(self, v: float) -> float:
        if self.log:
            return (math.log10(v) - math.log10(self.low)) / (math.log10(self.high) - math.log10(self.low))
        return (v - self.low) / (self.high - self.low)

    def _from_unit(self, u: float):
        u = min(1.0, max(0.0, u))
        if self.log:
            v = 10 ** (math.log10(self.low) + u * (math.log10(self.high) - math.log10(self.low)))
        else:
            v = self.low + u * (self.high - self.low)
        if self.integer:
            return int(min(self.high, max(self.low, round(v))))
        return float(v)


@dataclass
class SearchSpace:
    """Box of hyperparameters layered over a base :class:`NetworkSpec`.

    A point ``H`` is a dict of dimension name to value. Names matching
    NetworkSpec fields change the architecture; ``lr`` and ``batch_size`` are
    training settings and do not affect the hardware cost.
    """

    dimensions: list
    base_spec: NetworkSpec = field(default_factory=NetworkSpec)
    _cost_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ParameterError("duplicate dimension names")
        spec_fields = set(self.base_spec.to_dict())
        for n in names:
            if n not in spec_fields and n not in TRAINING_KEYS:
                raise ParameterError(f"unknown search dimension {n!r}")

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dimensions]

    def from_unit(self, u) -> dict:
        return {d.name: d._from_unit(float(x)) for d, x in zip(self.dimensions, u)}

    def encode(self, H: dict) -> np.ndarray:
        """Min-max normalization of every dimension to [0, 1]."""
        return np.array([d._to_unit(H[d.name]) for d in self.dimensions], dtype=np.float64)

    def sample_uniform(self, rng) -> dict:
        return self.from_unit(rng.random(len(self.dimensions)))

    def perturb(self, center: dict, scale: float, rng) -> dict:
        """Gaussian step with std ``scale`` of each range; integers rounded, then clamped."""
        u = self.encode(center) + scale * rng.standard_normal(len(self.dimensions))
        return self.from_unit(u)

    def to_spec(self, H: dict) -> NetworkSpec:
        arch = {k: v for k, v in H.items() if k not in TRAINING_KEYS}
        try:
            return replace(self.base_spec, **arch)
        except TypeError as exc:
            raise ParameterError(f"bad architecture {arch}: {exc}") from exc

    def hardware_cost(self, H: dict) -> int | None:
        """Parameter count of ``H``'s network, or None if the architecture is invalid."""
        key = tuple(sorted((k, v) for k, v in H.items() if k not in TRAINING_KEYS))
        if key not in self._cost_cache:
            try:
                self._cost_cache[key] = count_parameters(self.to_spec(H))
            except ParameterError:
                self._cost_cache[key] = None
        return self._cost_cache[key]

    @staticmethod
    def key(H: dict) -> tuple:
        return tuple(sorted((k, round(v, 12) if isinstance(v, float) else v) for k, v in H.items()))


def default_space(base_spec: NetworkSpec | None = None) -> SearchSpace:
    """Architecture sizes plus learning rate and batch size."""
    return SearchSpace(
        [
            Dimension("cnn_layers", 1, 4),
            Dimension("cnn_channels", 2, 64),
            Dimension("conv_kernel", 3, 11),
            Dimension("rnn_layers", 1, 3),
            Dimension("rnn_hidden", 2, 32),
            Dimension("lr", 1e-4, 1e-2, integer=False, log=True),
            Dimension("batch_size", 32, 512, log=True),
        ],
        base_spec or NetworkSpec(),
    )
