"""Analytic stand-in for network training, for fast and deterministic search tests."""
from __future__ import annotations

import math

from .space import SearchSpace

__all__ = ["SurrogateObjective"]


class SurrogateObjective:
    """Smooth bi-objective: software cost falls with capacity, rises away from a good lr/batch.

    ``L_s = 0.1 + 0.5 exp(-L_h / 12000) + 0.08 (log10 lr + 2.7)^2
    + 0.01 log2(batch / 128)^2 + 0.02 (rnn_layers - 1)``, clipped to [0, 1].
    """

    def __init__(self, space: SearchSpace):
        self.space = space

    def __call__(self, H: dict) -> tuple[float, int]:
        lh = self.space.hardware_cost(H)
        if lh is None:
            raise ValueError(f"invalid architecture {H}")
        ls = 0.1 + 0.5 * math.exp(-lh / 12000.0)
        if "lr" in H:
            ls += 0.08 * (math.log10(H["lr"]) + 2.7) ** 2
        if "batch_size" in H:
            ls += 0.01 * math.log2(H["batch_size"] / 128.0) ** 2
        if "rnn_layers" in H:
            ls += 0.02 * (H["rnn_layers"] - 1)
        return min(1.0, max(0.0, ls)), int(lh)
