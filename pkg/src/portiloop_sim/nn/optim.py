"""AdamW with decoupled weight decay."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ParameterError

__all__ = ["AdamWState", "AdamW"]


@dataclass
class AdamWState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


class AdamW:
    """Adam moments with weight decay applied directly to the weights.

    One update with bias-corrected moments ``m_hat``, ``v_hat``::

        w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * w)
    """

    def __init__(self, params: dict, lr: float = 5e-4, weight_decay: float = 0.01,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0 or weight_decay < 0:
            raise ParameterError("lr must be positive and weight_decay non-negative")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ParameterError("betas must lie in [0, 1)")
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.state = AdamWState(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
            beta1=beta1, beta2=beta2, eps=eps,
        )

    def step(self, grads: dict) -> None:
        st = self.state
        st.step += 1
        b1, b2 = st.beta1, st.beta2
        c1 = 1.0 - b1 ** st.step
        c2 = 1.0 - b2 ** st.step
        for k, w in self.params.items():
            g = grads[k]
            m, v = st.m[k], st.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            update = (m / c1) / (np.sqrt(v / c2) + st.eps) + self.weight_decay * w
            w -= (self.lr * update).astype(w.dtype, copy=False)
