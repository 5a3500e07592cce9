"""Pareto dominance, the heuristic efficiency score and hypervolume."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ContractError

__all__ = [
    "Experiment",
    "dominates",
    "domination_counts",
    "efficiency_terms",
    "efficiency",
    "efficiency_batch",
    "pareto_front",
    "hypervolume",
    "LS_FLOOR",
]

# predicted software costs are clamped to this before dividing
LS_FLOOR = 1e-6


@dataclass(frozen=True)
class Experiment:
    """A completed trial: hyperparameters ``H``, software cost ``L_s``, hardware cost ``L_h``."""

    H: dict = field(hash=False)
    L_s: float = 0.0
    L_h: int = 0
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {"H": self.H, "L_s": self.L_s, "L_h": self.L_h, "wall_time_s": self.wall_time_s}


def _costs(e) -> tuple[float, float]:
    if isinstance(e, Experiment):
        return e.L_s, e.L_h
    ls, lh = e
    return float(ls), float(lh)


def dominates(a, b) -> bool:
    """True iff ``a`` is strictly better than ``b`` in both costs."""
    (sa, ha), (sb, hb) = _costs(a), _costs(b)
    return sa < sb and ha < hb


def _cost_arrays(experiments) -> tuple[np.ndarray, np.ndarray]:
    c = np.array([_costs(e) for e in experiments], dtype=np.float64).reshape(-1, 2)
    return c[:, 0], c[:, 1]


def domination_counts(candidate, experiments) -> tuple[int, int]:
    """``(D, d)``: members dominated by ``candidate`` and members dominating it."""
    if len(experiments) == 0:
        raise ContractError("domination counts need a non-empty meta dataset")
    s, h = _costs(candidate)
    ls, lh = _cost_arrays(experiments)
    D = int(np.count_nonzero((s < ls) & (h < lh)))
    d = int(np.count_nonzero((ls < s) & (lh < h)))
    return D, d


def efficiency_terms(L_s_hat: float, L_h: float, experiments, low: float = 1000.0, high: float = 80000.0,
                     n_bins: int = 10) -> dict:
    """The four terms of ``eta = a + b + s - h``.

    ``a = 1 - d/|E|`` rewards not being dominated, ``b = D/|E|`` rewards
    dominating many, ``s = min L_s / L_s_hat`` rewards beating the best
    software cost, and ``h`` is the fraction of ``E`` in the candidate's
    hardware-cost bin times the number of bins (1 for a uniform spread).
    """
    n = len(experiments)
    L_s_hat = max(float(L_s_hat), LS_FLOOR)
    D, d = domination_counts((L_s_hat, L_h), experiments)
    ls, lh = _cost_arrays(experiments)
    edges = np.linspace(low, high, n_bins + 1)
    bins = np.clip(np.searchsorted(edges, lh, side="right") - 1, 0, n_bins - 1)
    own = int(np.clip(np.searchsorted(edges, L_h, side="right") - 1, 0, n_bins - 1))
    return {
        "a": 1.0 - d / n,
        "b": D / n,
        "s": float(ls.min()) / L_s_hat,
        "h": np.count_nonzero(bins == own) / n * n_bins,
    }


def efficiency(L_s_hat: float, L_h: float, experiments, low: float = 1000.0, high: float = 80000.0,
               n_bins: int = 10) -> float:
    t = efficiency_terms(L_s_hat, L_h, experiments, low, high, n_bins)
    return t["a"] + t["b"] + t["s"] - t["h"]


def efficiency_batch(L_s_hat, L_h, experiments, low: float = 1000.0, high: float = 80000.0,
                     n_bins: int = 10) -> np.ndarray:
    """Vectorized :func:`efficiency` over candidate arrays."""
    if len(experiments) == 0:
        raise ContractError("efficiency needs a non-empty meta dataset")
    s = np.maximum(np.asarray(L_s_hat, dtype=np.float64), LS_FLOOR)[:, None]
    h = np.asarray(L_h, dtype=np.float64)[:, None]
    ls, lh = _cost_arrays(experiments)
    n = ls.size
    D = np.count_nonzero((s < ls) & (h < lh), axis=1)
    d = np.count_nonzero((ls < s) & (lh < h), axis=1)
    edges = np.linspace(low, high, n_bins + 1)
    bins = np.clip(np.searchsorted(edges, lh, side="right") - 1, 0, n_bins - 1)
    own = np.clip(np.searchsorted(edges, h[:, 0], side="right") - 1, 0, n_bins - 1)
    density = np.bincount(bins, minlength=n_bins)[own] / n * n_bins
    return (1.0 - d / n) + D / n + ls.min() / s[:, 0] - density


def pareto_front(experiments) -> list:
    """Members dominated by no other member, sorted by hardware cost."""
    exps = list(experiments)
    if not exps:
        return []
    ls, lh = _cost_arrays(exps)
    dominated = np.zeros(len(exps), dtype=bool)
    for i in range(len(exps)):
        dominated[i] = np.any((ls < ls[i]) & (lh < lh[i]))
    keep = [i for i in np.argsort(lh, kind="stable") if not dominated[i]]
    return [exps[i] for i in keep]


def hypervolume(experiments, low: float = 1000.0, high: float = 80000.0, ref=(1.0, 1.0)) -> float:
    """Area dominated by the set in ``(L_h scaled to [0, 1] over [low, high], L_s)`` up to ``ref``."""
    ls, lh = _cost_arrays(list(experiments))
    x = (lh - low) / (high - low)
    pts = sorted((float(a), float(b)) for a, b in zip(x, ls) if a < ref[0] and b < ref[1])
    area, best_y = 0.0, ref[1]
    for i, (xi, yi) in enumerate(pts):
        best_y = min(best_y, yi)
        x_next = pts[i + 1][0] if i + 1 < len(pts) else ref[0]
        area += (x_next - xi) * (ref[1] - best_y)
    return area
