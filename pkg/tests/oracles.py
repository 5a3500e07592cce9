"""Brute-force reference implementations shared by the unit and acceptance tests."""
from __future__ import annotations

import numpy as np


def policy_oracle(times, detected, refractory, stimulus):
    """Set-level reading of the policy over the whole timeline.

    A detection at ``t`` fires iff no detection happened in ``(t - refractory, t)`` (at least
    ``refractory`` after the previous one)
    and no earlier stimulus is still playing at ``t``.
    """
    det_times = [t for t, d in zip(times, detected) if d]
    fired = []
    for t in det_times:
        quiet = not any(t - refractory < u < t for u in det_times)
        idle = not any(f <= t < f + stimulus for f in fired)
        if quiet and idle:
            fired.append(t)
    return fired


def samplewise_oracle(pred, lab):
    tp = fp = fn = tn = 0
    for p, l in zip(pred, lab):
        if p and l:
            tp += 1
        elif p:
            fp += 1
        elif l:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def stimulation_oracle(times, spindles, lookback=2.0):
    """Enumerate every (stimulus, spindle) pair.

    Returns ``(tp, fp, fn, delays_ms)``. Stimulus ``j`` is a true positive when
    it lies inside some spindle and no stimulus that precedes it in
    ``(time, index)`` order lies inside the same spindle.
    """
    order = sorted(range(len(times)), key=lambda j: (times[j], j))
    rank = {j: r for r, j in enumerate(order)}
    tp_stim = set()
    hit = 0
    for onset, end in spindles:
        inside = [j for j in range(len(times)) if onset <= times[j] <= end]
        if inside:
            hit += 1
            tp_stim.add(min(inside, key=lambda j: rank[j]))
    delays = []
    for onset, end in spindles:
        best = None
        for j in order:
            t = times[j]
            if onset - lookback <= t <= end:
                if best is None or abs(t - onset) < abs(best - onset):
                    best = t
        delays.append(np.nan if best is None else 1000.0 * (best - onset))
    return hit, len(times) - len(tp_stim), len(spindles) - hit, np.array(delays)


def random_timeline(rng, horizon_ms=20000):
    """Spindles and stimuli on a millisecond grid; stimuli often sit on interval edges."""
    n_sp = int(rng.integers(0, 8))
    edges = np.sort(rng.choice(horizon_ms, size=2 * n_sp, replace=False))
    spindles = [(a / 1000.0, b / 1000.0) for a, b in edges.reshape(-1, 2)]
    n_st = int(rng.integers(0, 12))
    stim = []
    for _ in range(n_st):
        if spindles and rng.random() < 0.3:
            stim.append(spindles[int(rng.integers(len(spindles)))][int(rng.integers(2))])
        else:
            stim.append(int(rng.integers(horizon_ms)) / 1000.0)
    return stim, spindles


def dominates_oracle(a, b):
    return a[0] < b[0] and a[1] < b[1]


def counts_oracle(c, points):
    D = sum(dominates_oracle(c, p) for p in points)
    d = sum(dominates_oracle(p, c) for p in points)
    return D, d


def front_oracle(points):
    """Indices of non-dominated points by O(n^2) enumeration."""
    return [i for i, p in enumerate(points) if not any(dominates_oracle(q, p) for q in points)]


def efficiency_oracle(ls_hat, lh, points, low=1000.0, high=80000.0, n_bins=10):
    """Direct evaluation of ``a + b + s - h`` with an explicit bin search."""
    n = len(points)
    D, d = counts_oracle((ls_hat, lh), points)
    width = (high - low) / n_bins

    def bin_of(x):
        k = 0
        while k < n_bins - 1 and x >= low + (k + 1) * width:
            k += 1
        return k

    own = bin_of(lh)
    same = sum(bin_of(p[1]) == own for p in points)
    return (1 - d / n) + D / n + min(p[0] for p in points) / ls_hat - same / n * n_bins
