"""Producer/consumer model-based search over the hyperparameter space.

One producer proposes hyperparameter sets into a bounded FIFO; ``n``
worker threads pop proposals, evaluate them and report back. The producer
owns the meta dataset: after every completion it retrains the meta network
and proposes again. Results are consumed in submission order, so a seeded
run gives the same experiments regardless of how threads are scheduled.
"""
from __future__ import annotations

import json
import os
import queue
import threading
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .._validation import check_random_state
from ..exceptions import ParameterError, SearchExhaustedError
from .meta import train_meta
from .pareto import Experiment, efficiency_batch, pareto_front
from .space import SearchSpace

__all__ = ["SamplerConfig", "SearchResult", "sample_candidates", "run_search", "random_search", "resolve_workers"]

THREADS_ENV = "PORTILOOP_SIM_THREADS"


@dataclass(frozen=True)
class SamplerConfig:
    """Proposal settings.

    ``noise1`` is the fraction of the ``m`` candidates drawn uniformly over
    the whole space (the rest are Gaussian around the last result);
    ``noise2`` is the probability of returning a random candidate instead
    of the most efficient one.
    """

    m: int = 200
    noise1: float = 0.25
    noise2: float = 0.1
    hardware_low: float = 1000.0
    hardware_high: float = 80000.0
    scale: float = 0.1
    n_bins: int = 10
    max_resamples: int = 1000
    meta_hidden: int = 200
    meta_lr: float = 0.05
    meta_weight_decay: float = 0.01
    meta_epochs: int = 200

    def __post_init__(self):
        if not (0 <= self.noise1 <= 1 and 0 <= self.noise2 <= 1):
            raise ParameterError("noise fractions must lie in [0, 1]")
        if not self.hardware_low < self.hardware_high:
            raise ParameterError("hardware range must satisfy low < high")
        if self.m < 1 or self.n_bins < 1 or self.max_resamples < 1:
            raise ParameterError("m, n_bins and max_resamples must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SamplerConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ParameterError(f"unknown SamplerConfig field(s): {sorted(unknown)}")
        return cls(**d)


def _valid(space: SearchSpace, H: dict, cfg: SamplerConfig, tested: set):
    if space.key(H) in tested:
        return None
    cost = space.hardware_cost(H)
    if cost is None or not cfg.hardware_low <= cost <= cfg.hardware_high:
        return None
    return cost


def _draw_valid(space, draw, cfg: SamplerConfig, tested: set, rng):
    """Keep drawing until a valid, untested point appears or the resample cap is hit."""
    for _ in range(cfg.max_resamples):
        H = draw(rng)
        cost = _valid(space, H, cfg, tested)
        if cost is not None:
            return H, cost
    raise SearchExhaustedError(f"no valid candidate in {cfg.max_resamples} consecutive draws")


def sample_uniform_valid(space: SearchSpace, cfg: SamplerConfig, tested: set, rng) -> dict:
    return _draw_valid(space, space.sample_uniform, cfg, tested, rng)[0]


def sample_candidates(experiments, last_result: Experiment, space: SearchSpace, cfg: SamplerConfig, rng,
                      meta=None, tested: set | None = None, return_details: bool = False):
    """Propose one hyperparameter set.

    Draws ``m`` valid candidates, a ``noise1`` fraction uniformly and the rest
    around ``last_result.H``; invalid ones (already tested, invalid
    architecture, hardware cost out of range) are discarded and redrawn.
    The candidate with the highest efficiency under the meta network's
    predicted software cost is returned (first one on ties), except with
    probability ``noise2`` when a uniformly random candidate is returned.
    """
    rng = check_random_state(rng)
    tested = {space.key(e.H) for e in experiments} if tested is None else tested
    n_uniform = int(round(cfg.noise1 * cfg.m))
    cands, costs = [], []
    for i in range(cfg.m):
        if i < n_uniform:
            draw = space.sample_uniform
        else:
            def draw(r, c=last_result.H):
                return space.perturb(c, cfg.scale, r)
        H, cost = _draw_valid(space, draw, cfg, tested, rng)
        cands.append(H)
        costs.append(cost)
    if meta is None:
        X = np.array([space.encode(e.H) for e in experiments])
        meta = train_meta(X, [e.L_s for e in experiments], cfg.meta_hidden, cfg.meta_lr,
                          cfg.meta_weight_decay, cfg.meta_epochs, seed=rng)
    predicted = meta.predict(np.array([space.encode(H) for H in cands]))
    eta = efficiency_batch(predicted, costs, experiments, cfg.hardware_low, cfg.hardware_high, cfg.n_bins)
    if rng.random() < cfg.noise2:
        idx = int(rng.integers(len(cands)))
    else:
        idx = int(np.argmax(eta))
    if return_details:
        return cands[idx], {"index": idx, "eta": eta, "predicted": predicted, "candidates": cands}
    return cands[idx]


@dataclass
class SearchResult:
    experiments: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def front(self) -> list:
        return pareto_front(self.experiments)


def resolve_workers(n_workers: int) -> int:
    """Cap ``n_workers`` by the ``PORTILOOP_SIM_THREADS`` environment variable, if set."""
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            cap_n = int(cap)
        except ValueError as exc:
            raise ParameterError(f"{THREADS_ENV} must be an integer, got {cap!r}") from exc
        if cap_n >= 1:
            n_workers = min(n_workers, cap_n)
    return n_workers


def _read_log(path: Path, space: SearchSpace) -> list:
    exps = []
    if not path.exists():
        return exps
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        exps.append(Experiment(rec["H"], float(rec["L_s"]), int(rec["L_h"]), float(rec.get("wall_time_s", 0.0))))
    return exps


def _worker(tasks: queue.Queue, results: queue.Queue, objective):
    while True:
        item = tasks.get()
        if item is None:
            return
        tid, H = item
        start = time.perf_counter()
        try:
            out = objective(H)
            results.put((tid, H, out, None, time.perf_counter() - start))
        except Exception as exc:  # a failing trial must not kill the search
            results.put((tid, H, None, exc, time.perf_counter() - start))


def run_search(space: SearchSpace, objective, budget: int, n_workers: int = 1, cfg: SamplerConfig | None = None,
               seed=None, log_path=None, max_failures: int | None = None) -> SearchResult:
    """Run the search until ``budget`` experiments have completed successfully.

    Parameters
    ----------
    objective : callable
        ``objective(H) -> (L_s, L_h)`` or ``-> L_s`` (hardware cost then comes
        from the space). Exceptions mark the trial failed; failed trials are
        excluded and do not consume budget.
    log_path : path, optional
        Append-only JSONL log; existing records are loaded first and count
        toward the budget.
    max_failures : int, optional
        Abort with :class:`SearchExhaustedError` after this many failures
        (default ``10 * budget``).
    """
    cfg = cfg or SamplerConfig()
    if budget < 1 or n_workers < 1:
        raise ParameterError("budget and n_workers must be positive")
    n_workers = resolve_workers(n_workers)
    rng = check_random_state(seed)
    max_failures = 10 * budget if max_failures is None else max_failures
    log_path = Path(log_path) if log_path is not None else None
    result = SearchResult(_read_log(log_path, space) if log_path else [])
    tested = {space.key(e.H) for e in result.experiments}
    last_ok = result.experiments[-1] if result.experiments else None
    if len(result.experiments) >= budget:
        return result

    tasks: queue.Queue = queue.Queue(maxsize=n_workers)
    results: queue.Queue = queue.Queue()
    threads = [threading.Thread(target=_worker, args=(tasks, results, objective), daemon=True)
               for _ in range(n_workers)]
    for t in threads:
        t.start()

    def propose() -> dict:
        if len(result.experiments) < 2:
            return sample_uniform_valid(space, cfg, tested, rng)
        return sample_candidates(result.experiments, last_ok, space, cfg, rng, tested=tested)

    in_flight: dict[int, dict] = {}
    done: dict[int, tuple] = {}
    next_tid = 0
    next_consume = 0
    try:
        while len(result.experiments) < budget:
            # queue holds n_workers, workers hold up to n_workers more
            while len(in_flight) < 2 * n_workers and len(result.experiments) + len(in_flight) < budget:
                H = propose()
                tested.add(space.key(H))
                in_flight[next_tid] = H
                tasks.put((next_tid, H))
                next_tid += 1
            while next_consume not in done:
                tid, H, out, err, wall = results.get()
                done[tid] = (H, out, err, wall)
            H, out, err, wall = done.pop(next_consume)
            in_flight.pop(next_consume)
            next_consume += 1
            if err is None:
                try:
                    if isinstance(out, tuple):
                        ls, lh = float(out[0]), int(out[1])
                    else:
                        ls, lh = float(out), int(space.hardware_cost(H))
                    if not np.isfinite(ls):
                        raise ValueError(f"non-finite software cost {ls}")
                except (TypeError, ValueError) as exc:
                    err = exc
            if err is not None:
                result.failures.append({"H": H, "error": f"{type(err).__name__}: {err}"})
                if len(result.failures) > max_failures:
                    raise SearchExhaustedError(f"{len(result.failures)} failed experiments")
                continue
            exp = Experiment(H, ls, lh, wall)
            result.experiments.append(exp)
            last_ok = exp
            if log_path is not None:
                with open(log_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(exp.to_dict(), sort_keys=True) + "\n")
    finally:
        # drop queued work, then stop every worker
        while True:
            try:
                tasks.get_nowait()
            except queue.Empty:
                break
        for _ in threads:
            tasks.put(None)
        for t in threads:
            t.join()
    return result


def random_search(space: SearchSpace, objective, budget: int, cfg: SamplerConfig | None = None,
                  seed=None) -> SearchResult:
    """Baseline: ``budget`` uniformly drawn valid points, evaluated sequentially."""
    cfg = cfg or SamplerConfig()
    rng = check_random_state(seed)
    tested: set = set()
    result = SearchResult()
    while len(result.experiments) < budget:
        H = sample_uniform_valid(space, cfg, tested, rng)
        tested.add(space.key(H))
        out = objective(H)
        ls, lh = (float(out[0]), int(out[1])) if isinstance(out, tuple) else (float(out), space.hardware_cost(H))
        result.experiments.append(Experiment(H, ls, lh))
    return result
