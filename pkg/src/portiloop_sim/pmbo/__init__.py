"""Parallel model-based hyperparameter search on a software/hardware cost trade-off."""
from .meta import MetaNetwork, train_meta
from .pareto import (
    Experiment,
    domination_counts,
    dominates,
    efficiency,
    efficiency_batch,
    efficiency_terms,
    hypervolume,
    pareto_front,
)
from .search import SamplerConfig, SearchResult, random_search, resolve_workers, run_search, sample_candidates
from .space import Dimension, SearchSpace, default_space
from .surrogate import SurrogateObjective

__all__ = [
    "Dimension",
    "Experiment",
    "MetaNetwork",
    "SamplerConfig",
    "SearchResult",
    "SearchSpace",
    "SurrogateObjective",
    "default_space",
    "domination_counts",
    "dominates",
    "efficiency",
    "efficiency_batch",
    "efficiency_terms",
    "hypervolume",
    "pareto_front",
    "random_search",
    "resolve_workers",
    "run_search",
    "sample_candidates",
    "train_meta",
]
