"""Input validation helpers used by the estimators and the module APIs."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ParameterError, ShapeError


def check_signal(x, *, name: str = "signal", dtype=np.float64, allow_empty: bool = False) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array.

    Raises
    ------
    ShapeError
        If ``x`` is not one-dimensional (a column vector is accepted and raveled).
    ParameterError
        If ``x`` contains NaN/inf, or is empty while ``allow_empty`` is False.
    """
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ParameterError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite values")
    return arr


def check_same_length(*arrays, names=None) -> None:
    lengths = [len(a) for a in arrays]
    if len(set(lengths)) > 1:
        label = ", ".join(names) if names else "arrays"
        raise ShapeError(f"{label} must have equal lengths, got {lengths}")


def check_positive_int(value, name: str, *, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if isinstance(value, numbers.Real) and float(value).is_integer():
            value = int(value)
        else:
            raise ParameterError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_fraction(value, name: str, *, closed_high: bool = True) -> float:
    value = float(value)
    ok = 0.0 <= value <= 1.0 if closed_high else 0.0 <= value < 1.0
    if not ok:
        bound = "[0, 1]" if closed_high else "[0, 1)"
        raise ParameterError(f"{name} must lie in {bound}, got {value}")
    return value


def check_random_state(seed) -> np.random.Generator:
    """Turn ``None``, an int, a seed sequence or a Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
