"""Input validation helpers shared across the public API."""

from __future__ import annotations

import os

import numpy as np


def check_series(s, *, min_length: int = 1, name: str = "s") -> np.ndarray:
    """Coerce ``s`` to a 1-D float64 array and reject malformed input.

    Parameters
    ----------
    s : array_like
        Uniformly sampled signal values.
    min_length : int
        Smallest admissible number of samples.
    name : str
        Argument name used in error messages.
    """
    arr = np.asarray(s, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_matrix(x, *, name: str = "X") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def worker_count(requested: int | None = None) -> int:
    """Resolve the worker cap: explicit argument, then DERIVKIT_THREADS, then CPU count."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("DERIVKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"DERIVKIT_THREADS must be an integer, got {env!r}") from exc
    return max(1, os.cpu_count() or 1)
