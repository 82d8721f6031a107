"""Shared input-validation helpers (sklearn ``check_*`` style)."""

from __future__ import annotations

import numpy as np


def as_float_array(values, name: str = "array") -> np.ndarray:
    """Coerce to a float64 ndarray and reject non-finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_points(points, name: str = "points") -> np.ndarray:
    """Validate an (N, 3) array of finite 3D coordinates."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_nonempty_points(points, name: str = "points") -> np.ndarray:
    arr = check_points(points, name)
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must contain at least one point")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a non-negative finite number, got {value}")
    return value


def check_in_unit_interval(value: float, name: str, *, open_low: bool = False) -> float:
    """Validate a scalar in [0, 1], or (0, 1] when ``open_low`` is set."""
    value = float(value)
    low_ok = value > 0 if open_low else value >= 0
    if not (np.isfinite(value) and low_ok and value <= 1):
        bounds = "(0, 1]" if open_low else "[0, 1]"
        raise ValueError(f"{name} must lie in {bounds}, got {value}")
    return value


def check_edges(edges, n_vertices: int, name: str = "edges") -> np.ndarray:
    """Validate an (E, 2) integer array of unordered vertex pairs.

    Returns the edges canonicalized to i < j and lexicographically sorted.
    Duplicate edges and self-loops are rejected.
    """
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (E, 2), got {arr.shape}")
    if arr.min() < 0 or arr.max() >= n_vertices:
        raise ValueError(f"{name} reference vertices outside [0, {n_vertices})")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError(f"{name} contain self-loops")
    arr = np.sort(arr, axis=1)
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    if arr.shape[0] > 1 and np.any(np.all(arr[1:] == arr[:-1], axis=1)):
        raise ValueError(f"{name} contain duplicate pairs")
    return arr
