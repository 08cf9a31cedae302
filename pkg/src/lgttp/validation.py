"""Input validation helpers used across the library.

All array-accepting entry points funnel through these so error messages and
dtype handling stay uniform: inputs are coerced to float64, checked finite,
and returned as fresh arrays the caller may treat as read-only.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .errors import InvalidInputError


def as_float_matrix(data: Any, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array with finite entries."""
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return np.array(arr, copy=True)


def as_float_vector(data: Any, name: str = "vector", *, allow_empty: bool = False) -> np.ndarray:
    """Coerce to a 1-D float64 array with finite entries."""
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} is not numeric: {exc}") from exc
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise InvalidInputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return np.array(arr, copy=True)


def as_int_vector(data: Any, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D int64 array, rejecting fractional values."""
    arr = np.asarray(data)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-D sequence")
    if not np.issubdtype(arr.dtype, np.number):
        raise InvalidInputError(f"{name} is not numeric")
    if not np.all(np.isfinite(arr.astype(np.float64))):
        raise InvalidInputError(f"{name} contains non-finite values")
    rounded = np.rint(arr.astype(np.float64))
    if not np.all(rounded == arr.astype(np.float64)):
        raise InvalidInputError(f"{name} must contain integers")
    return rounded.astype(np.int64)


def check_positive_int(value: Any, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise InvalidInputError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise InvalidInputError(f"{name} must be >= 1, got {value}")
    return int(value)


def check_non_negative_int(value: Any, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise InvalidInputError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise InvalidInputError(f"{name} must be >= 0, got {value}")
    return int(value)


def check_finite_float(value: Any, name: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name} must be a real number, got {value!r}") from exc
    if not np.isfinite(out):
        raise InvalidInputError(f"{name} must be finite, got {out}")
    return out


def check_open_unit_interval(value: Any, name: str) -> float:
    out = check_finite_float(value, name)
    if not 0.0 < out < 1.0:
        raise InvalidInputError(f"{name} must lie strictly between 0 and 1, got {out}")
    return out


def check_unit_interval(value: Any, name: str) -> float:
    out = check_finite_float(value, name)
    if not 0.0 <= out <= 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {out}")
    return out


def check_positive_float(value: Any, name: str) -> float:
    out = check_finite_float(value, name)
    if out <= 0.0:
        raise InvalidInputError(f"{name} must be > 0, got {out}")
    return out


def check_same_length(a: Sequence | np.ndarray, b: Sequence | np.ndarray, what: str) -> None:
    if len(a) != len(b):
        raise InvalidInputError(f"{what}: lengths differ ({len(a)} vs {len(b)})")


def readonly(arr: np.ndarray) -> np.ndarray:
    """Mark an array immutable in place and return it."""
    arr.setflags(write=False)
    return arr
