"""Input validation helpers shared by the estimators and solvers."""
import numpy as np

from .exceptions import InvalidInputError


def check_field(values, n, name="field"):
    """Return ``values`` as a float array whose last axis has length ``n``."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != n:
        raise InvalidInputError(
            f"{name} must have trailing length {n}, got shape {arr.shape}")
    return arr


def check_in_interval(value, name, low, high, low_open=True, high_open=False):
    value = float(value)
    lo_ok = value > low if low_open else value >= low
    hi_ok = value < high if high_open else value <= high
    if not (lo_ok and hi_ok):
        lb = "(" if low_open else "["
        rb = ")" if high_open else "]"
        raise InvalidInputError(f"{name}={value} outside {lb}{low}, {high}{rb}")
    return value


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        raise InvalidInputError(
            f"{name} must be {'positive' if strict else 'non-negative'}, got {value}")
    return value


def check_finite(arr, what, exc_type=None):
    """Raise ``exc_type`` (default InvalidInputError) if ``arr`` has non-finite entries."""
    if not np.all(np.isfinite(arr)):
        raise (exc_type or InvalidInputError)(f"non-finite values in {what}")
    return arr


def check_ensemble_size(n):
    n = int(n)
    if n < 2:
        raise InvalidInputError(f"ensemble size must be >= 2, got {n}")
    return n
