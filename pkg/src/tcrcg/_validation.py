"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np


class ShapeError(ValueError):
    """Raised when tensor operands have incompatible dimensions."""


def check_tensor3(a, name="tensor", allow_empty=False):
    """Return ``a`` as a finite float64 array of shape (n1, n2, n3).

    Two-dimensional input is promoted to a single frontal slice.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be a third-order tensor, got ndim={arr.ndim}")
    if not allow_empty and min(arr.shape) < 1:
        raise ShapeError(f"{name} has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise ShapeError(
            f"shape mismatch: {names[0]} is {a.shape}, {names[1]} is {b.shape}"
        )


def check_positive_int(value, name, minimum=1):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
