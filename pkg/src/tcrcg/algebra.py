"""Tensor-tensor product algebra induced by the tube DCT.

All transform-domain work happens on the stack of frontal slices of the
transformed tensor, held as an array of shape ``(n3, n1, n2)`` so that
``numpy.matmul`` and ``numpy.linalg`` broadcast over slices. The
block-diagonal matrix is never formed.
"""

import numpy as np
from scipy import fft

from ._validation import ShapeError, check_positive_int, check_same_shape, check_tensor3

__all__ = [
    "to_slices",
    "from_slices",
    "tprod",
    "ttranspose",
    "identity",
    "inner",
    "fro_norm",
    "inf_norm",
    "spectral_norm",
    "condition_number",
]


def _fwd(a):
    return np.moveaxis(fft.dct(a, type=2, axis=2, norm="ortho"), 2, 0)


def _inv(slices):
    return fft.idct(np.moveaxis(slices, 0, 2), type=2, axis=2, norm="ortho")


def to_slices(a):
    """Frontal slices of the transformed tensor, shape ``(n3, n1, n2)``."""
    return np.ascontiguousarray(_fwd(check_tensor3(a)))


def from_slices(slices):
    """Inverse of :func:`to_slices`."""
    slices = np.asarray(slices, dtype=np.float64)
    if slices.ndim != 3:
        raise ShapeError(f"slice stack must have ndim 3, got {slices.ndim}")
    return _inv(slices)


def tprod(a, b):
    """t-product ``a * b`` of an n1 x n2 x n3 and an n2 x n4 x n3 tensor."""
    a = check_tensor3(a, "a")
    b = check_tensor3(b, "b")
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ShapeError(f"cannot t-multiply {a.shape} by {b.shape}")
    return _inv(_fwd(a) @ _fwd(b))


def ttranspose(a):
    """Tensor transpose, n1 x n2 x n3 -> n2 x n1 x n3.

    The tube transform acts on the third axis only, so transposing every
    transformed slice is the same as transposing every spatial slice.
    """
    return np.ascontiguousarray(check_tensor3(a).transpose(1, 0, 2))


def identity(n, n3):
    """Identity tensor whose transformed slices are all ``I_n``."""
    n = check_positive_int(n, "n")
    n3 = check_positive_int(n3, "n3")
    return _inv(np.broadcast_to(np.eye(n), (n3, n, n)).copy())


def inner(a, b):
    a = check_tensor3(a, "a")
    b = check_tensor3(b, "b")
    check_same_shape(a, b)
    return float(np.vdot(a, b))


def fro_norm(a):
    return float(np.linalg.norm(check_tensor3(a).ravel()))


def inf_norm(a):
    return float(np.max(np.abs(check_tensor3(a))))


def _singular_values(a):
    return np.linalg.svd(_fwd(check_tensor3(a)), compute_uv=False)


def spectral_norm(a):
    """Largest singular value over all transformed slices.

    This is also the operator norm of the map ``x -> a * x``.
    """
    return float(np.max(_singular_values(a)))


def condition_number(a, tol=None):
    """Ratio of the largest to the smallest nonzero pooled singular value.

    A singular value counts as nonzero when it exceeds ``tol * sigma_max``;
    by default ``tol = max(n1, n2) * eps``.
    """
    a = check_tensor3(a)
    sv = _singular_values(a).ravel()
    smax = sv.max()
    if smax == 0.0:
        raise ValueError("condition number of the zero tensor is undefined")
    if tol is None:
        tol = max(a.shape[0], a.shape[1]) * np.finfo(np.float64).eps
    nonzero = sv[sv > tol * smax]
    return float(smax / nonzero.min())
