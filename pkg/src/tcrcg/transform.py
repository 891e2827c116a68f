"""Orthonormal DCT along the tube (third) dimension of a tensor.

The forward transform is the DCT-II with orthonormal scaling and the inverse
is its transpose (DCT-III), so the pair is unitary and preserves Frobenius
norms. ``method="matrix"`` multiplies every tube by the explicit transform
matrix and exists as an independent check on the FFT-based path.
"""

import numpy as np
from scipy import fft

from ._validation import check_positive_int, check_tensor3

__all__ = ["dct_matrix", "dct3", "idct3"]


def dct_matrix(n):
    """Orthonormal DCT-II matrix ``C`` of order ``n`` with ``C @ C.T == I``.

    Row 0 is constant ``1/sqrt(n)``; row ``k`` column ``j`` (0-based) holds
    ``sqrt(2/n) * cos(pi * (2j + 1) * k / (2n))``.
    """
    n = check_positive_int(n, "n")
    k = np.arange(n)[:, np.newaxis]
    j = np.arange(n)[np.newaxis, :]
    c = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * j + 1) * k / (2 * n))
    c[0, :] = 1.0 / np.sqrt(n)
    return c


def _check_method(method):
    if method not in ("fast", "matrix"):
        raise ValueError(f"method must be 'fast' or 'matrix', got {method!r}")


def dct3(a, method="fast"):
    """Transform every tube ``a[i, j, :]`` by the orthonormal DCT-II."""
    _check_method(method)
    a = check_tensor3(a)
    if method == "matrix":
        # tube-wise C @ a[i, j, :]
        return np.einsum("kl,ijl->ijk", dct_matrix(a.shape[2]), a)
    return fft.dct(a, type=2, axis=2, norm="ortho")


def idct3(ahat, method="fast"):
    """Inverse of :func:`dct3`."""
    _check_method(method)
    ahat = check_tensor3(ahat)
    if method == "matrix":
        return np.einsum("lk,ijl->ijk", dct_matrix(ahat.shape[2]), ahat)
    return fft.idct(ahat, type=2, axis=2, norm="ortho")
