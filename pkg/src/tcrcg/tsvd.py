"""Tensor SVD under the DCT product, multi-rank, and multi-rank truncation."""

from dataclasses import dataclass
import numbers

import numpy as np

from ._validation import ShapeError, check_tensor3
from .algebra import _fwd, _inv

__all__ = [
    "DEFAULT_RANK_TOL",
    "MultiRank",
    "SkinnyTcSvd",
    "tcsvd",
    "truncate_h_r",
    "multi_rank_of",
]

DEFAULT_RANK_TOL = 1e-8


class MultiRank(tuple):
    """Per-slice ranks ``(r_1, ..., r_n3)`` of the transformed tensor."""

    def __new__(cls, ranks):
        if isinstance(ranks, numbers.Integral):
            ranks = (ranks,)
        values = []
        for r in ranks:
            if isinstance(r, (bool, np.bool_)) or not isinstance(r, numbers.Integral):
                raise TypeError(f"ranks must be integers, got {r!r}")
            if r < 0:
                raise ValueError(f"ranks must be non-negative, got {r}")
            values.append(int(r))
        return super().__new__(cls, values)

    @classmethod
    def uniform(cls, r, n3):
        return cls([r] * n3)

    @classmethod
    def parse(cls, text, n3=None):
        """Parse ``"2"`` or ``"29,5,1"``; a single value is broadcast to ``n3``."""
        parts = [int(p) for p in str(text).replace(" ", "").split(",") if p]
        if len(parts) == 1 and n3 is not None:
            return cls.uniform(parts[0], n3)
        return cls(parts)

    @property
    def tubal_rank(self):
        return max(self) if self else 0

    def check(self, dims):
        n1, n2, n3 = dims
        if len(self) != n3:
            raise ShapeError(f"multi-rank has {len(self)} entries, tensor has n3={n3}")
        if any(r > min(n1, n2) for r in self):
            raise ValueError(f"multi-rank {tuple(self)} exceeds min(n1, n2)={min(n1, n2)}")
        return self

    def __repr__(self):
        return f"MultiRank({list(self)})"


def as_multi_rank(r, dims):
    """Coerce an int or a sequence into a :class:`MultiRank` valid for ``dims``."""
    if isinstance(r, numbers.Integral) and not isinstance(r, MultiRank):
        r = MultiRank.uniform(int(r), dims[2])
    return MultiRank(r).check(dims)


@dataclass(frozen=True, eq=False)
class SkinnyTcSvd:
    """Skinny factorization ``U * S * V^T`` held in the transform domain.

    ``u_hat`` is ``(n3, n1, r)``, ``s_hat`` is ``(n3, r)`` and ``v_hat`` is
    ``(n3, n2, r)`` where ``r`` is the tubal rank. In slice ``k`` only the
    first ``multi_rank[k]`` columns are nonzero.
    """

    u_hat: np.ndarray
    s_hat: np.ndarray
    v_hat: np.ndarray
    multi_rank: MultiRank

    @property
    def shape(self):
        return (self.u_hat.shape[1], self.v_hat.shape[1], self.u_hat.shape[0])

    @property
    def tubal_rank(self):
        return self.u_hat.shape[2]

    @property
    def u(self):
        return _inv(self.u_hat)

    @property
    def v(self):
        return _inv(self.v_hat)

    @property
    def s(self):
        n3, r = self.s_hat.shape
        diag = np.zeros((n3, r, r))
        idx = np.arange(r)
        diag[:, idx, idx] = self.s_hat
        return _inv(diag)

    def to_slices(self):
        return (self.u_hat * self.s_hat[:, np.newaxis, :]) @ self.v_hat.transpose(0, 2, 1)

    def to_tensor(self):
        return _inv(self.to_slices())


def _svd_slices(slices):
    try:
        return np.linalg.svd(slices, full_matrices=False)
    except np.linalg.LinAlgError:
        for k, sl in enumerate(slices):
            try:
                np.linalg.svd(sl, full_matrices=False)
            except np.linalg.LinAlgError as exc:
                raise np.linalg.LinAlgError(f"SVD did not converge on transformed slice {k}") from exc
        raise


def _factor_slices(slices, ranks, tol=DEFAULT_RANK_TOL, scale=0.0):
    """Keep the leading ``ranks[k]`` triplets of each slice.

    Triplets whose singular value is at most ``tol * max(sigma_max, scale)``
    are dropped, so the returned multi-rank can fall below ``ranks``.
    ``sigma_max`` is pooled over slices.
    """
    n3, n1, n2 = slices.shape
    u, s, vt = _svd_slices(slices)
    smax = max(s.max() if s.size else 0.0, scale)
    ranks = np.minimum(np.asarray(ranks, dtype=int), min(n1, n2))
    significant = (s > tol * smax).sum(axis=1) if smax > 0 else np.zeros(n3, dtype=int)
    eff = np.minimum(ranks, significant)
    width = int(eff.max()) if n3 else 0
    keep = np.arange(width)[np.newaxis, :] < eff[:, np.newaxis]
    u_hat = u[:, :, :width] * keep[:, np.newaxis, :]
    v_hat = vt[:, :width, :].transpose(0, 2, 1) * keep[:, np.newaxis, :]
    s_hat = s[:, :width] * keep
    return SkinnyTcSvd(
        np.ascontiguousarray(u_hat),
        np.ascontiguousarray(s_hat),
        np.ascontiguousarray(v_hat),
        MultiRank(eff.tolist()),
    )


def tcsvd(a, tol=DEFAULT_RANK_TOL):
    """Skinny t-SVD of ``a`` at its numerical multi-rank."""
    a = check_tensor3(a)
    return _factor_slices(_fwd(a), [min(a.shape[:2])] * a.shape[2], tol)


def truncate_h_r(a, r, return_factors=False, tol=0.0):
    """Best approximation of ``a`` with multi-rank at most ``r``.

    Each transformed slice keeps its leading ``r[k]`` singular triplets.
    With ``return_factors`` the skinny factors are returned as well; their
    multi-rank omits triplets at or below ``tol`` times the top singular value.
    """
    a = check_tensor3(a)
    r = as_multi_rank(r, a.shape)
    fac = _factor_slices(_fwd(a), r, tol)
    out = fac.to_tensor()
    return (out, fac) if return_factors else out


def multi_rank_of(a, tol=DEFAULT_RANK_TOL):
    """Count, per transformed slice, singular values above ``tol * sigma_max``.

    ``sigma_max`` is pooled over all slices.
    """
    if tol < 0:
        raise ValueError("tol must be non-negative")
    s = np.linalg.svd(_fwd(check_tensor3(a)), compute_uv=False)
    smax = s.max()
    if smax == 0.0:
        return MultiRank([0] * s.shape[0])
    return MultiRank((s > tol * smax).sum(axis=1).tolist())
