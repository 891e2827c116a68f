"""Geometry of the manifold of tensors with fixed transformed multi-rank.

Every operator here is block diagonal in the transform domain, so the
projections run slice by slice on the transformed factors.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_same_shape, check_tensor3
from .algebra import _fwd, _inv
from .tsvd import DEFAULT_RANK_TOL, SkinnyTcSvd, _factor_slices, as_multi_rank

__all__ = [
    "TangentPoint",
    "tangent_project",
    "riemannian_gradient",
    "retract",
    "vector_transport",
    "manifold_dim",
]


@dataclass(frozen=True, eq=False)
class TangentPoint:
    """A point on the manifold together with its skinny factors."""

    factors: SkinnyTcSvd
    value: np.ndarray

    @classmethod
    def from_factors(cls, factors):
        return cls(factors, factors.to_tensor())

    @classmethod
    def from_tensor(cls, x, r=None, tol=DEFAULT_RANK_TOL):
        """Factor ``x``; with ``r`` given, truncate to multi-rank ``r`` first."""
        x = check_tensor3(x)
        if r is None:
            r = [min(x.shape[:2])] * x.shape[2]
        else:
            r = as_multi_rank(r, x.shape)
        return cls.from_factors(_factor_slices(_fwd(x), r, tol))

    @property
    def multi_rank(self):
        return self.factors.multi_rank

    @property
    def shape(self):
        return self.value.shape


def _project_slices(fac, ah):
    u, v = fac.u_hat, fac.v_hat
    ut_a = u.transpose(0, 2, 1) @ ah
    a_v = ah @ v
    core = ut_a @ v
    return u @ ut_a + (a_v - u @ core) @ v.transpose(0, 2, 1)


def tangent_project(at, a):
    """Orthogonal projection of ``a`` onto the tangent space at ``at``.

    ``U U^T A + A V V^T - U U^T A V V^T`` with all products t-products.
    """
    a = check_tensor3(a)
    check_same_shape(a, at.value, ("a", "foot point"))
    return _inv(_project_slices(at.factors, _fwd(a)))


def riemannian_gradient(at, euclidean_grad):
    """Riemannian gradient from the ambient gradient under the embedded metric."""
    return tangent_project(at, euclidean_grad)


def retract(at, xi, r, tol=DEFAULT_RANK_TOL):
    """Metric-projection retraction: truncate ``at.value + xi`` to multi-rank ``r``.

    If a slice has fewer than ``r[k]`` singular values above ``tol`` times
    the largest singular value of ``at`` or of the result, the returned point
    carries the smaller multi-rank; callers detect the rank drop by comparing
    ``point.multi_rank`` with ``r``.
    """
    xi = check_tensor3(xi)
    check_same_shape(xi, at.value, ("xi", "foot point"))
    r = as_multi_rank(r, at.shape)
    scale = float(at.factors.s_hat.max()) if at.factors.s_hat.size else 0.0
    return TangentPoint.from_factors(_factor_slices(_fwd(at.value + xi), r, tol, scale))


def vector_transport(from_point, to_point, xi):
    """Move a tangent vector to the tangent space at ``to_point`` by projection."""
    xi = check_tensor3(xi)
    check_same_shape(xi, from_point.value, ("xi", "source point"))
    return tangent_project(to_point, xi)


def manifold_dim(dims, r):
    n1, n2, _ = dims
    r = as_multi_rank(r, dims)
    return int(sum((n1 + n2) * ri - ri * ri for ri in r))
