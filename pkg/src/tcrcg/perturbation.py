"""Perturbation quantities relating two points of equal multi-rank.

For a reference point ``X`` and a nearby ``X_l`` these compute both sides
of the six subspace and tangent-space bounds used in the local convergence
analysis. Each bound reads ``lhs <= rhs``.
"""

import numpy as np

from ._validation import check_same_shape, check_tensor3
from .algebra import _fwd, spectral_norm
from .manifold import TangentPoint, _project_slices


def _range_projectors(basis_hat):
    return basis_hat @ basis_hat.transpose(0, 2, 1)


def _tangent_projector_matrices(fac):
    """Matrix of the tangent projector per transformed slice (column-major vec)."""
    pu = _range_projectors(fac.u_hat)
    pv = _range_projectors(fac.v_hat)
    n3, n1, _ = pu.shape
    n2 = pv.shape[1]
    eye1, eye2 = np.eye(n1), np.eye(n2)
    mats = np.empty((n3, n1 * n2, n1 * n2))
    for k in range(n3):
        # vec(PU A + A PV - PU A PV) for column-major vec
        mats[k] = np.kron(eye2, pu[k]) + np.kron(pv[k], eye1) - np.kron(pv[k], pu[k])
    return mats


def tangent_projector_gap(fac_a, fac_b):
    """Operator norm of the difference of two tangent-space projectors."""
    diff = _tangent_projector_matrices(fac_a) - _tangent_projector_matrices(fac_b)
    return float(max(np.linalg.norm(d, 2) for d in diff))


def perturbation_bounds(x, x_l, tol=1e-8):
    """Return ``{label: (lhs, rhs)}`` for the six bounds ``(i)``..``(vi)``."""
    x = check_tensor3(x, "x")
    x_l = check_tensor3(x_l, "x_l")
    check_same_shape(x, x_l, ("x", "x_l"))
    ref = TangentPoint.from_tensor(x, tol=tol)
    near = TangentPoint.from_tensor(x_l, tol=tol)
    if tuple(ref.multi_rank) != tuple(near.multi_rank):
        raise ValueError(
            f"multi-ranks differ: {tuple(ref.multi_rank)} vs {tuple(near.multi_rank)}"
        )
    s = ref.factors.s_hat
    sigma_min = float(s[s > 0].min())
    diff = x_l - x
    spec = spectral_norm(diff)
    fro = float(np.linalg.norm(diff))

    du = _range_projectors(near.factors.u_hat) - _range_projectors(ref.factors.u_hat)
    dv = _range_projectors(near.factors.v_hat) - _range_projectors(ref.factors.v_hat)
    xh = _fwd(x)
    normal_part = xh - _project_slices(near.factors, xh)

    return {
        "i": (float(np.linalg.norm(du, 2, axis=(1, 2)).max()), spec / sigma_min),
        "ii": (float(np.linalg.norm(dv, 2, axis=(1, 2)).max()), spec / sigma_min),
        "iii": (float(np.linalg.norm(du)), np.sqrt(2.0) * fro / sigma_min),
        "iv": (float(np.linalg.norm(dv)), np.sqrt(2.0) * fro / sigma_min),
        "v": (float(np.linalg.norm(normal_part)), fro**2 / sigma_min),
        "vi": (tangent_projector_gap(near.factors, ref.factors), 2.0 * fro / sigma_min),
    }
