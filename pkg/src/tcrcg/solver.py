"""Restarted Riemannian conjugate gradient for tensor completion.

The objective is ``f(Z) = 1/2 <Z - A, R_Omega(Z - A)>``, i.e. half the sum of
squared residuals over the draws of ``Omega`` (a repeated draw counts once
per repetition). Its ambient gradient is ``R_Omega(Z - A)``.
"""

from dataclasses import dataclass, field
import json
import time

import numpy as np

from ._validation import ShapeError, check_positive_int, check_tensor3
from .algebra import _fwd, _inv
from .manifold import TangentPoint, _project_slices
from .sampling import apply_r_omega, make_rng, partition_omega
from .tsvd import DEFAULT_RANK_TOL, MultiRank, SkinnyTcSvd, _factor_slices, as_multi_rank

__all__ = [
    "HardThreshold",
    "ResampleTrim",
    "SolverConfig",
    "TraceEntry",
    "SolverReport",
    "rcg_complete",
    "init_hard_threshold",
    "init_resample_trim",
    "trim",
    "incoherence_mu0",
    "joint_mu1",
    "sampling_isometry_gap",
]


@dataclass(frozen=True)
class HardThreshold:
    """Start from the rank-truncated, rescaled observations."""


@dataclass(frozen=True)
class ResampleTrim:
    """Start from ``L`` resampled gradient steps with trimming.

    ``mu=None`` uses 1.25 times the incoherence of the first estimate.
    ``step="fixed"`` uses ``n1 n2 n3 / m_hat`` for every gradient step;
    ``"adaptive"`` picks the exact line-search step on the current group.
    A common sufficient choice is ``L >= 6 log(beta n log n / (24 eps0))``;
    it depends on the unobservable ``eps0`` and is not enforced.
    """

    L: int = 10
    mu: float = None
    step: str = "adaptive"

    def __post_init__(self):
        if self.step not in ("adaptive", "fixed"):
            raise ValueError(f"step must be 'adaptive' or 'fixed', got {self.step!r}")


@dataclass(frozen=True)
class SolverConfig:
    target_rank: tuple
    k1: float = 0.1
    k2: float = 1.0
    max_iters: int = 500
    rel_change_tol: float = 1e-4
    success_res_tol: float = 1e-3
    grad_floor: float = 1e-12
    init: object = field(default_factory=HardThreshold)
    seed: int = 0
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        if not 0.0 <= self.k1 < 1.0:
            raise ValueError(f"k1 must lie in [0, 1), got {self.k1}")
        if self.k2 <= 0:
            raise ValueError(f"k2 must be positive, got {self.k2}")
        check_positive_int(self.max_iters, "max_iters")
        for name in ("rel_change_tol", "success_res_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not isinstance(self.init, (HardThreshold, ResampleTrim)):
            raise TypeError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class TraceEntry:
    iter: int
    obj: float
    grad_norm: float
    alpha: float
    beta: float
    restarted: bool
    rel_change: float
    alpha_fallback: bool = False
    conjugacy: float = None
    eps0: float = None

    def to_json(self):
        keys = ("iter", "obj", "grad_norm", "alpha", "beta", "restarted", "rel_change")
        return json.dumps({k: getattr(self, k) for k in keys})


@dataclass(eq=False)
class SolverReport:
    iterations: int
    restarts: list
    trace: list
    final: np.ndarray
    converged: bool
    rank_drop: bool
    stop_reason: str
    multi_rank: MultiRank
    res: float = None
    timings: dict = field(default_factory=dict)

    def success(self, tol=1e-3):
        return self.res is not None and self.res < tol

    def trace_jsonl(self):
        return "".join(entry.to_json() + "\n" for entry in self.trace)


class _Sampler:
    """Sampling operator restricted to the observed support."""

    def __init__(self, omega, observed):
        self.idx = tuple(omega.support.T)
        self.counts = omega.counts.astype(np.float64)
        self.values = observed[self.idx]
        self.shape = omega.dims

    def scatter(self, vals):
        out = np.zeros(self.shape)
        out[self.idx] = vals
        return out

    def weighted_inner(self, x, y):
        """``<x, R_Omega y>`` for spatial tensors."""
        return float(np.dot(self.counts, x[self.idx] * y[self.idx]))


def _check_problem(observed, omega):
    observed = check_tensor3(observed, "observed")
    if observed.shape != omega.dims:
        raise ShapeError(f"observed shape {observed.shape} does not match sampling dims {omega.dims}")
    if omega.m < 1:
        raise ValueError("sampling set is empty")
    return observed


def init_hard_threshold(observed, omega, r, tol=DEFAULT_RANK_TOL):
    """``H_r((n1 n2 n3 / m) R_Omega(A))``."""
    observed = _check_problem(observed, omega)
    r = as_multi_rank(r, observed.shape)
    scaled = apply_r_omega(omega, observed) * (omega.size / omega.m)
    return TangentPoint.from_factors(_factor_slices(_fwd(scaled), r, tol))


def _row_energy(basis_hat):
    # ||factor^T * e_i||_F^2 for the transformed column basis e_i
    n3 = basis_hat.shape[0]
    return np.einsum("kic,kic->i", basis_hat, basis_hat) / n3


def incoherence_mu0(x):
    """Smallest ``mu0`` meeting the row and column incoherence conditions."""
    r = x.tubal_rank
    if r == 0:
        raise ValueError("incoherence is undefined for a zero-rank factorization")
    n1, n2, _ = x.shape
    mu_u = n1 / r * _row_energy(x.u_hat).max()
    mu_v = n2 / r * _row_energy(x.v_hat).max()
    return float(max(mu_u, mu_v))


def joint_mu1(x, r):
    """``||x||_inf sqrt(n1 n2 n3 / r) / ||x||`` with ``||.||`` the spectral norm."""
    x = check_tensor3(x)
    check_positive_int(r, "r")
    spec = np.linalg.svd(_fwd(x), compute_uv=False).max()
    if spec == 0.0:
        raise ValueError("joint incoherence is undefined for the zero tensor")
    return float(np.abs(x).max() * np.sqrt(x.size / r) / spec)


def _clip_rows(basis_hat, bound):
    norms = np.sqrt(_row_energy(basis_hat))
    scale = np.ones_like(norms)
    big = norms > bound
    scale[big] = bound / norms[big]
    return basis_hat * scale[np.newaxis, :, np.newaxis]


def trim(z, mu, r=None):
    """Clip the rows of both factors to incoherence level ``mu``, then refactor.

    A row is measured as ``||U^T * e_i||_F``, the quantity bounded by the
    incoherence condition, and clipped to ``sqrt(mu r / n1)`` (``n2`` for
    ``V``). Rows of zero norm are left alone. The trimmed tensor
    ``A * S * B^T`` is returned in skinny form after QR orthonormalization
    of ``A`` and ``B``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    r = z.tubal_rank if r is None else int(r)
    n1, n2, _ = z.shape
    if z.tubal_rank == 0:
        return z
    a = _clip_rows(z.u_hat, np.sqrt(mu * r / n1))
    b = _clip_rows(z.v_hat, np.sqrt(mu * r / n2))
    qa, ra = np.linalg.qr(a)
    qb, rb = np.linalg.qr(b)
    core = (ra * z.s_hat[:, np.newaxis, :]) @ rb.transpose(0, 2, 1)
    inner = _factor_slices(core, z.multi_rank, tol=0.0)
    return SkinnyTcSvd(qa @ inner.u_hat, inner.s_hat, qb @ inner.v_hat, inner.multi_rank)


def init_resample_trim(
    observed, omega, r, mu=None, L=10, step="adaptive", callback=None, tol=DEFAULT_RANK_TOL
):
    """Resampled projected gradient steps with trimming on ``L + 1`` disjoint groups.

    Group 0 gives the hard-thresholded start ``Z_0``; group ``l + 1`` drives
    the gradient step from the trimmed ``Z_l``. With ``step="fixed"`` the
    step size is ``n1 n2 n3 / m_hat``; ``"adaptive"`` minimizes the group's
    objective along the projected gradient instead, which keeps the iteration
    stable when ``m_hat`` is small. ``callback`` receives ``Z_0, ..., Z_L``.
    """
    observed = _check_problem(observed, omega)
    r = as_multi_rank(r, observed.shape)
    L = check_positive_int(L, "L")
    groups = partition_omega(omega, L + 1)
    z = init_hard_threshold(observed, groups[0], r, tol)
    if callback is not None:
        callback(z)
    if mu is None:
        mu = 1.25 * incoherence_mu0(z.factors) if z.factors.tubal_rank else 1.0
    for group in groups[1:]:
        zt = trim(z.factors, mu)
        zt_value = zt.to_tensor()
        grad = apply_r_omega(group, observed - zt_value)
        pg_hat = _project_slices(zt, _fwd(grad))
        alpha = group.size / group.m
        if step == "adaptive":
            pg = _inv(pg_hat)
            curv = float(np.vdot(pg, apply_r_omega(group, pg)))
            if curv > 0:
                alpha = float(np.vdot(pg_hat, pg_hat)) / curv
        w = zt.to_slices() + alpha * pg_hat
        z = TangentPoint.from_factors(_factor_slices(w, r, tol))
        if callback is not None:
            callback(z)
    return z


def sampling_isometry_gap(point, omega, iters=200, seed=0):
    """Estimate ``||P_T - p^-1 P_T R_Omega P_T||`` at ``point`` by power iteration."""
    fac = point.factors
    p_inv = omega.size / omega.m

    def op(z):
        pz = _inv(_project_slices(fac, _fwd(z)))
        return pz - p_inv * _inv(_project_slices(fac, _fwd(apply_r_omega(omega, pz))))

    z = _inv(_project_slices(fac, _fwd(make_rng(seed).standard_normal(point.shape))))
    lam = 0.0
    for _ in range(iters):
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        z = op(z / nz)
        new = np.linalg.norm(z)
        if abs(new - lam) <= 1e-10 * max(new, 1.0):
            lam = new
            break
        lam = new
    return float(lam)


def _initial_point(observed, omega, cfg, r):
    if isinstance(cfg.init, ResampleTrim):
        return init_resample_trim(
            observed, omega, r, cfg.init.mu, cfg.init.L, cfg.init.step, tol=cfg.rank_tol
        )
    return init_hard_threshold(observed, omega, r, cfg.rank_tol)


def rcg_complete(observed, omega, cfg, x0=None, truth=None, diagnostics=False):
    """Complete ``observed`` from its entries on ``omega``.

    Entries of ``observed`` off the sampled support are ignored. ``x0`` (a
    tensor or :class:`TangentPoint`) overrides the configured initialization.
    With ``diagnostics`` each trace entry also records the conjugacy residual
    and the sampling isometry gap at the current iterate (expensive).
    """
    t_start = time.perf_counter()
    observed = _check_problem(observed, omega)
    r = as_multi_rank(cfg.target_rank, observed.shape)
    if truth is not None:
        truth = check_tensor3(truth, "truth")

    if x0 is None:
        point = _initial_point(observed, omega, cfg, r)
    elif isinstance(x0, TangentPoint):
        point = x0
    else:
        point = TangentPoint.from_tensor(x0, r, cfg.rank_tol)
    t_init = time.perf_counter()

    smp = _Sampler(omega, observed)
    floor = cfg.grad_floor * float(np.linalg.norm(smp.values))
    p_inv = omega.size / omega.m
    x = point.value
    x_hat = point.factors.to_slices()
    fac = point.factors
    q_prev = None
    trace, restarts = [], []
    rank_drop = tuple(fac.multi_rank) != tuple(r)
    converged, stop_reason = False, "max_iters"

    for it in range(cfg.max_iters):
        resid = smp.values - x[smp.idx]
        obj = 0.5 * float(np.dot(smp.counts, resid * resid))
        g = smp.scatter(smp.counts * resid)
        pg_hat = _project_slices(fac, _fwd(g))
        grad_norm = float(np.linalg.norm(pg_hat))
        if grad_norm <= floor:
            converged, stop_reason = True, "grad_floor"
            break
        pg = _inv(pg_hat)

        beta, restarted, pq = 0.0, True, None
        if q_prev is not None:
            pq_hat = _project_slices(fac, q_prev)
            pq_norm = float(np.linalg.norm(pq_hat))
            cos_ok = abs(float(np.vdot(pg_hat, pq_hat))) <= cfg.k1 * grad_norm * pq_norm
            size_ok = grad_norm <= cfg.k2 * pq_norm
            if cos_ok and size_ok:
                pq = _inv(pq_hat)
                denom = smp.weighted_inner(pq, pq)
                if denom > 0:
                    beta = -smp.weighted_inner(pg, pq) / denom
                    restarted = False
        if restarted:
            restarts.append(it)
            q = pg
        else:
            q = pg + beta * pq

        q_hat = _fwd(q)
        denom = smp.weighted_inner(q, q)
        fallback = denom <= 0
        alpha = p_inv if fallback else float(np.vdot(pg_hat, q_hat)) / denom

        conj = eps0 = None
        if diagnostics:
            if pq is not None:
                scale = np.sqrt(denom * smp.weighted_inner(pq, pq))
                conj = smp.weighted_inner(q, pq) / scale if scale > 0 else 0.0
            eps0 = sampling_isometry_gap(TangentPoint(fac, x), omega, seed=cfg.seed)

        fac = _factor_slices(x_hat + alpha * q_hat, r, cfg.rank_tol)
        if tuple(fac.multi_rank) != tuple(r):
            rank_drop = True
        new_hat = fac.to_slices()
        base = float(np.linalg.norm(x_hat))
        step = float(np.linalg.norm(new_hat - x_hat))
        rel_change = step / base if base > 0 else np.inf
        x_hat = new_hat
        x = _inv(x_hat)
        q_prev = q_hat

        trace.append(
            TraceEntry(it, obj, grad_norm, alpha, beta, restarted, rel_change, fallback, conj, eps0)
        )
        if rel_change <= cfg.rel_change_tol:
            converged, stop_reason = True, "rel_change"
            break

    t_end = time.perf_counter()
    res = None
    if truth is not None:
        tn = float(np.linalg.norm(truth))
        res = float(np.linalg.norm(x - truth)) / tn if tn > 0 else float(np.linalg.norm(x))
    return SolverReport(
        iterations=len(trace),
        restarts=restarts,
        trace=trace,
        final=x,
        converged=converged,
        rank_drop=rank_drop,
        stop_reason=stop_reason,
        multi_rank=fac.multi_rank,
        res=res,
        timings={"init": t_init - t_start, "solve": t_end - t_init, "total": t_end - t_start},
    )
