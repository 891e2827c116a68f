"""Synthetic instances, phase-diagram sweeps and image completion runs."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import io
import csv
import time

import numpy as np

from ..algebra import tprod
from ..manifold import manifold_dim
from ..sampling import make_rng, sample_omega
from ..solver import HardThreshold, SolverConfig, rcg_complete
from ..tsvd import MultiRank, as_multi_rank, truncate_h_r
from .metrics import metrics_psnr, metrics_res

__all__ = [
    "ExperimentSpec",
    "gen_synthetic",
    "run_trial",
    "phase_cells",
    "run_phase_diagram",
    "phase_csv",
    "phase_raster",
    "image_complete",
]

SUCCESS_TOL = 1e-3
DEFAULT_N = tuple(range(20, 101, 10))
DEFAULT_RATIOS = tuple(round(0.05 * k, 2) for k in range(1, 13))


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep or run description.

    For a phase diagram the ``m`` grid of each ``n`` comes from
    ``dim_multiples`` (multiples of the manifold dimension) when given,
    otherwise from ``ratios`` (fractions of ``n^3``).
    """

    kind: str = "PhaseDiagram"
    n_values: tuple = DEFAULT_N
    rank: int = 2
    ratios: tuple = DEFAULT_RATIOS
    dim_multiples: tuple = None
    sr: float = None
    trials: int = 10
    seed: int = 0
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(target_rank=(1,)))
    workers: int = 1

    def __post_init__(self):
        if self.kind not in ("Synthetic", "PhaseDiagram", "ImageCompletion"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.sr is not None and not 0 < self.sr <= 1:
            raise ValueError(f"sampling ratio must lie in (0, 1], got {self.sr}")


def gen_synthetic(n, r, seed):
    """``S * W`` with standard Gaussian ``S`` (n x r x n) and ``W`` (r x n x n)."""
    if not 0 <= r <= n:
        raise ValueError(f"rank {r} must lie in [0, {n}]")
    if r == 0:
        return np.zeros((n, n, n))
    rng = make_rng(seed)
    s = rng.standard_normal((n, r, n))
    w = rng.standard_normal((r, n, n))
    return tprod(s, w)


def _trial_seeds(base, n, m, trial):
    key = [int(base), int(n), int(m), int(trial)]
    return key + [0], key + [1]


def run_trial(n, r, m, trial, base_seed, solver):
    """One seeded instance; returns ``(n, m, trial, res, iterations)``.

    A solver exception counts as a failed trial with ``res = inf``.
    """
    truth_seed, omega_seed = _trial_seeds(base_seed, n, m, trial)
    try:
        truth = gen_synthetic(n, r, truth_seed)
        omega = sample_omega(truth.shape, m, omega_seed)
        cfg = replace(solver, target_rank=MultiRank.uniform(r, n))
        rep = rcg_complete(truth, omega, cfg, truth=truth)
        return n, m, trial, rep.res, rep.iterations
    except (ArithmeticError, ValueError, np.linalg.LinAlgError):
        return n, m, trial, float("inf"), 0


def phase_cells(spec):
    """``[(n, [m, ...]), ...]`` in sweep order."""
    cells = []
    for n in spec.n_values:
        if spec.dim_multiples is not None:
            dim = manifold_dim((n, n, n), spec.rank)
            ms = [int(round(f * dim)) for f in spec.dim_multiples]
        else:
            ms = [int(round(f * n**3)) for f in spec.ratios]
        cells.append((n, sorted({max(1, m) for m in ms})))
    return cells


def run_phase_diagram(spec):
    """Success fraction per ``(n, m)`` cell, as rows ``(n, m, fraction)``."""
    if spec.kind != "PhaseDiagram":
        raise ValueError("spec.kind must be 'PhaseDiagram'")
    jobs = [
        (n, spec.rank, m, t, spec.seed, spec.solver)
        for n, ms in phase_cells(spec)
        for m in ms
        for t in range(spec.trials)
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(run_trial, *zip(*jobs)))
    else:
        results = [run_trial(*job) for job in jobs]
    wins = {}
    for n, m, _, res, _ in results:
        wins.setdefault((n, m), []).append(res < SUCCESS_TOL)
    return [(n, m, sum(w) / len(w)) for (n, m), w in sorted(wins.items())]


def phase_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "m", "success_fraction"])
    for n, m, frac in rows:
        writer.writerow([n, m, f"{frac:.4f}"])
    return buf.getvalue()


def phase_raster(rows, scale=8):
    """Grayscale raster: one row band per ``n``, one column band per ``m`` index."""
    by_n = {}
    for n, m, frac in rows:
        by_n.setdefault(n, []).append((m, frac))
    width = max(len(v) for v in by_n.values())
    grid = np.zeros((len(by_n), width))
    # largest n on top, as in a plot
    for i, n in enumerate(sorted(by_n, reverse=True)):
        for j, (_, frac) in enumerate(sorted(by_n[n])):
            grid[i, j] = frac
    return np.kron(grid, np.ones((scale, scale)))


@dataclass(frozen=True, eq=False)
class ImageResult:
    recovered: np.ndarray
    truth: np.ndarray
    psnr: float
    res: float
    seconds: float
    report: object


def image_complete(image, r, sr, cfg=None, seed=0):
    """Complete a rank-truncated image from a fraction ``sr`` of its entries.

    The ground truth is ``truncate_h_r(image, r)`` and PSNR is measured
    against it.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"expected an (n1, n2, n3) image, got shape {image.shape}")
    if not 0 < sr <= 1:
        raise ValueError(f"sampling ratio must lie in (0, 1], got {sr}")
    r = as_multi_rank(r, image.shape)
    cfg = replace(cfg or SolverConfig(target_rank=r, init=HardThreshold()), target_rank=r)
    t0 = time.perf_counter()
    truth = truncate_h_r(image, r)
    omega = sample_omega(truth.shape, max(1, int(round(sr * truth.size))), seed)
    rep = rcg_complete(truth, omega, cfg, truth=truth)
    seconds = time.perf_counter() - t0
    return ImageResult(
        rep.final, truth, metrics_psnr(rep.final, truth), metrics_res(rep.final, truth), seconds, rep
    )
