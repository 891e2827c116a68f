import json

import numpy as np
import pytest

from tcrcg.algebra import tprod
from tcrcg.manifold import TangentPoint
from tcrcg.sampling import SamplingSet, make_rng, sample_omega
from tcrcg.solver import (
    HardThreshold,
    ResampleTrim,
    SolverConfig,
    incoherence_mu0,
    init_hard_threshold,
    init_resample_trim,
    joint_mu1,
    rcg_complete,
    sampling_isometry_gap,
    trim,
)
from tcrcg.solver import _clip_rows
from tcrcg.transform import dct_matrix
from tcrcg.tsvd import SkinnyTcSvd, MultiRank, truncate_h_r

from conftest import low_rank_tensor


def gaussian_instance(n, r, seed):
    rng = np.random.default_rng(seed)
    return tprod(rng.standard_normal((n, r, n)), rng.standard_normal((r, n, n)))


def rel_err(x, truth):
    return np.linalg.norm(x - truth) / np.linalg.norm(truth)


# -- configuration ---------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [{"k1": 1.0}, {"k1": -0.1}, {"k2": 0.0}, {"max_iters": 0}, {"rel_change_tol": 0.0}],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(target_rank=(1,), **kwargs)


def test_config_rejects_unknown_init():
    with pytest.raises(TypeError):
        SolverConfig(target_rank=(1,), init="hard")
    with pytest.raises(ValueError):
        ResampleTrim(step="bogus")


# -- hard-threshold start --------------------------------------------------


def test_hard_threshold_full_sampling(rng):
    a = rng.standard_normal((4, 5, 3))
    omega = SamplingSet.from_mask(np.ones(a.shape, bool))
    x0 = init_hard_threshold(a, omega, (2, 1, 2))
    assert np.abs(x0.value - truncate_h_r(a, (2, 1, 2))).max() <= 1e-12


def test_hard_threshold_zero_observations():
    omega = sample_omega((4, 4, 2), 10, seed=0)
    x0 = init_hard_threshold(np.zeros((4, 4, 2)), omega, (1, 1))
    assert not np.any(x0.value)
    assert x0.multi_rank == (0, 0)


def test_hard_threshold_error_shrinks_like_inverse_sqrt_m():
    n, r = 30, 2
    ms = np.array([2000, 8000, 32000])
    errs = np.zeros(len(ms))
    seeds = range(6)
    for seed in seeds:
        a = gaussian_instance(n, r, 100 + seed)
        for j, m in enumerate(ms):
            omega = sample_omega(a.shape, int(m), seed=(seed, int(m)))
            errs[j] += rel_err(init_hard_threshold(a, omega, r).value, a) / len(seeds)
    slope = np.polyfit(np.log(ms), np.log(errs), 1)[0]
    assert -0.65 <= slope <= -0.35


# -- incoherence and trimming ----------------------------------------------


def test_mu0_of_dct_columns_is_about_one():
    n1, n3, r = 8, 3, 1
    # columns are DCT basis vectors; the first is constant
    basis = np.broadcast_to(dct_matrix(n1).T[:, :r], (n3, n1, r)).copy()
    fac = SkinnyTcSvd(basis, np.ones((n3, r)), basis, MultiRank([r] * n3))
    assert incoherence_mu0(fac) == pytest.approx(1.0, abs=1e-12)
    basis2 = np.broadcast_to(dct_matrix(n1).T[:, :2], (n3, n1, 2)).copy()
    fac2 = SkinnyTcSvd(basis2, np.ones((n3, 2)), basis2, MultiRank([2] * n3))
    assert 1.0 <= incoherence_mu0(fac2) <= 1.5


def test_mu0_of_basis_tensor_is_maximal():
    n1, n2, n3 = 6, 5, 3
    x = np.zeros((n1, n2, n3))
    x[0, :, 0] = np.arange(1, n2 + 1)
    fac = TangentPoint.from_tensor(x).factors
    r = fac.tubal_rank
    assert incoherence_mu0(fac) == pytest.approx(n1 / r)


def test_mu1_closed_forms():
    # all-ones: sup norm 1 and spectral norm sqrt(n1 n2 n3), so the value is 1
    assert joint_mu1(np.ones((3, 4, 5)), 1) == pytest.approx(1.0)
    e = np.zeros((4, 4, 1))
    e[1, 2, 0] = 3.0
    assert joint_mu1(e, 1) == pytest.approx(np.sqrt(16.0))
    with pytest.raises(ValueError):
        joint_mu1(np.zeros((2, 2, 2)), 1)


def test_trim_identity_when_incoherent(rng):
    z = TangentPoint.from_tensor(low_rank_tensor(rng, 20, 20, (2, 2, 2))).factors
    mu = 1.01 * incoherence_mu0(z)
    out = trim(z, mu)
    assert np.abs(out.to_tensor() - z.to_tensor()).max() <= 1e-12


def test_trim_single_spike_row():
    # n3 = 1: the incoherence row measure is the plain row norm
    n1, r, mu = 10, 1, 0.9
    bound = np.sqrt(mu * r / n1)
    u = np.zeros((1, n1, 1))
    u[0, 0, 0] = 1.0
    assert bound == pytest.approx(0.3)
    clipped = _clip_rows(u, bound)
    assert np.linalg.norm(clipped[0, 0]) == pytest.approx(0.3)
    assert not np.any(clipped[0, 1:])
    # flat V rows 1/2 exceed sqrt(mu/4) too, by the factor sqrt(mu)
    v = np.full((1, 4, 1), 0.5)
    fac = SkinnyTcSvd(u, np.array([[2.0]]), v, MultiRank([1]))
    out = trim(fac, mu, r)
    np.testing.assert_allclose(out.to_tensor(), fac.to_tensor() * bound * np.sqrt(mu), atol=1e-12)


def test_trim_post_incoherence_near_truth(rng):
    n, r = 30, 2
    truth = gaussian_instance(n, r, 7)
    ref = TangentPoint.from_tensor(truth, r).factors
    mu0 = incoherence_mu0(ref)
    sigma_min = ref.s_hat[ref.s_hat > 0].min()
    for _ in range(5):
        noise = rng.standard_normal(truth.shape)
        near = truth + 0.05 * sigma_min * noise / np.linalg.norm(noise)
        z = TangentPoint.from_tensor(near, r).factors
        out = trim(z, 1.25 * mu0, r)
        energy = np.einsum("kic,kic->i", out.u_hat, out.u_hat) / n
        assert np.sqrt(energy.max()) <= (10 / 9) * np.sqrt(mu0 * r / n) * 1.25


def test_trim_rejects_bad_mu(rng):
    z = TangentPoint.from_tensor(low_rank_tensor(rng, 4, 4, (1,))).factors
    with pytest.raises(ValueError):
        trim(z, 0.0)


# -- resampled start -------------------------------------------------------


def test_resample_full_sampling_per_group(rng):
    a = low_rank_tensor(rng, 5, 4, (2, 1))
    full = np.argwhere(np.ones(a.shape, bool))
    omega = SamplingSet(a.shape, np.concatenate([full, full]))
    z = init_resample_trim(a, omega, (2, 1), L=1)
    assert rel_err(z.value, a) <= 1e-10


@pytest.mark.parametrize("step", ["fixed", "adaptive"])
def test_resample_contracts_with_many_samples(step):
    n, r, L = 20, 2, 4
    truth = gaussian_instance(n, r, 3)
    omega = sample_omega(truth.shape, (L + 1) * 4 * n**3, seed=4)
    errs = []
    init_resample_trim(truth, omega, r, L=L, step=step, callback=lambda z: errs.append(rel_err(z.value, truth)))
    ratios = np.array(errs[1:]) / np.array(errs[:-1])
    assert len(errs) == L + 1
    assert ratios.mean() <= 5 / 6


def test_resample_then_rcg_recovers():
    n, r = 30, 2
    truth = gaussian_instance(n, r, 11)
    omega = sample_omega(truth.shape, int(0.5 * n**3), seed=12)
    cfg = SolverConfig(target_rank=r, init=ResampleTrim(L=10))
    rep = rcg_complete(truth, omega, cfg, truth=truth)
    assert rep.res < 1e-4


# -- conjugate gradient ----------------------------------------------------


def test_exact_start_fully_observed(rng):
    a = low_rank_tensor(rng, 5, 5, (2, 1, 1))
    omega = SamplingSet.from_mask(np.ones(a.shape, bool))
    rep = rcg_complete(a, omega, SolverConfig(target_rank=(2, 1, 1)), x0=a, truth=a)
    assert rep.iterations <= 1
    assert rep.res < 1e-12
    assert rep.converged


def test_table_scale_instance():
    n, r = 50, 2
    truth = gaussian_instance(n, r, 2024)
    omega = sample_omega(truth.shape, int(0.5 * n**3), seed=1)
    rep = rcg_complete(truth, omega, SolverConfig(target_rank=r, max_iters=20), truth=truth)
    assert rep.res < 1e-4
    assert 2 <= rep.iterations <= 15
    assert len(rep.trace) == rep.iterations
    assert not rep.rank_drop


def _als_oracle(observed, draws, ranks, iters=2000, seed=0):
    """Alternating least squares on transformed rank-one factors, built from scratch."""
    n1, n2, n3 = observed.shape
    c = np.array([[np.cos(np.pi * k * (2 * l + 1) / (2 * n3)) for l in range(n3)] for k in range(n3)])
    c[0] *= np.sqrt(1.0 / n3)
    c[1:] *= np.sqrt(2.0 / n3)
    rng = np.random.default_rng(seed)
    u = [rng.standard_normal((n1, r)) for r in ranks]
    v = [rng.standard_normal((n2, r)) for r in ranks]
    y = np.array([observed[i, j, l] for i, j, l in draws])

    def design(left):
        rows = []
        for i, j, l in draws:
            row = []
            for k in range(n3):
                block = np.zeros(((n1 if left else n2), ranks[k]))
                if left:
                    block[i] = c[k, l] * v[k][j]
                else:
                    block[j] = c[k, l] * u[k][i]
                row.append(block.ravel())
            rows.append(np.concatenate(row))
        return np.array(rows)

    def unpack(vec, n):
        out, pos = [], 0
        for r in ranks:
            out.append(vec[pos : pos + n * r].reshape(n, r))
            pos += n * r
        return out

    for _ in range(iters):
        u = unpack(np.linalg.lstsq(design(True), y, rcond=None)[0], n1)
        v = unpack(np.linalg.lstsq(design(False), y, rcond=None)[0], n2)
    slices = [u[k] @ v[k].T for k in range(n3)]
    return np.stack([sum(c[k, l] * slices[k] for k in range(n3)) for l in range(n3)], axis=2)


def distinct_omega(dims, m, seed):
    flat = make_rng(seed).permutation(int(np.prod(dims)))[:m]
    mask = np.zeros(int(np.prod(dims)), bool)
    mask[flat] = True
    return SamplingSet.from_mask(mask.reshape(dims, order="F"))


def test_small_instance_matches_als_oracle(rng):
    # 24 distinct entries out of 32; the manifold has dimension 14
    truth = low_rank_tensor(rng, 4, 4, (1, 1))
    omega = distinct_omega(truth.shape, 24, seed=0)
    rep = rcg_complete(truth, omega, SolverConfig(target_rank=(1, 1), max_iters=50, rel_change_tol=1e-12), truth=truth)
    assert rep.iterations <= 50
    assert rep.res < 1e-6
    als = _als_oracle(truth, [tuple(d) for d in omega.support], (1, 1), iters=300)
    assert rel_err(als, truth) < 1e-6
    assert rel_err(rep.final, als) < 1e-6


def _diag_run(n=12, r=1, factor=6, seed=0, max_iters=15):
    truth = gaussian_instance(n, r, seed)
    omega = sample_omega(truth.shape, factor * n**3, seed=seed + 1)
    cfg = SolverConfig(target_rank=r, max_iters=max_iters, rel_change_tol=1e-10)
    return truth, omega, rcg_complete(truth, omega, cfg, truth=truth, diagnostics=True)


def test_conjugacy_and_restart_trace():
    _, _, rep = _diag_run(factor=1, max_iters=40)
    assert rep.trace[0].restarted and rep.restarts[0] == 0
    conjugate = [t for t in rep.trace if not t.restarted]
    assert conjugate, "expected at least one conjugate step"
    for t in conjugate:
        assert abs(t.conjugacy) <= 1e-8


def test_restart_steps_do_not_increase_objective():
    _, _, rep = _diag_run(factor=1, max_iters=40)
    objs = [t.obj for t in rep.trace]
    for prev, cur, t in zip(objs[:-1], objs[1:], rep.trace[:-1]):
        if t.restarted:
            assert cur <= prev * (1 + 1e-8) + 1e-12


def test_step_size_bounds_on_restart():
    _, omega, rep = _diag_run(factor=40)
    p = omega.m / omega.size
    checked = 0
    for t in rep.trace:
        if t.restarted and t.eps0 < 0.25:
            assert 1 / ((1 + 4 * t.eps0) * p) <= t.alpha <= 1 / ((1 - 4 * t.eps0) * p)
            checked += 1
    assert checked >= 1


def test_linear_convergence():
    truth, omega, _ = _diag_run()
    errs = []
    cfg = SolverConfig(target_rank=1, max_iters=1, rel_change_tol=1e-14)
    x = init_hard_threshold(truth, omega, 1)
    for _ in range(6):
        errs.append(rel_err(x.value, truth))
        rep = rcg_complete(truth, omega, cfg, x0=x)
        x = TangentPoint.from_tensor(rep.final, 1)
    ratios = np.array(errs[1:]) / np.array(errs[:-1])
    assert np.all(ratios < 1)


def test_sampling_isometry_gap_small_when_oversampled():
    truth = gaussian_instance(10, 1, 0)
    point = TangentPoint.from_tensor(truth, 1)
    omega = sample_omega(truth.shape, 40 * truth.size, seed=2)
    full = SamplingSet.from_mask(np.ones(truth.shape, bool))
    assert sampling_isometry_gap(point, full) <= 1e-10
    assert sampling_isometry_gap(point, omega) < 0.25


def test_trace_jsonl():
    _, _, rep = _diag_run(max_iters=3)
    lines = rep.trace_jsonl().splitlines()
    assert len(lines) == rep.iterations
    row = json.loads(lines[0])
    assert set(row) == {"iter", "obj", "grad_norm", "alpha", "beta", "restarted", "rel_change"}


def test_rank_drop_flagged():
    # observations of a rank-one tensor, target rank two: the second direction vanishes
    truth = np.zeros((4, 4, 1))
    truth[:, :, 0] = np.outer(np.arange(1, 5), np.ones(4))
    omega = SamplingSet.from_mask(np.ones(truth.shape, bool))
    rep = rcg_complete(truth, omega, SolverConfig(target_rank=2, max_iters=5), truth=truth)
    assert rep.rank_drop
    assert rep.res < 1e-12


def test_shape_mismatch_rejected():
    omega = sample_omega((3, 3, 2), 5, seed=0)
    with pytest.raises(ValueError):
        rcg_complete(np.zeros((3, 3, 3)), omega, SolverConfig(target_rank=1))
