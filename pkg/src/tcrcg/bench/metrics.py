import numpy as np

from .._validation import check_same_shape, check_tensor3

PSNR_CAP = 99.0


def metrics_res(x, truth):
    """Relative error ``||x - truth||_F / ||truth||_F``."""
    x, truth = check_tensor3(x, "x"), check_tensor3(truth, "truth")
    check_same_shape(x, truth, ("x", "truth"))
    tn = np.linalg.norm(truth)
    if tn == 0.0:
        raise ValueError("relative error is undefined for a zero truth tensor")
    return float(np.linalg.norm(x - truth) / tn)


def metrics_psnr(x, truth):
    """``10 log10(N (max - min)^2 / ||x - truth||_F^2)`` in dB, capped at 99 dB.

    ``max`` and ``min`` are taken over ``truth``.
    """
    x, truth = check_tensor3(x, "x"), check_tensor3(truth, "truth")
    check_same_shape(x, truth, ("x", "truth"))
    err = float(np.sum((x - truth) ** 2))
    peak = float(truth.max() - truth.min()) ** 2
    if err == 0.0:
        return PSNR_CAP
    if peak == 0.0:
        return -np.inf
    return float(min(PSNR_CAP, 10.0 * np.log10(truth.size * peak / err)))
