"""scikit-learn style front end for tensor completion."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ShapeError, check_tensor3
from .sampling import SamplingSet
from .solver import HardThreshold, ResampleTrim, SolverConfig, rcg_complete
from .tsvd import as_multi_rank


class TensorCompleter(BaseEstimator):
    """Fill in the missing entries of a low-tubal-rank third-order tensor.

    Parameters
    ----------
    rank : int or sequence of int
        Target multi-rank; an int applies to every transformed slice.
    init : {"hard", "resample"}
        Hard thresholding of the rescaled observations, or resampled
        gradient steps with trimming.
    k1, k2 : float
        Restart thresholds of the conjugate gradient iteration.
    max_iters : int
    rel_change_tol : float
        Stop once the relative change of the iterate drops to this value.
    L, mu, step : resampling options, used with ``init="resample"``.
    seed : int

    Attributes
    ----------
    completed_ : ndarray of shape (n1, n2, n3)
    multi_rank_ : MultiRank
    n_iter_ : int
    report_ : SolverReport
    """

    def __init__(
        self,
        rank=2,
        init="hard",
        k1=0.1,
        k2=1.0,
        max_iters=500,
        rel_change_tol=1e-4,
        L=10,
        mu=None,
        step="adaptive",
        seed=0,
    ):
        self.rank = rank
        self.init = init
        self.k1 = k1
        self.k2 = k2
        self.max_iters = max_iters
        self.rel_change_tol = rel_change_tol
        self.L = L
        self.mu = mu
        self.step = step
        self.seed = seed

    def _config(self, dims):
        if self.init == "hard":
            init = HardThreshold()
        elif self.init == "resample":
            init = ResampleTrim(self.L, self.mu, self.step)
        else:
            raise ValueError(f"init must be 'hard' or 'resample', got {self.init!r}")
        rank = self.rank if np.isscalar(self.rank) else tuple(self.rank)
        return SolverConfig(
            target_rank=as_multi_rank(rank, dims),
            k1=self.k1,
            k2=self.k2,
            max_iters=self.max_iters,
            rel_change_tol=self.rel_change_tol,
            init=init,
            seed=self.seed,
        )

    @staticmethod
    def _observations(X, mask, omega):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            X = X[:, :, np.newaxis]
        if mask is not None and omega is not None:
            raise ValueError("pass at most one of mask and omega")
        if omega is None:
            if mask is None:
                mask = np.isfinite(X)
            mask = np.asarray(mask, dtype=bool)
            if mask.ndim == 2:
                mask = mask[:, :, np.newaxis]
            if mask.shape != X.shape:
                raise ShapeError(f"mask shape {mask.shape} does not match X shape {X.shape}")
            omega = SamplingSet.from_mask(mask)
        elif omega.dims != X.shape:
            raise ShapeError(f"sampling dims {omega.dims} do not match X shape {X.shape}")
        observed = np.zeros(X.shape)
        if omega.m:
            idx = tuple(omega.support.T)
            observed[idx] = X[idx]
        return check_tensor3(observed, "X"), omega

    def fit(self, X, y=None, mask=None, omega=None):
        """Fit on the observed entries of ``X``.

        Observed entries are given by ``mask`` (True = observed), by a
        :class:`SamplingSet` ``omega``, or otherwise by the finite entries
        of ``X``.
        """
        observed, omega = self._observations(X, mask, omega)
        if omega.m == 0:
            raise ValueError("X has no observed entries")
        report = rcg_complete(observed, omega, self._config(observed.shape))
        self.completed_ = report.final
        self.multi_rank_ = report.multi_rank
        self.n_iter_ = report.iterations
        self.report_ = report
        return self

    def transform(self, X=None):
        """Return ``X`` with its non-finite entries replaced by the completion.

        Without ``X`` the full completed tensor is returned.
        """
        check_is_fitted(self, "completed_")
        if X is None:
            return self.completed_.copy()
        X = np.array(X, dtype=np.float64)
        if X.ndim == 2:
            X = X[:, :, np.newaxis]
        if X.shape != self.completed_.shape:
            raise ShapeError(f"X shape {X.shape} does not match fitted shape {self.completed_.shape}")
        missing = ~np.isfinite(X)
        X[missing] = self.completed_[missing]
        return X

    def fit_transform(self, X, y=None, mask=None, omega=None):
        return self.fit(X, mask=mask, omega=omega).transform()
