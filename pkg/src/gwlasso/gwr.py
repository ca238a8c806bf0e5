"""Global OLS and geographically weighted regression baselines.

GWR fits one weighted least-squares regression per station using kernel
weights from a distance matrix; swapping the straight-line matrix for the
network shortest-path matrix gives the network-adapted variant without any
code change.  Weighted solves go through an SVD of the sqrt-weighted design
rather than the normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientEffectiveWeightError,
    LocalSingularFitError,
    RankDeficientError,
)
from .kernels import KernelSpec, weight_vector
from .search import interval_search

_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class FitMetrics:
    """In-sample accuracy of fitted values."""

    rmse: float
    r_squared: float
    sst_zero: bool = False


def fit_metrics(y, fitted) -> FitMetrics:
    """RMSE and R^2 against the global mean; R^2 reported as 0 when the
    response is constant (zero total sum of squares)."""
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    resid = y - fitted
    rmse = float(np.sqrt(np.mean(resid**2)))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        return FitMetrics(rmse=rmse, r_squared=0.0, sst_zero=True)
    return FitMetrics(rmse=rmse, r_squared=1.0 - float(np.sum(resid**2)) / sst)


def _design(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    n = X.shape[0]
    return np.column_stack([np.ones(n), X])


def _wls_solve(Xd, y, w):
    """Least squares on sqrt-weighted rows; returns (beta, condition, rank)."""
    sw = np.sqrt(w)
    A = sw[:, None] * Xd
    b = sw * y
    u, sv, vt = np.linalg.svd(A, full_matrices=False)
    smax = sv[0] if sv.size else 0.0
    tol = _RANK_RTOL * smax
    nonzero = sv > tol
    rank = int(nonzero.sum())
    cond = float(smax / sv[-1]) if sv.size and sv[-1] > 0 else float("inf")
    inv = np.zeros_like(sv)
    inv[nonzero] = 1.0 / sv[nonzero]
    beta = vt.T @ (inv * (u.T @ b))
    return beta, cond, rank


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray  # intercept first
    fitted: np.ndarray
    metrics: FitMetrics
    rmse_loo: float
    r_squared_loo: float


def ols_fit(X, y) -> OlsFit:
    """Global least squares with intercept.

    Leave-one-out residuals come from the exact hat-diagonal identity
    e_i / (1 - h_ii), not from refitting.
    """
    Xd = _design(X)
    y = np.asarray(y, dtype=float).ravel()
    n, k = Xd.shape
    if n <= k:
        raise RankDeficientError(f"need n > p + 1, got n={n}, p+1={k}")
    beta, cond, rank = _wls_solve(Xd, y, np.ones(n))
    if rank < k:
        raise RankDeficientError(
            f"design with intercept is rank deficient (rank {rank} < {k})"
        )
    fitted = Xd @ beta
    resid = y - fitted
    q, _ = np.linalg.qr(Xd)
    hat = np.einsum("ij,ij->i", q, q)
    denom = np.maximum(1.0 - hat, 1e-12)
    loo_resid = resid / denom
    rmse_loo = float(np.sqrt(np.mean(loo_resid**2)))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2_loo = 1.0 - float(np.sum(loo_resid**2)) / sst if sst > 0 else 0.0
    return OlsFit(
        coefficients=beta,
        fitted=fitted,
        metrics=fit_metrics(y, fitted),
        rmse_loo=rmse_loo,
        r_squared_loo=r2_loo,
    )


@dataclass(frozen=True)
class GwrFit:
    coefficients: np.ndarray  # (n, p+1), intercept first
    fitted: np.ndarray
    metrics: FitMetrics
    conditions: np.ndarray


def gwr_fit(X, y, dm, kernel: KernelSpec, leave_one_out: bool = False) -> GwrFit:
    """Local weighted least squares at every station.

    With `leave_one_out` the self-weight is zeroed, so fitted values are
    the LOO predictions used by bandwidth cross-validation.
    """
    Xd = _design(X)
    y = np.asarray(y, dtype=float).ravel()
    n, k = Xd.shape
    coeffs = np.empty((n, k))
    fitted = np.empty(n)
    conds = np.empty(n)
    values = getattr(dm, "values", dm)
    ids = getattr(dm, "ids", None)
    for i in range(n):
        w = weight_vector(values, i, kernel, leave_one_out=leave_one_out).values
        sid = ids[i] if ids is not None else i
        w_sum = float(w.sum())
        ess = w_sum**2 / float((w**2).sum()) if w_sum > 0 else 0.0
        if ess < k:
            raise InsufficientEffectiveWeightError(sid, ess, k)
        beta, cond, rank = _wls_solve(Xd, y, w)
        if rank < k:
            raise LocalSingularFitError(sid, cond)
        coeffs[i] = beta
        fitted[i] = float(Xd[i] @ beta)
        conds[i] = cond
    return GwrFit(
        coefficients=coeffs,
        fitted=fitted,
        metrics=fit_metrics(y, fitted),
        conditions=conds,
    )


def gwr_loo_rmse(X, y, dm, kernel: KernelSpec) -> float:
    fit = gwr_fit(X, y, dm, kernel, leave_one_out=True)
    return fit.metrics.rmse


def gwr_bandwidth_cv(X, y, dm, family: str = "gaussian", lb=None, ub=None, eps=None):
    """Bandwidth minimizing the LOO prediction error, via interval search.

    Bounds default to the distance-matrix heuristics used by the lasso
    estimator (`gwl.default_bandwidth_bounds`).  Probes where the local
    fits degenerate score +inf so the search can steer away from them; the
    returned bandwidth is always one that evaluated cleanly, unless every
    probe failed.
    """
    from .gwl import default_bandwidth_bounds, default_eps

    values = getattr(dm, "values", dm)
    if lb is None or ub is None:
        lb_d, ub_d = default_bandwidth_bounds(values)
        lb = lb if lb is not None else lb_d
        ub = ub if ub is not None else ub_d
    if eps is None:
        eps = default_eps(X, y, lb, ub)

    def err_fn(b):
        try:
            return gwr_loo_rmse(X, y, values, KernelSpec(family, b))
        except (InsufficientEffectiveWeightError, LocalSingularFitError):
            return float("inf")

    result = interval_search(err_fn, lb, ub, eps)
    if not np.isfinite(result.error):
        raise InsufficientEffectiveWeightError(
            "<all>", 0.0, _design(X).shape[1]
        )
    return result.bandwidth, result.error
