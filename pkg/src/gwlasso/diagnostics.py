"""Spatial autocorrelation, collinearity diagnostics, and model comparison.

Moran's I runs against a row-standardized spatial weight matrix built from
whichever distance metric the analysis uses.  Condition numbers of the
kernel-weighted design expose local collinearity station by station.  The
comparison harness fits the five estimators (OLS, GWR and lasso variants
under both distance metrics) on shared distance matrices and reports
leave-one-out prediction accuracy for each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantVariableError, DegenerateDesignError, EmptyNeighborhoodError
from .gwr import gwr_bandwidth_cv, gwr_fit, ols_fit
from .gwl import default_bandwidth_bounds, default_eps, fit_ada_gwl
from .kernels import KernelSpec
from .lars import weighted_standardize

CONDITION_THRESHOLDS = (30.0, 100.0, 1000.0)


@dataclass(frozen=True)
class MoranResult:
    i: float
    expected_i: float
    variance: float
    z_score: float
    p_value: float
    n: int
    weighting: str
    method: str


def inverse_distance_weights(dm) -> np.ndarray:
    """Row-standardized 1/d weights from a distance matrix.

    Off-diagonal zero distances are rejected (use knn_weights for data
    with co-located stations).
    """
    d = np.asarray(getattr(dm, "values", dm), dtype=float)
    n = d.shape[0]
    off = ~np.eye(n, dtype=bool)
    if (d[off] <= 0).any():
        raise ValueError(
            "inverse-distance weights need strictly positive off-diagonal "
            "distances; co-located stations found"
        )
    w = np.zeros_like(d)
    w[off] = 1.0 / d[off]
    return w / w.sum(axis=1, keepdims=True)


def knn_weights(dm, k: int) -> np.ndarray:
    """Row-standardized binary k-nearest-neighbor weights."""
    d = np.asarray(getattr(dm, "values", dm), dtype=float)
    n = d.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must be in [1, n-1], got k={k}, n={n}")
    w = np.zeros_like(d)
    for i in range(n):
        order = np.argsort(d[i], kind="stable")
        nearest = [j for j in order if j != i][:k]
        w[i, nearest] = 1.0
    return w / w.sum(axis=1, keepdims=True)


def morans_i(
    values,
    weights,
    method: str = "normal",
    permutations: int = 999,
    seed: int = 0,
    weighting: str = "custom",
) -> MoranResult:
    """Moran's I with expectation -1/(n-1) and a two-sided p-value.

    `method` 'normal' uses the analytical variance under the normality
    assumption; 'permutation' shuffles the values (seeded).
    Weight rows must sum to one; a row without neighbors is rejected.
    """
    x = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float)
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    if w.shape != (n, n):
        raise ValueError(f"weights must be ({n}, {n}), got {w.shape}")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    row_sums = w.sum(axis=1)
    if (row_sums <= 0).any():
        empty = int(np.argmin(row_sums))
        raise EmptyNeighborhoodError(f"weight row {empty} has no neighbors")
    if np.abs(row_sums - 1.0).max() > 1e-8:
        raise ValueError("weight rows must be standardized to sum to 1")
    z = x - x.mean()
    denom = float(z @ z)
    if denom == 0.0:
        raise ConstantVariableError("values are constant; Moran's I undefined")

    def stat(zv):
        return n / w.sum() * float(zv @ (w @ zv)) / float(zv @ zv)

    observed = stat(z)
    expected = -1.0 / (n - 1)
    s0 = float(w.sum())
    s1 = 0.5 * float(((w + w.T) ** 2).sum())
    s2 = float(((w.sum(axis=1) + w.sum(axis=0)) ** 2).sum())
    variance = (n**2 * s1 - n * s2 + 3 * s0**2) / ((n**2 - 1) * s0**2) - expected**2
    z_score = (observed - expected) / math.sqrt(variance) if variance > 0 else float("nan")
    if method == "normal":
        p_value = math.erfc(abs(z_score) / math.sqrt(2.0)) if variance > 0 else float("nan")
    elif method == "permutation":
        rng = np.random.default_rng(seed)
        count_ge = 0
        count_le = 0
        for _ in range(permutations):
            perm = stat(rng.permutation(z))
            count_ge += perm >= observed
            count_le += perm <= observed
        p_greater = (1 + count_ge) / (permutations + 1)
        p_less = (1 + count_le) / (permutations + 1)
        p_value = min(1.0, 2.0 * min(p_greater, p_less))
    else:
        raise ValueError(f"unknown method {method!r}")
    return MoranResult(
        i=observed,
        expected_i=expected,
        variance=variance,
        z_score=z_score,
        p_value=p_value,
        n=n,
        weighting=weighting,
        method=method,
    )


def moran_scatter(values, weights) -> np.ndarray:
    """(value, spatial lag) pairs for external plotting, as an (n, 2) array."""
    x = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float)
    return np.column_stack([x, w @ x])


@dataclass(frozen=True)
class ConditionReport:
    global_condition: float
    local_conditions: np.ndarray
    thresholds: tuple = CONDITION_THRESHOLDS

    def exceed_counts(self) -> dict:
        return {
            t: int((self.local_conditions > t).sum()) for t in self.thresholds
        }


def _condition_of(X, w) -> float:
    try:
        Z, _, _, _ = weighted_standardize(X, np.zeros(X.shape[0]), w, standardize=True)
    except DegenerateDesignError:
        return float("inf")
    if Z.shape[1] < X.shape[1]:
        return float("inf")  # a column went constant: exact local rank loss
    sv = np.linalg.svd(Z, compute_uv=False)
    if sv.size == 0 or sv[-1] <= sv[0] * 1e-14:
        return float("inf")  # rank deficient at working precision
    return float(sv[0] / sv[-1])


def local_condition_numbers(X, dm, kernel: KernelSpec) -> ConditionReport:
    """Condition numbers of the centered, scaled, kernel-weighted design.

    The global value uses unit weights.  An exactly rank-deficient local
    design reports +inf rather than raising.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    values = np.asarray(getattr(dm, "values", dm), dtype=float)
    local = np.empty(n)
    for i in range(n):
        w = np.asarray(kernel.weights(values[i]), dtype=float)
        local[i] = _condition_of(X, w)
    return ConditionReport(
        global_condition=_condition_of(X, np.ones(n)),
        local_conditions=local,
    )


MODEL_ORDER = ("ols", "gwr", "ada_gwr", "gwl", "ada_gwl")


@dataclass(frozen=True)
class ModelComparison:
    target: str
    rows: tuple  # (model, rmse_loo, r_squared_loo)
    models: dict

    def best(self) -> str:
        return min(self.rows, key=lambda r: r[1])[0]


def compare_models(
    X,
    y,
    euclidean_dm,
    network_dm,
    kernel: str = "gaussian",
    eps: float | None = None,
    station_ids=None,
    feature_names=None,
    target: str = "y",
    s_grid: int = 101,
    standardize: bool = True,
    threads: int = 1,
) -> ModelComparison:
    """Fit the five estimators on shared distance matrices.

    Reported metrics are leave-one-out prediction RMSE and the matching
    R^2 (1 - LOO SSE / SST), so penalized and unpenalized fits compete on
    held-out accuracy rather than raw training fit.  Both distance
    matrices are computed once by the caller and reused across models.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    sst = float(np.sum((y - y.mean()) ** 2))

    def r2_of(rmse_loo):
        return 1.0 - n * rmse_loo**2 / sst if sst > 0 else 0.0

    models = {}
    rows = []

    ols = ols_fit(X, y)
    models["ols"] = ols
    rows.append(("ols", ols.rmse_loo, ols.r_squared_loo))

    for name, dm in (("gwr", euclidean_dm), ("ada_gwr", network_dm)):
        b, rmse_loo = gwr_bandwidth_cv(X, y, dm, family=kernel, eps=eps)
        fit = gwr_fit(X, y, dm, KernelSpec(kernel, b))
        models[name] = fit
        rows.append((name, rmse_loo, r2_of(rmse_loo)))

    for name, dm in (("gwl", euclidean_dm), ("ada_gwl", network_dm)):
        model = fit_ada_gwl(
            X,
            y,
            dm=dm,
            kernel=kernel,
            eps=eps,
            station_ids=station_ids,
            feature_names=feature_names,
            target=target,
            s_grid=s_grid,
            standardize=standardize,
            threads=threads,
        )
        models[name] = model
        rows.append((name, model.cv_rmse, r2_of(model.cv_rmse)))

    ordered = tuple(sorted(rows, key=lambda r: MODEL_ORDER.index(r[0])))
    return ModelComparison(target=target, rows=ordered, models=models)


def comparison_text_table(comparison: ModelComparison) -> str:
    """Aligned human-readable table, 4 significant digits."""
    header = f"{'model':<10} {'rmse_loo':>12} {'r2_loo':>10}"
    lines = [f"target: {comparison.target}", header, "-" * len(header)]
    for name, rmse, r2 in comparison.rows:
        lines.append(f"{name:<10} {rmse:>12.4g} {r2:>10.4g}")
    return "\n".join(lines)
