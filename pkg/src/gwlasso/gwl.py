"""Two-phase geographically weighted lasso estimator.

Phase 1 selects the kernel bandwidth by leave-one-out cross-validation:
at every station the self-weight is zeroed, a full lasso path is fit on
the kernel-weighted design, and the path point that best predicts the
held-out station is kept.  The bandwidth search brackets the minimum of
the resulting CV error curve.  Phase 2 refits each station's path with
the full weights (self-weight kept) and reads off the solution at the
shrinkage fraction remembered from Phase 1.

With a straight-line distance matrix this is the plain geographically
weighted lasso (GWL); with shortest-path distances along the transit
network it is the network-adapted variant (Ada-GWL).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesignError, NumericalRankLossError, RankDeficientError
from .gwr import FitMetrics, fit_metrics, ols_fit
from .kernels import KernelSpec, weight_vector
from .lars import lars_path, solution_at
from .network import euclidean_distance_matrix, network_distance_matrix
from .search import interval_search

MODEL_FORMAT_VERSION = 1
DEFAULT_S_GRID = 101


def default_bandwidth_bounds(dm) -> tuple:
    """Search bracket from the distance matrix: the upper bound is the
    ceiling of the largest distance, the lower bound is the smallest
    positive distance plus 1% of the upper bound (the raw minimum is
    always the zero diagonal, which would be unusable)."""
    values = getattr(dm, "values", dm)
    ub = float(math.ceil(values.max()))
    positive = values[values > 0]
    if ub <= 0 or positive.size == 0:
        # all stations co-located: any bandwidth gives uniform weights
        return 0.01, 1.0
    lb = float(positive.min()) + 0.01 * ub
    if lb >= ub:
        lb = ub / 2.0
    return lb, ub


def default_eps(X, y, lb: float, ub: float) -> float:
    """Search stop width: 5% of the global OLS error, floored so that a
    perfectly linear (zero-residual) response cannot stall the search."""
    floor = max(1e-9, 1e-6 * (ub - lb))
    try:
        rmse = ols_fit(X, y).metrics.rmse
    except RankDeficientError:
        return max(floor, 1e-3 * (ub - lb))
    return max(0.05 * rmse, floor)


def _map_stations(fn, n: int, threads: int):
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _candidate_fractions(path, s_grid: int) -> np.ndarray:
    grid = np.linspace(0.0, 1.0, s_grid)
    L = path.final_l1
    if L <= 0:
        return grid
    knot_fracs = np.array([k.l1 / L for k in path.knots])
    return np.unique(np.concatenate([grid, np.clip(knot_fracs, 0.0, 1.0)]))


def _select_on_path(path, x_row, y_held, s_grid: int):
    """Best path point for one held-out response.

    Candidates are the knots plus a uniform grid of shrinkage fractions;
    predictions at intermediate fractions interpolate linearly between the
    knot predictions.  Ties go to the smallest fraction.
    Returns (s_frac, prediction, solution).
    """
    record = path.standardization
    zrow = np.zeros(record.kept.shape[0])
    zrow[record.kept] = (
        (np.asarray(x_row, dtype=float) - record.feature_means)[record.kept]
        / record.feature_scales[record.kept]
    )
    ybar = record.response_mean
    L = path.final_l1
    if L <= 0:
        sol = solution_at(path, 0.0)
        return 0.0, ybar + float(sol.standardized @ zrow), sol
    fracs = _candidate_fractions(path, s_grid)
    l1s = np.array([k.l1 for k in path.knots])
    knot_preds = ybar + np.array([k.coef @ zrow for k in path.knots])
    preds = np.interp(fracs * L, l1s, knot_preds)
    errs = (y_held - preds) ** 2
    best = int(np.argmin(errs))
    s_frac = float(fracs[best])
    sol = solution_at(path, s_frac)
    return s_frac, ybar + float(sol.standardized @ zrow), sol


@dataclass(frozen=True)
class LocalLarsResult:
    """Per-station CV selection at one bandwidth."""

    s: np.ndarray  # shrinkage fraction per station
    zero_mask: np.ndarray  # (n, p) bool, True where a slope is exactly zero
    loo_pred: np.ndarray
    cv_rmse: float
    fallback_stations: tuple  # stations fitted intercept-only


def local_lars(
    b: float,
    X,
    y,
    dm,
    family: str = "gaussian",
    s_grid: int = DEFAULT_S_GRID,
    standardize: bool = True,
    threads: int = 1,
) -> LocalLarsResult:
    """One CV sweep: lasso path per station with the self-weight zeroed,
    best path point selected against the held-out response."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    values = getattr(dm, "values", dm)
    spec = KernelSpec(family, b)

    def fit_station(i):
        w = weight_vector(values, i, spec, leave_one_out=True).values
        try:
            path = lars_path(X, y, weights=w, standardize=standardize)
        except DegenerateDesignError:
            w_tot = float(w.sum())
            pred = float(w @ y) / w_tot if w_tot > 0 else float(y.mean())
            return 0.0, np.ones(p, dtype=bool), pred, True
        s_frac, pred, sol = _select_on_path(path, X[i], y[i], s_grid)
        return s_frac, sol.zero_mask, pred, False

    rows = _map_stations(fit_station, n, threads)
    s = np.array([r[0] for r in rows])
    zero_mask = np.array([r[1] for r in rows])
    loo_pred = np.array([r[2] for r in rows])
    fallback = tuple(i for i, r in enumerate(rows) if r[3])
    cv_rmse = float(np.sqrt(np.mean((y - loo_pred) ** 2)))
    return LocalLarsResult(
        s=s, zero_mask=zero_mask, loo_pred=loo_pred, cv_rmse=cv_rmse,
        fallback_stations=fallback,
    )


def bandwidth_selector(
    lb: float,
    ub: float,
    eps: float,
    X,
    y,
    dm,
    family: str = "gaussian",
    s_grid: int = DEFAULT_S_GRID,
    standardize: bool = True,
    threads: int = 1,
):
    """Interval search for the bandwidth with the lowest CV error of the
    per-station lasso selections.  Returns (bandwidth, cv_rmse)."""

    def err_fn(b):
        return local_lars(
            b, X, y, dm, family, s_grid=s_grid, standardize=standardize, threads=threads
        ).cv_rmse

    result = interval_search(err_fn, lb, ub, eps)
    return result.bandwidth, result.error


@dataclass(frozen=True)
class AdaGwlModel:
    """Fitted geographically weighted lasso."""

    station_ids: tuple
    feature_names: tuple
    metric: str
    kernel: str
    bandwidth: float
    coefficients: np.ndarray  # (n, p+1), intercept first
    s: np.ndarray
    zero_mask: np.ndarray  # (n, p), Phase-2 zero indicators
    fitted: np.ndarray
    metrics: FitMetrics
    cv_rmse: float
    eps: float
    search_bounds: tuple
    fallback_stations: tuple
    standardizations: tuple | None = None
    target: str | None = None

    @property
    def n(self) -> int:
        return self.coefficients.shape[0]

    @property
    def p(self) -> int:
        return self.coefficients.shape[1] - 1

    def station_index(self, station) -> int:
        if isinstance(station, (int, np.integer)):
            idx = int(station)
            if not 0 <= idx < self.n:
                raise IndexError(f"station index {idx} out of range for n={self.n}")
            return idx
        try:
            return self.station_ids.index(str(station))
        except ValueError:
            raise KeyError(f"unknown station id {station!r}") from None


def _predict_row(intercept: float, slopes: np.ndarray, features) -> float:
    x = np.asarray(features, dtype=float).ravel()
    if x.shape[0] != slopes.shape[0]:
        raise ValueError(
            f"feature vector has length {x.shape[0]}, model expects {slopes.shape[0]}"
        )
    return float(intercept + x @ slopes)


def predict(model: AdaGwlModel, station, features) -> float:
    """Local prediction: the station's intercept plus its slopes applied
    to the feature vector."""
    i = model.station_index(station)
    return _predict_row(model.coefficients[i, 0], model.coefficients[i, 1:], features)


def _default_names(p: int) -> tuple:
    width = len(str(p))
    return tuple(f"x{k + 1:0{width}d}" for k in range(p))


def fit_ada_gwl(
    X,
    y,
    coords=None,
    graph=None,
    dm=None,
    metric: str = "network",
    kernel: str = "gaussian",
    eps: float | None = None,
    radius_km: float | None = None,
    station_ids=None,
    feature_names=None,
    target: str | None = None,
    s_grid: int = DEFAULT_S_GRID,
    standardize: bool = True,
    threads: int = 1,
) -> AdaGwlModel:
    """Fit the full two-phase estimator.

    Distances come from `dm` if given, otherwise from `graph` (metric
    'network') or `coords` (metric 'euclidean').  `eps` overrides the
    OLS-derived search stop width.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"X has {n} rows but y has {y.shape[0]}")
    if dm is None:
        if metric == "network":
            if graph is None:
                raise ValueError("metric 'network' requires a graph")
            dm = network_distance_matrix(graph, order=station_ids)
        elif metric == "euclidean":
            if coords is None:
                raise ValueError("metric 'euclidean' requires coordinates")
            kwargs = {"ids": station_ids}
            if radius_km is not None:
                kwargs["radius_km"] = radius_km
            dm = euclidean_distance_matrix(coords, **kwargs)
        else:
            raise ValueError(f"unknown metric {metric!r}")
    else:
        metric = getattr(dm, "metric", metric)
    values = getattr(dm, "values", dm)
    if values.shape[0] != n:
        raise ValueError(
            f"distance matrix is {values.shape[0]}x{values.shape[0]} but data has {n} rows"
        )
    if station_ids is None:
        station_ids = getattr(dm, "ids", None) or tuple(str(i) for i in range(n))
    station_ids = tuple(str(s) for s in station_ids)
    feature_names = tuple(feature_names) if feature_names is not None else _default_names(p)
    if len(feature_names) != p:
        raise ValueError(f"{len(feature_names)} feature names for {p} columns")

    # Phase 1: bandwidth and per-station shrinkage by LOO-CV
    lb, ub = default_bandwidth_bounds(values)
    eps_used = float(eps) if eps is not None else default_eps(X, y, lb, ub)
    if eps_used <= 0:
        raise ValueError(f"eps must be positive, got {eps_used}")
    bandwidth, _ = bandwidth_selector(
        lb, ub, eps_used, X, y, values, kernel,
        s_grid=s_grid, standardize=standardize, threads=threads,
    )
    phase1 = local_lars(
        bandwidth, X, y, values, kernel,
        s_grid=s_grid, standardize=standardize, threads=threads,
    )

    # Phase 2: refit with full weights at the remembered shrinkage fractions
    spec = KernelSpec(kernel, bandwidth)

    def refit_station(i):
        w = weight_vector(values, i, spec, leave_one_out=False).values
        try:
            path = lars_path(X, y, weights=w, standardize=standardize)
        except DegenerateDesignError:
            w_tot = float(w.sum())
            ybar = float(w @ y) / w_tot if w_tot > 0 else float(y.mean())
            return ybar, np.zeros(p), np.ones(p, dtype=bool), None, True
        except NumericalRankLossError as exc:
            raise NumericalRankLossError(f"station {station_ids[i]}: {exc}") from exc
        sol = solution_at(path, float(phase1.s[i]))
        return sol.intercept, sol.slopes, sol.zero_mask, path.standardization, False

    rows = _map_stations(refit_station, n, threads)
    coefficients = np.empty((n, p + 1))
    zero_mask = np.empty((n, p), dtype=bool)
    records = []
    fallback = list(phase1.fallback_stations)
    for i, (intercept, slopes, zmask, record, fell_back) in enumerate(rows):
        coefficients[i, 0] = intercept
        coefficients[i, 1:] = slopes
        zero_mask[i] = zmask
        records.append(record)
        if fell_back and i not in fallback:
            fallback.append(i)
    fitted = np.array(
        [_predict_row(coefficients[i, 0], coefficients[i, 1:], X[i]) for i in range(n)]
    )
    return AdaGwlModel(
        station_ids=station_ids,
        feature_names=feature_names,
        metric=metric,
        kernel=kernel,
        bandwidth=float(bandwidth),
        coefficients=coefficients,
        s=phase1.s.copy(),
        zero_mask=zero_mask,
        fitted=fitted,
        metrics=fit_metrics(y, fitted),
        cv_rmse=phase1.cv_rmse,
        eps=eps_used,
        search_bounds=(lb, ub),
        fallback_stations=tuple(sorted(fallback)),
        standardizations=tuple(records),
        target=target,
    )


def model_to_dict(model: AdaGwlModel, config: dict | None = None) -> dict:
    ids = model.station_ids
    names = model.feature_names
    coefficients = {}
    s = {}
    zero = {}
    fitted = {}
    for i, sid in enumerate(ids):
        coefficients[sid] = {
            "intercept": float(model.coefficients[i, 0]),
            "slopes": {
                name: float(model.coefficients[i, 1 + k]) for k, name in enumerate(names)
            },
        }
        s[sid] = float(model.s[i])
        zero[sid] = [bool(v) for v in model.zero_mask[i]]
        fitted[sid] = float(model.fitted[i])
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "metric": model.metric,
        "kernel": model.kernel,
        "bandwidth": model.bandwidth,
        "eps": model.eps,
        "search_bounds": list(model.search_bounds),
        "target": model.target,
        "station_ids": list(ids),
        "feature_names": list(names),
        "coefficients": coefficients,
        "s": s,
        "zero": zero,
        "fitted": fitted,
        "metrics": {
            "rmse": model.metrics.rmse,
            "r_squared": model.metrics.r_squared,
            "sst_zero": model.metrics.sst_zero,
            "cv_rmse": model.cv_rmse,
        },
        "fallback_stations": [ids[i] for i in model.fallback_stations],
    }
    if config is not None:
        doc["config"] = config
    return doc


def save_model(model: AdaGwlModel, path, config: dict | None = None) -> None:
    """Serialize to JSON atomically (write to a temp file, then rename)."""
    doc = model_to_dict(model, config)
    text = json.dumps(doc, indent=2, sort_keys=True)
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path) -> AdaGwlModel:
    """Rebuild a model from JSON; predictions match the saved model exactly
    because JSON floats round-trip bit-for-bit."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"unsupported model format_version {doc.get('format_version')!r}"
        )
    ids = tuple(doc["station_ids"])
    names = tuple(doc["feature_names"])
    n, p = len(ids), len(names)
    coefficients = np.empty((n, p + 1))
    zero_mask = np.empty((n, p), dtype=bool)
    s = np.empty(n)
    fitted = np.empty(n)
    for i, sid in enumerate(ids):
        entry = doc["coefficients"][sid]
        coefficients[i, 0] = entry["intercept"]
        coefficients[i, 1:] = [entry["slopes"][name] for name in names]
        zero_mask[i] = doc["zero"][sid]
        s[i] = doc["s"][sid]
        fitted[i] = doc["fitted"][sid]
    metrics = FitMetrics(
        rmse=doc["metrics"]["rmse"],
        r_squared=doc["metrics"]["r_squared"],
        sst_zero=doc["metrics"]["sst_zero"],
    )
    index = {sid: i for i, sid in enumerate(ids)}
    return AdaGwlModel(
        station_ids=ids,
        feature_names=names,
        metric=doc["metric"],
        kernel=doc["kernel"],
        bandwidth=doc["bandwidth"],
        coefficients=coefficients,
        s=s,
        zero_mask=zero_mask,
        fitted=fitted,
        metrics=metrics,
        cv_rmse=doc["metrics"]["cv_rmse"],
        eps=doc["eps"],
        search_bounds=tuple(doc["search_bounds"]),
        fallback_stations=tuple(index[sid] for sid in doc["fallback_stations"]),
        standardizations=None,
        target=doc.get("target"),
    )
