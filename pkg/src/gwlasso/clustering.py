"""Clustering stations by their local coefficient profiles.

Slope vectors are scaled per station, grouped with seeded k-means, and the
cluster count picked by the elbow of the within-cluster sum of squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCALE_MODES = ("station", "variable", "none")


def scale_profiles(model_or_slopes, mode: str = "station"):
    """Scaled slope profiles, one row per station.

    Modes: 'station' z-scores each station's slopes across its own
    coefficients (population std), 'variable' z-scores each column across
    stations, 'none' passes slopes through.  Stations whose profile has
    zero variance come back as all zeros and are flagged.

    Accepts a fitted model (slopes taken from its coefficient matrix,
    intercepts excluded) or a plain (n, p) array.
    Returns (profiles, zero_variance_flags).
    """
    if hasattr(model_or_slopes, "coefficients"):
        slopes = np.asarray(model_or_slopes.coefficients, dtype=float)[:, 1:]
    else:
        slopes = np.asarray(model_or_slopes, dtype=float)
    if slopes.ndim != 2:
        raise ValueError(f"expected a 2-D slope matrix, got shape {slopes.shape}")
    if mode not in SCALE_MODES:
        raise ValueError(f"mode must be one of {SCALE_MODES}, got {mode!r}")
    n = slopes.shape[0]
    flags = np.zeros(n, dtype=bool)
    if mode == "none":
        return slopes.copy(), flags
    if mode == "variable":
        mean = slopes.mean(axis=0)
        std = slopes.std(axis=0)
        safe = np.where(std > 0, std, 1.0)
        out = (slopes - mean) / safe
        out[:, std == 0] = 0.0
        return out, flags
    out = np.empty_like(slopes)
    for i in range(n):
        mean = slopes[i].mean()
        std = slopes[i].std()
        if std == 0:
            out[i] = 0.0
            flags[i] = True
        else:
            out[i] = (slopes[i] - mean) / std
    return out, flags


@dataclass(frozen=True)
class ClusterResult:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    wcss: float
    n_iter: int


def _wcss_of(points, centroids, labels) -> float:
    return float(((points - centroids[labels]) ** 2).sum())


def _kmeans_pp_init(points, k, rng):
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))  # all remaining points coincide
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[c] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[c]) ** 2).sum(axis=1))
    return centroids


def _lloyd(points, centroids, max_iter):
    n = points.shape[0]
    k = centroids.shape[0]
    centroids = centroids.copy()
    labels = None
    prev_wcss = np.inf
    for it in range(1, max_iter + 1):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        reassigned = False
        for c in range(k):  # an emptied cluster grabs the worst-fit point
            if not (new_labels == c).any():
                worst = int(d2[np.arange(n), new_labels].argmax())
                new_labels[worst] = c
                reassigned = True
        wcss = _wcss_of(points, centroids, new_labels)
        # forced reassignments may bump the objective; plain Lloyd steps may not
        if not reassigned and wcss > prev_wcss + 1e-9 * max(1.0, prev_wcss):
            raise AssertionError(
                f"k-means objective increased at iteration {it}: {prev_wcss} -> {wcss}"
            )
        prev_wcss = wcss
        if labels is not None and (new_labels == labels).all():
            labels = new_labels
            break
        labels = new_labels
        for c in range(k):
            centroids[c] = points[labels == c].mean(axis=0)
    final = _wcss_of(points, centroids, labels)
    if final > prev_wcss + 1e-9 * max(1.0, prev_wcss):
        raise AssertionError("k-means objective increased on the final update")
    return labels, centroids, final, it


def kmeans(
    profiles,
    k: int,
    seed: int = 0,
    n_init: int = 10,
    max_iter: int = 300,
    init_centroids=None,
) -> ClusterResult:
    """Seeded k-means++ with Lloyd iterations.

    Runs `n_init` restarts and keeps the lowest objective (ties to the
    earliest restart).  `init_centroids` adds one extra run from a fixed
    starting configuration.
    """
    points = np.asarray(profiles, dtype=float)
    if points.ndim != 2:
        raise ValueError(f"profiles must be 2-D, got shape {points.shape}")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, n={n}], got {k}")
    rng = np.random.default_rng(seed)
    best = None
    starts = [_kmeans_pp_init(points, k, rng) for _ in range(n_init)]
    if init_centroids is not None:
        starts.append(np.asarray(init_centroids, dtype=float))
    for centroids0 in starts:
        labels, centroids, wcss, n_iter = _lloyd(points, centroids0, max_iter)
        if best is None or wcss < best.wcss:
            best = ClusterResult(
                k=k, labels=labels, centroids=centroids, wcss=wcss, n_iter=n_iter
            )
    return best


@dataclass(frozen=True)
class ChooseKResult:
    k: int
    wcss_curve: tuple  # (k, wcss) pairs over the evaluated range
    weak_elbow: bool
    results: dict


def choose_k(profiles, k_range=(1, 10), seed: int = 0, n_init: int = 10) -> ChooseKResult:
    """Elbow selection: the K with the largest second difference of the
    WCSS curve, i.e. where the marginal improvement collapses.

    Each K also starts one run from the previous best solution plus the
    worst-fit point as an extra centroid, which forces the curve to be
    non-increasing in K.  A weak elbow (largest second difference fails
    to dominate the runner-up by 2x) is flagged rather than hidden.
    """
    points = np.asarray(profiles, dtype=float)
    n = points.shape[0]
    ks = list(range(k_range[0], k_range[1] + 1))
    if len(ks) < 3:
        raise ValueError(f"k range {k_range} has fewer than 3 values")
    if ks[0] < 1 or ks[-1] > n:
        raise ValueError(f"k range {k_range} outside [1, n={n}]")
    results = {}
    wcss = []
    prev = None
    for k in ks:
        seeded = None
        if prev is not None and k == prev.k + 1:
            d2 = ((points - prev.centroids[prev.labels]) ** 2).sum(axis=1)
            extra = points[int(d2.argmax())]
            seeded = np.vstack([prev.centroids, extra])
        res = kmeans(points, k, seed=seed, n_init=n_init, init_centroids=seeded)
        results[k] = res
        wcss.append(res.wcss)
        prev = res
    curve = np.array(wcss)
    second = curve[:-2] - 2 * curve[1:-1] + curve[2:]  # indexed by interior ks
    order = np.argsort(second, kind="stable")[::-1]
    best_pos = int(order[0])
    k_best = ks[best_pos + 1]
    runner_up = second[order[1]] if len(order) > 1 else 0.0
    weak = not (second[best_pos] > 0 and second[best_pos] >= 2.0 * max(runner_up, 0.0))
    return ChooseKResult(
        k=k_best,
        wcss_curve=tuple(zip(ks, wcss)),
        weak_elbow=bool(weak),
        results=results,
    )
