"""Synthetic station networks and planted-truth datasets for testing.

The switchback network folds each line back and forth inside a narrow
sector, so stations on adjacent passes are a few hundred meters apart in
straight-line distance but many kilometers apart along the track.  That
is exactly the regime where network-distance kernels and straight-line
kernels disagree.

Coefficient fields are smoothed over the graph Laplacian, making them
correlated along the network rather than across it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import EARTH_RADIUS_KM, GeoPoint, TransitGraph, great_circle_distance


@dataclass(frozen=True)
class SyntheticData:
    ids: tuple
    points: tuple
    graph: TransitGraph | None
    feature_names: tuple
    X: np.ndarray
    y: np.ndarray
    intercept_field: np.ndarray  # per-station true intercept
    slope_fields: np.ndarray  # (n, p) true slopes
    support: np.ndarray  # bool (p,), True where the slope is ever nonzero
    noise_sd: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def planar_to_geo(xy_km, center=(30.0, 110.0), radius_km: float = EARTH_RADIUS_KM):
    """Map local planar km offsets to lat/lon around a center point."""
    lat0, lon0 = center
    km_per_deg = math.pi * radius_km / 180.0
    pts = []
    for x, y in np.asarray(xy_km, dtype=float):
        lat = lat0 + y / km_per_deg
        lon = lon0 + x / (km_per_deg * math.cos(math.radians(lat0)))
        pts.append(GeoPoint(lat, lon))
    return tuple(pts)


def make_switchback_network(
    line_sizes=(24, 24, 23, 23, 23),
    pass_len: int = 6,
    step_km: float = 1.0,
    gap_km: float = 0.35,
    hub_offset_km: float = 2.0,
    center=(30.0, 110.0),
    jitter_km: float = 0.02,
    seed: int = 0,
):
    """Hub-and-switchback network: one hub station plus one folded line per
    entry of `line_sizes`.  Returns (ids, points, graph); edge lengths are
    the great-circle distances between adjacent stations.

    Total stations = 1 + sum(line_sizes).
    """
    rng = np.random.default_rng(seed)
    n_lines = len(line_sizes)
    xy = [(0.0, 0.0)]
    names = ["hub"]
    chains = []  # per line, the station names in track order
    for line, size in enumerate(line_sizes):
        phi = 2.0 * math.pi * line / n_lines
        u = np.array([math.cos(phi), math.sin(phi)])
        v = np.array([-math.sin(phi), math.cos(phi)])
        chain = []
        for t in range(size):
            j, pos = divmod(t, pass_len)
            along = pos if j % 2 == 0 else pass_len - 1 - pos
            base = (hub_offset_km + along * step_km) * u + (j * gap_km) * v
            base = base + rng.normal(0.0, jitter_km, size=2)
            name = f"l{line + 1}s{t + 1:02d}"
            names.append(name)
            xy.append((base[0], base[1]))
            chain.append(name)
        chains.append(chain)
    points = planar_to_geo(xy, center=center)
    pos = {name: pt for name, pt in zip(names, points)}
    edges = []
    for chain in chains:
        edges.append(("hub", chain[0], great_circle_distance(pos["hub"], pos[chain[0]])))
        for a, b in zip(chain, chain[1:]):
            edges.append((a, b, great_circle_distance(pos[a], pos[b])))
    order = np.argsort(names, kind="stable")
    ids = tuple(names[k] for k in order)
    points = tuple(points[k] for k in order)
    graph = TransitGraph(nodes=ids, edges=edges)
    return ids, points, graph


def laplacian_smooth_fields(graph: TransitGraph, ids, n_fields: int, tau: float, seed: int):
    """Gaussian fields smoothed by (I + tau L)^-1 over the unit-weight
    graph Laplacian, then normalized to zero mean and unit variance.
    Smooth along the track, rough across folds."""
    rng = np.random.default_rng(seed)
    index = {sid: k for k, sid in enumerate(ids)}
    n = len(ids)
    L = np.zeros((n, n))
    for u, v, _ in graph.edges:
        i, j = index[u], index[v]
        L[i, i] += 1.0
        L[j, j] += 1.0
        L[i, j] -= 1.0
        L[j, i] -= 1.0
    A = np.eye(n) + tau * L
    g = rng.standard_normal((n, n_fields))
    fields = np.linalg.solve(A, g)
    fields -= fields.mean(axis=0)
    std = fields.std(axis=0)
    fields /= np.where(std > 0, std, 1.0)
    return fields


def _names(p: int, width: int = 2) -> tuple:
    return tuple(f"x{k + 1:0{width}d}" for k in range(p))


def make_fixture_f0(n: int = 60, seed: int = 101) -> SyntheticData:
    """Well-conditioned global-linear data: n=60, p=5, no graph."""
    rng = np.random.default_rng(seed)
    p = 5
    xy = rng.uniform(-10.0, 10.0, size=(n, 2))
    points = planar_to_geo(xy)
    ids = tuple(f"s{k + 1:03d}" for k in range(n))
    X = rng.standard_normal((n, p))
    beta = np.array([2.0, -1.0, 0.5, 1.0, -2.0])
    noise_sd = 0.5
    y = 1.5 + X @ beta + noise_sd * rng.standard_normal(n)
    return SyntheticData(
        ids=ids,
        points=points,
        graph=None,
        feature_names=_names(p, width=1),
        X=X,
        y=y,
        intercept_field=np.full(n, 1.5),
        slope_fields=np.tile(beta, (n, 1)),
        support=beta != 0,
        noise_sd=noise_sd,
    )


def make_fixture_f1(seed: int = 211, noise_scale: float = 0.35) -> SyntheticData:
    """118-station, 5-line switchback network with sparse, spatially
    varying slopes whose variation follows the network, not the plane.

    8 of 14 slopes are active; active slopes and the intercept are
    Laplacian-smooth fields.  Noise sd is `noise_scale` times the signal
    standard deviation.
    """
    ids, points, graph = make_switchback_network(seed=seed)
    n = len(ids)
    p = 14
    rng = np.random.default_rng(seed + 1)
    X = rng.standard_normal((n, p))
    support = np.zeros(p, dtype=bool)
    support[:8] = True
    fields = laplacian_smooth_fields(graph, ids, n_fields=9, tau=25.0, seed=seed + 2)
    slope_fields = np.zeros((n, p))
    amplitudes = np.array([2.0, -1.6, 1.2, 1.0, -0.9, 0.8, 0.7, -0.6])
    for k in range(8):
        slope_fields[:, k] = amplitudes[k] * (1.0 + 0.5 * fields[:, k])
    intercept_field = 3.0 * fields[:, 8]
    signal = intercept_field + np.einsum("ij,ij->i", X, slope_fields)
    noise_sd = float(noise_scale * signal.std())
    y = signal + noise_sd * rng.standard_normal(n)
    return SyntheticData(
        ids=ids,
        points=points,
        graph=graph,
        feature_names=_names(p),
        X=X,
        y=y,
        intercept_field=intercept_field,
        slope_fields=slope_fields,
        support=support,
        noise_sd=noise_sd,
    )


def make_fixture_f2(seed: int = 307) -> SyntheticData:
    """Zero-noise data on the switchback network with spatially constant
    sparse slopes: 6 of 14 are exactly zero everywhere."""
    ids, points, graph = make_switchback_network(seed=seed)
    n = len(ids)
    p = 14
    rng = np.random.default_rng(seed + 1)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:8] = [3.0, -2.0, 1.5, 2.5, -1.0, 1.0, 2.0, -1.5]
    y = 2.0 + X @ beta
    return SyntheticData(
        ids=ids,
        points=points,
        graph=graph,
        feature_names=_names(p),
        X=X,
        y=y,
        intercept_field=np.full(n, 2.0),
        slope_fields=np.tile(beta, (n, 1)),
        support=beta != 0,
        noise_sd=0.0,
    )


def make_profile_blobs(
    n: int = 40, k: int = 4, p: int = 8, sep: float = 12.0, within: float = 0.5, seed: int = 5
):
    """Well-separated coefficient-profile blobs; returns (profiles, labels)."""
    if k > p:
        raise ValueError(f"need p >= k to place orthogonal centers, got k={k}, p={p}")
    rng = np.random.default_rng(seed)
    centers = sep * np.eye(k, p)  # pairwise distance sep * sqrt(2)
    labels = np.arange(n) % k
    profiles = centers[labels] + within * rng.standard_normal((n, p))
    return profiles, labels
