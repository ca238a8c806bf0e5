"""Transit graph, great-circle and shortest-path distances, centralities.

Stations sit on a weighted undirected graph (edge lengths in km).  Two
distance metrics feed the kernel weighting downstream: straight-line
great-circle distance between coordinates, and shortest-path distance
along the network.  Degree, betweenness, and distance to the city center
are the derived network-structure features.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedGraphError

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class GeoPoint:
    """Latitude / longitude in degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"coordinates must be finite, got ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def great_circle_distance(a: GeoPoint, b: GeoPoint, radius_km: float = EARTH_RADIUS_KM) -> float:
    """Spherical distance in km: radius times the central angle.

    The arccos argument is clamped to [-1, 1] so coincident or antipodal
    points survive floating-point drift.
    """
    if radius_km <= 0:
        raise ValueError(f"radius_km must be positive, got {radius_km}")
    la, lb = math.radians(a.lat), math.radians(b.lat)
    dlon = math.radians(b.lon - a.lon)
    cosang = math.sin(la) * math.sin(lb) + math.cos(la) * math.cos(lb) * math.cos(dlon)
    cosang = min(1.0, max(-1.0, cosang))
    return radius_km * math.acos(cosang)


@dataclass(frozen=True)
class TransitGraph:
    """Undirected station graph with positive edge lengths in km.

    Edges are stored as entered; (r, s) and (s, r) denote the same link and
    both orientations are traversable at equal length.
    """

    nodes: tuple
    edges: tuple

    def __init__(self, nodes, edges):
        nodes = tuple(nodes)
        edges = tuple((str(u), str(v), float(w)) for u, v, w in edges)
        node_set = set(nodes)
        if len(node_set) != len(nodes):
            raise ValueError("duplicate node ids in graph")
        for u, v, w in edges:
            if u not in node_set or v not in node_set:
                missing = u if u not in node_set else v
                raise ValueError(f"edge endpoint {missing!r} is not a graph node")
            if u == v:
                raise ValueError(f"self-loop edge at {u!r}")
            if not math.isfinite(w) or w <= 0:
                raise ValueError(f"edge ({u!r}, {v!r}) has non-positive length {w}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def adjacency(self):
        """node -> sorted list of (neighbor, length); undirected."""
        adj = {node: [] for node in self.nodes}
        for u, v, w in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        for node in adj:
            adj[node].sort()
        return adj


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric n x n station distances with a metric tag."""

    values: np.ndarray
    metric: str
    ids: tuple | None = field(default=None)

    def __post_init__(self):
        if self.metric not in ("euclidean", "network"):
            raise ValueError(f"metric must be 'euclidean' or 'network', got {self.metric!r}")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("distance matrix contains non-finite entries")
        if (values < 0).any():
            raise ValueError("distance matrix contains negative entries")
        if np.abs(np.diag(values)).max(initial=0.0) != 0.0:
            raise ValueError("distance matrix diagonal must be exactly zero")
        if not np.array_equal(values, values.T):
            if np.abs(values - values.T).max() > 1e-9:
                raise ValueError("distance matrix is not symmetric")
            values = 0.5 * (values + values.T)
        if self.ids is not None and len(self.ids) != values.shape[0]:
            raise ValueError("ids length does not match matrix size")
        object.__setattr__(self, "values", values)
        if self.ids is not None:
            object.__setattr__(self, "ids", tuple(self.ids))

    @property
    def n(self) -> int:
        return self.values.shape[0]


def euclidean_distance_matrix(points, radius_km: float = EARTH_RADIUS_KM, ids=None) -> DistanceMatrix:
    """Pairwise great-circle distances for a list of GeoPoints."""
    points = list(points)
    n = len(points)
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    if ids is not None:
        ids = tuple(ids)
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate station ids")
    d = np.zeros((n, n), dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = great_circle_distance(points[i], points[j], radius_km)
    return DistanceMatrix(values=d, metric="euclidean", ids=ids)


def _dijkstra(adj, source, index):
    """Single-source shortest path lengths over a sorted adjacency dict.

    Returns an array of distances indexed by `index` order (inf where
    unreachable).
    """
    n = len(index)
    dist = np.full(n, np.inf)
    s = index[source]
    dist[s] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        ui = index[u]
        if done[ui] or d > dist[ui]:
            continue
        done[ui] = True
        for v, w in adj[u]:
            vi = index[v]
            nd = d + w
            if nd < dist[vi]:
                dist[vi] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def network_distance_matrix(g: TransitGraph, order=None) -> DistanceMatrix:
    """All-pairs shortest-path distances along the network.

    `order` fixes the row/column station order (defaults to the graph's
    node order).  Raises DisconnectedGraphError naming the unreachable
    component when the graph is not connected.
    """
    order = tuple(order) if order is not None else g.nodes
    if set(order) != set(g.nodes):
        raise ValueError("order must be a permutation of the graph nodes")
    index = {node: k for k, node in enumerate(order)}
    adj = g.adjacency()
    n = len(order)
    d = np.zeros((n, n), dtype=float)
    first = _dijkstra(adj, order[0], index)
    if not np.isfinite(first).all():
        unreachable = [order[k] for k in range(n) if not np.isfinite(first[k])]
        raise DisconnectedGraphError(unreachable, source=order[0])
    d[index[order[0]], :] = first
    for node in order[1:]:
        d[index[node], :] = _dijkstra(adj, node, index)
    return DistanceMatrix(values=d, metric="network", ids=order)


def degree_centrality(g: TransitGraph) -> dict:
    """Distinct undirected neighbor count per station."""
    neighbors = {node: set() for node in g.nodes}
    for u, v, _ in g.edges:
        neighbors[u].add(v)
        neighbors[v].add(u)
    return {node: len(neighbors[node]) for node in g.nodes}


def betweenness_centrality(g: TransitGraph) -> dict:
    """Unnormalized shortest-path betweenness over unordered node pairs.

    Tied shortest paths share credit fractionally; endpoints receive no
    credit for their own pair.  Tie detection compares accumulated path
    lengths exactly, which matches graphs whose ties are arithmetic
    identities.
    """
    order = g.nodes
    index = {node: k for k, node in enumerate(order)}
    adj = g.adjacency()
    n = len(order)
    cb = np.zeros(n)
    reached = n
    for source in order:
        dist = np.full(n, np.inf)
        sigma = np.zeros(n)
        preds = [[] for _ in range(n)]
        done = np.zeros(n, dtype=bool)
        s = index[source]
        dist[s] = 0.0
        sigma[s] = 1.0
        heap = [(0.0, source)]
        settled = []
        while heap:
            d, u = heapq.heappop(heap)
            ui = index[u]
            if done[ui] or d > dist[ui]:
                continue
            done[ui] = True
            settled.append(ui)
            for v, w in adj[u]:
                vi = index[v]
                nd = d + w
                if nd < dist[vi]:
                    dist[vi] = nd
                    sigma[vi] = sigma[ui]
                    preds[vi] = [ui]
                    heapq.heappush(heap, (nd, v))
                elif nd == dist[vi]:
                    sigma[vi] += sigma[ui]
                    preds[vi].append(ui)
        reached = min(reached, len(settled))
        delta = np.zeros(n)
        for wi in reversed(settled):
            for vi in preds[wi]:
                delta[vi] += sigma[vi] / sigma[wi] * (1.0 + delta[wi])
            if wi != s:
                cb[wi] += delta[wi]
    if reached < n:
        first = _dijkstra(adj, order[0], index)
        unreachable = [order[k] for k in range(n) if not np.isfinite(first[k])]
        raise DisconnectedGraphError(unreachable or ["<unknown>"], source=order[0])
    cb /= 2.0  # each unordered pair was visited from both endpoints
    return {node: float(cb[index[node]]) for node in order}


def distance_to_center(points, center: GeoPoint, radius_km: float = EARTH_RADIUS_KM) -> np.ndarray:
    """Great-circle distance of each station to a fixed center point."""
    return np.array([great_circle_distance(p, center, radius_km) for p in points])
