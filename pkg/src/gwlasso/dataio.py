"""CSV ingestion and the station dataset container.

Station rows are canonicalized to lexicographic id order as soon as they
are read, so every matrix downstream is independent of file row order.
Missing or non-numeric cells are errors, never imputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DataValidationError,
    DuplicateStationIdError,
    MissingColumnError,
    NonNumericCellError,
    NonPositiveLengthError,
    UnknownStationError,
)
from .network import (
    EARTH_RADIUS_KM,
    GeoPoint,
    TransitGraph,
    betweenness_centrality,
    degree_centrality,
    distance_to_center,
)

NETWORK_FEATURE_NAMES = ("Degree", "Betweenness", "Dis_to_center")


@dataclass(frozen=True)
class StationDataset:
    """Per-station coordinates, features, and one or more ridership targets."""

    ids: tuple
    lats: np.ndarray
    lons: np.ndarray
    feature_names: tuple
    features: np.ndarray  # (n, p)
    target_names: tuple
    targets: np.ndarray  # (n, t)

    def __post_init__(self):
        n = len(self.ids)
        if len(set(self.ids)) != n:
            raise DuplicateStationIdError("duplicate station ids in dataset")
        if self.features.shape != (n, len(self.feature_names)):
            raise DataValidationError("feature matrix shape mismatch")
        if self.targets.shape != (n, len(self.target_names)):
            raise DataValidationError("target matrix shape mismatch")
        if list(self.ids) != sorted(self.ids):
            raise DataValidationError("station ids must be in canonical sorted order")

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def p(self) -> int:
        return len(self.feature_names)

    @property
    def points(self) -> tuple:
        return tuple(GeoPoint(lat, lon) for lat, lon in zip(self.lats, self.lons))

    def target(self, name: str) -> np.ndarray:
        if name not in self.target_names:
            raise MissingColumnError(
                f"unknown target {name!r}; dataset has {list(self.target_names)}"
            )
        return self.targets[:, self.target_names.index(name)].copy()


def dataset_from_arrays(ids, points, feature_names, X, target_names, targets) -> StationDataset:
    """Build a dataset from in-memory arrays, canonicalizing station order."""
    ids = [str(s) for s in ids]
    order = sorted(range(len(ids)), key=lambda k: ids[k])
    X = np.asarray(X, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    return StationDataset(
        ids=tuple(ids[k] for k in order),
        lats=np.array([points[k].lat for k in order]),
        lons=np.array([points[k].lon for k in order]),
        feature_names=tuple(feature_names),
        features=X[order],
        target_names=tuple(target_names),
        targets=targets[order],
    )


def _parse_cell(raw, row_num, column):
    text = (raw or "").strip()
    if text == "":
        raise NonNumericCellError(f"row {row_num}, column {column!r}: missing value")
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCellError(
            f"row {row_num}, column {column!r}: non-numeric value {text!r}"
        ) from None
    if not np.isfinite(value):
        raise NonNumericCellError(
            f"row {row_num}, column {column!r}: non-finite value {text!r}"
        )
    return value


def load_stations(path, target_names, feature_names=None) -> StationDataset:
    """Read the station CSV: header station_id,lat,lon plus feature and
    target columns.  Target columns must be declared; features default to
    every remaining column in header order."""
    target_names = tuple(target_names)
    if not target_names:
        raise MissingColumnError("at least one target column must be declared")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise MissingColumnError(f"{path}: empty file, header required")
        for col in ("station_id", "lat", "lon"):
            if col not in header:
                raise MissingColumnError(f"{path}: missing required column {col!r}")
        for col in target_names:
            if col not in header:
                raise MissingColumnError(f"{path}: declared target {col!r} not in header")
        if feature_names is None:
            reserved = {"station_id", "lat", "lon", *target_names}
            feature_names = tuple(c for c in header if c not in reserved)
        else:
            feature_names = tuple(feature_names)
            for col in feature_names:
                if col not in header:
                    raise MissingColumnError(f"{path}: declared feature {col!r} not in header")
        overlap = set(feature_names) & set(target_names)
        if overlap:
            raise DataValidationError(f"columns declared as both feature and target: {sorted(overlap)}")
        ids, lats, lons, feats, targs = [], [], [], [], []
        seen = {}
        for row_num, row in enumerate(reader, start=2):
            sid = (row.get("station_id") or "").strip()
            if not sid:
                raise DataValidationError(f"row {row_num}: empty station_id")
            if sid in seen:
                raise DuplicateStationIdError(
                    f"row {row_num}: duplicate station id {sid!r} (first at row {seen[sid]})"
                )
            seen[sid] = row_num
            lat = _parse_cell(row.get("lat"), row_num, "lat")
            lon = _parse_cell(row.get("lon"), row_num, "lon")
            try:
                GeoPoint(lat, lon)
            except ValueError as exc:
                raise DataValidationError(f"row {row_num}: {exc}") from None
            ids.append(sid)
            lats.append(lat)
            lons.append(lon)
            feats.append([_parse_cell(row.get(c), row_num, c) for c in feature_names])
            targs.append([_parse_cell(row.get(c), row_num, c) for c in target_names])
    if len(ids) == 0:
        raise DataValidationError(f"{path}: no station rows")
    order = sorted(range(len(ids)), key=lambda k: ids[k])
    return StationDataset(
        ids=tuple(ids[k] for k in order),
        lats=np.array([lats[k] for k in order]),
        lons=np.array([lons[k] for k in order]),
        feature_names=tuple(feature_names),
        features=np.array([feats[k] for k in order], dtype=float).reshape(len(ids), -1),
        target_names=target_names,
        targets=np.array([targs[k] for k in order], dtype=float).reshape(len(ids), -1),
    )


def load_edges(path, known_stations=None) -> TransitGraph:
    """Read the edge CSV (from,to,length_km) into an undirected graph.

    With `known_stations` the graph carries every station as a node and
    edges may only reference known ids; otherwise nodes are the endpoints
    seen in the file.
    """
    edges = []
    seen_pairs = {}
    endpoints = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise MissingColumnError(f"{path}: empty file, header required")
        for col in ("from", "to", "length_km"):
            if col not in header:
                raise MissingColumnError(f"{path}: missing required column {col!r}")
        known = set(known_stations) if known_stations is not None else None
        for row_num, row in enumerate(reader, start=2):
            u = (row.get("from") or "").strip()
            v = (row.get("to") or "").strip()
            if not u or not v:
                raise DataValidationError(f"row {row_num}: empty endpoint")
            if known is not None:
                for endpoint in (u, v):
                    if endpoint not in known:
                        raise UnknownStationError(
                            f"row {row_num}: edge endpoint {endpoint!r} is not a known station"
                        )
            if u == v:
                raise DataValidationError(f"row {row_num}: self-loop edge at {u!r}")
            length = _parse_cell(row.get("length_km"), row_num, "length_km")
            if length <= 0:
                raise NonPositiveLengthError(
                    f"row {row_num}: edge ({u!r}, {v!r}) has non-positive length {length}"
                )
            key = (u, v) if u <= v else (v, u)
            if key in seen_pairs:
                raise DataValidationError(
                    f"row {row_num}: duplicate edge {key} (first at row {seen_pairs[key]})"
                )
            seen_pairs[key] = row_num
            edges.append((u, v, length))
            endpoints.extend((u, v))
    nodes = tuple(sorted(known)) if known is not None else tuple(sorted(set(endpoints)))
    return TransitGraph(nodes=nodes, edges=edges)


def derive_network_features(
    dataset: StationDataset,
    graph: TransitGraph,
    center: GeoPoint,
    radius_km: float = EARTH_RADIUS_KM,
) -> StationDataset:
    """Append Degree, Betweenness, and Dis_to_center feature columns.

    Rerunning on an already-augmented dataset is rejected rather than
    silently overwriting.
    """
    collisions = set(NETWORK_FEATURE_NAMES) & set(dataset.feature_names)
    if collisions:
        raise DataValidationError(
            f"feature columns already present: {sorted(collisions)}"
        )
    missing = set(dataset.ids) - set(graph.nodes)
    if missing:
        raise UnknownStationError(f"stations missing from graph: {sorted(missing)}")
    degree = degree_centrality(graph)
    betweenness = betweenness_centrality(graph)
    dist = distance_to_center(dataset.points, center, radius_km)
    extra = np.column_stack(
        [
            np.array([float(degree[sid]) for sid in dataset.ids]),
            np.array([betweenness[sid] for sid in dataset.ids]),
            dist,
        ]
    )
    return replace(
        dataset,
        feature_names=dataset.feature_names + NETWORK_FEATURE_NAMES,
        features=np.column_stack([dataset.features, extra]),
    )


def write_stations_csv(path, dataset: StationDataset) -> None:
    """Write a dataset back to the station CSV schema (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "lat", "lon", *dataset.feature_names, *dataset.target_names])
        for i, sid in enumerate(dataset.ids):
            row = [sid, f"{dataset.lats[i]:.17g}", f"{dataset.lons[i]:.17g}"]
            row += [f"{v:.17g}" for v in dataset.features[i]]
            row += [f"{v:.17g}" for v in dataset.targets[i]]
            writer.writerow(row)


def write_edges_csv(path, graph: TransitGraph) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["from", "to", "length_km"])
        for u, v, w in graph.edges:
            writer.writerow([u, v, f"{w:.17g}"])
