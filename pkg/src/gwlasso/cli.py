"""Command-line surface: fit, compare, diagnose, cluster, predict.

Outputs are written atomically into the chosen directory together with
the resolved configuration.  Failures exit nonzero with a single-line
machine-readable JSON error on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from .clustering import choose_k, kmeans, scale_profiles
from .config import RunConfig, resolve_config
from .dataio import derive_network_features, load_stations, load_edges
from .diagnostics import (
    compare_models,
    comparison_text_table,
    inverse_distance_weights,
    knn_weights,
    local_condition_numbers,
    moran_scatter,
    morans_i,
)
from .errors import GwlassoError, MissingColumnError, UnknownStationError
from .gwl import fit_ada_gwl, load_model, predict, save_model
from .gwr import gwr_bandwidth_cv
from .kernels import KernelSpec
from .network import GeoPoint, euclidean_distance_matrix, network_distance_matrix


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _write_atomic(path, buf.getvalue())


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _echo_config(cfg: RunConfig, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_atomic(
        os.path.join(out_dir, "config.json"),
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n",
    )


def _load_inputs(cfg: RunConfig, need_edges: bool):
    if cfg.stations is None:
        raise ValueError("--stations is required")
    if cfg.target is None:
        raise ValueError("--target is required")
    targets = cfg.targets or (cfg.target,)
    if cfg.target not in targets:
        raise ValueError(f"target {cfg.target!r} not among declared targets {list(targets)}")
    dataset = load_stations(cfg.stations, target_names=targets, feature_names=cfg.features)
    graph = None
    if cfg.edges is not None:
        graph = load_edges(cfg.edges, known_stations=dataset.ids)
    elif need_edges or cfg.metric == "network":
        raise ValueError("--edges is required for the network metric")
    if cfg.derive_network:
        if graph is None:
            raise ValueError("--derive-network-features requires --edges")
        if cfg.center_lat is None or cfg.center_lon is None:
            raise ValueError("--derive-network-features requires --center LAT,LON")
        dataset = derive_network_features(
            dataset, graph, GeoPoint(cfg.center_lat, cfg.center_lon), cfg.earth_radius_km
        )
    return dataset, graph


def _distance_matrices(cfg: RunConfig, dataset, graph, which: str):
    eu = nw = None
    if which in ("euclidean", "both"):
        eu = euclidean_distance_matrix(dataset.points, cfg.earth_radius_km, ids=dataset.ids)
    if which in ("network", "both"):
        nw = network_distance_matrix(graph, order=dataset.ids)
    return eu, nw


def _coefficients_rows(model):
    rows = []
    for i, sid in enumerate(model.station_ids):
        row = [sid, _fmt(model.s[i]), _fmt(model.fitted[i]), _fmt(model.coefficients[i, 0])]
        row += [_fmt(v) for v in model.coefficients[i, 1:]]
        row += [str(int(z)) for z in model.zero_mask[i]]
        rows.append(row)
    return rows


def cmd_fit(cfg: RunConfig) -> int:
    dataset, graph = _load_inputs(cfg, need_edges=cfg.metric == "network")
    eu, nw = _distance_matrices(cfg, dataset, graph, cfg.metric)
    dm = nw if cfg.metric == "network" else eu
    model = fit_ada_gwl(
        dataset.features,
        dataset.target(cfg.target),
        dm=dm,
        kernel=cfg.kernel,
        eps=cfg.eps,
        station_ids=dataset.ids,
        feature_names=dataset.feature_names,
        target=cfg.target,
        s_grid=cfg.s_grid,
        standardize=cfg.standardize,
        threads=cfg.threads,
    )
    _echo_config(cfg, cfg.out_dir)
    save_model(model, os.path.join(cfg.out_dir, "model.json"), config=cfg.to_dict())
    header = (
        ["station_id", "s_frac", "fitted", "intercept"]
        + list(model.feature_names)
        + [f"zero_{name}" for name in model.feature_names]
    )
    _write_csv(os.path.join(cfg.out_dir, "coefficients.csv"), header, _coefficients_rows(model))
    print(
        f"fit {cfg.metric} lasso: bandwidth {model.bandwidth:.4g} km, "
        f"cv rmse {model.cv_rmse:.4g}, in-sample rmse {model.metrics.rmse:.4g}, "
        f"r2 {model.metrics.r_squared:.4g}"
    )
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    dataset, graph = _load_inputs(cfg, need_edges=True)
    eu, nw = _distance_matrices(cfg, dataset, graph, "both")
    comparison = compare_models(
        dataset.features,
        dataset.target(cfg.target),
        eu,
        nw,
        kernel=cfg.kernel,
        eps=cfg.eps,
        station_ids=dataset.ids,
        feature_names=dataset.feature_names,
        target=cfg.target,
        s_grid=cfg.s_grid,
        standardize=cfg.standardize,
        threads=cfg.threads,
    )
    _echo_config(cfg, cfg.out_dir)
    _write_csv(
        os.path.join(cfg.out_dir, "comparison.csv"),
        ["model", "rmse_loo", "r2_loo"],
        [[name, _fmt(rmse), _fmt(r2)] for name, rmse, r2 in comparison.rows],
    )
    table = comparison_text_table(comparison)
    _write_atomic(os.path.join(cfg.out_dir, "comparison.txt"), table + "\n")
    print(table)
    return 0


def cmd_diagnose(cfg: RunConfig) -> int:
    dataset, graph = _load_inputs(cfg, need_edges=cfg.metric == "network")
    eu, nw = _distance_matrices(cfg, dataset, graph, cfg.metric)
    dm = nw if cfg.metric == "network" else eu
    if cfg.moran_weights == "knn":
        weights = knn_weights(dm, cfg.moran_knn)
        weighting = f"knn(k={cfg.moran_knn}, metric={cfg.metric})"
    else:
        weights = inverse_distance_weights(dm)
        weighting = f"inverse_distance(metric={cfg.metric})"
    variables = [(cfg.target, dataset.target(cfg.target))]
    variables += [
        (name, dataset.features[:, k]) for k, name in enumerate(dataset.feature_names)
    ]
    moran_rows = []
    scatter_rows = []
    for name, values in variables:
        res = morans_i(
            values,
            weights,
            method=cfg.moran_method,
            permutations=cfg.permutations,
            seed=cfg.seed,
            weighting=weighting,
        )
        moran_rows.append(
            [name, _fmt(res.i), _fmt(res.expected_i), _fmt(res.variance),
             _fmt(res.z_score), _fmt(res.p_value)]
        )
        for sid, (value, lag) in zip(dataset.ids, moran_scatter(values, weights)):
            scatter_rows.append([name, sid, _fmt(value), _fmt(lag)])
    bandwidth, _ = gwr_bandwidth_cv(
        dataset.features, dataset.target(cfg.target), dm, family=cfg.kernel, eps=cfg.eps
    )
    report = local_condition_numbers(
        dataset.features, dm, KernelSpec(cfg.kernel, bandwidth)
    )
    condition_rows = [
        ["global", "", _fmt(report.global_condition)]
        + [str(int(report.global_condition > t)) for t in report.thresholds]
    ]
    for sid, value in zip(dataset.ids, report.local_conditions):
        condition_rows.append(
            ["local", sid, _fmt(value)]
            + [str(int(value > t)) for t in report.thresholds]
        )
    _echo_config(cfg, cfg.out_dir)
    _write_csv(
        os.path.join(cfg.out_dir, "moran.csv"),
        ["variable", "moran_i", "expected_i", "variance", "z_score", "p_value"],
        moran_rows,
    )
    _write_csv(
        os.path.join(cfg.out_dir, "moran_scatter.csv"),
        ["variable", "station_id", "value", "spatial_lag"],
        scatter_rows,
    )
    _write_csv(
        os.path.join(cfg.out_dir, "conditions.csv"),
        ["scope", "station_id", "condition"]
        + [f"exceeds_{int(t)}" for t in report.thresholds],
        condition_rows,
    )
    print(
        f"diagnosed {len(variables)} variables; global condition "
        f"{report.global_condition:.4g}; kernel bandwidth {bandwidth:.4g} km"
    )
    return 0


def cmd_cluster(cfg: RunConfig) -> int:
    if cfg.model is None:
        raise ValueError("--model is required")
    model = load_model(cfg.model)
    profiles, flags = scale_profiles(model, mode=cfg.scale_mode)
    wcss_rows = []
    if cfg.k == "auto":
        chosen = choose_k(profiles, (cfg.k_min, cfg.k_max), seed=cfg.seed)
        result = chosen.results[chosen.k]
        wcss_rows = [[str(k), _fmt(w)] for k, w in chosen.wcss_curve]
        if chosen.weak_elbow:
            print("warning: weak elbow; inspect wcss.csv before trusting K")
        k_used = chosen.k
    else:
        k_used = int(cfg.k)
        result = kmeans(profiles, k_used, seed=cfg.seed)
        wcss_rows = [[str(k_used), _fmt(result.wcss)]]
    _echo_config(cfg, cfg.out_dir)
    _write_csv(
        os.path.join(cfg.out_dir, "labels.csv"),
        ["station_id", "cluster"],
        [[sid, str(int(c))] for sid, c in zip(model.station_ids, result.labels)],
    )
    _write_csv(os.path.join(cfg.out_dir, "wcss.csv"), ["k", "wcss"], wcss_rows)
    if flags.any():
        flagged = [model.station_ids[i] for i in np.where(flags)[0]]
        print(f"note: zero-variance profiles at {flagged}")
    print(f"clustered {len(model.station_ids)} stations into K={k_used}")
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    if cfg.model is None or cfg.features_csv is None:
        raise ValueError("--model and --features are required")
    model = load_model(cfg.model)
    rows = []
    with open(cfg.features_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MissingColumnError(f"{cfg.features_csv}: empty file, header required")
        if "station_id" not in reader.fieldnames:
            raise MissingColumnError(f"{cfg.features_csv}: missing column 'station_id'")
        for name in model.feature_names:
            if name not in reader.fieldnames:
                raise MissingColumnError(
                    f"{cfg.features_csv}: missing model feature column {name!r}"
                )
        for row_num, row in enumerate(reader, start=2):
            sid = (row.get("station_id") or "").strip()
            if sid not in model.station_ids:
                raise UnknownStationError(
                    f"row {row_num}: station {sid!r} is not in the model"
                )
            x = [float(row[name]) for name in model.feature_names]
            rows.append([sid, _fmt(predict(model, sid, x))])
    _echo_config(cfg, cfg.out_dir)
    _write_csv(os.path.join(cfg.out_dir, "predictions.csv"), ["station_id", "prediction"], rows)
    print(f"wrote {len(rows)} predictions")
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "compare": cmd_compare,
    "diagnose": cmd_diagnose,
    "cluster": cmd_cluster,
    "predict": cmd_predict,
}


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key = value config file (lower precedence than flags)")
    sp.add_argument("--out", dest="out_dir", help="output directory")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int)


def _add_data(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--stations", help="station CSV (station_id,lat,lon,features...,targets...)")
    sp.add_argument("--edges", help="edge CSV (from,to,length_km)")
    sp.add_argument("--target", help="target column to fit")
    sp.add_argument("--targets", help="comma-separated target columns in the station CSV")
    sp.add_argument("--features", help="comma-separated feature columns (default: all others)")
    sp.add_argument("--metric", choices=["euclidean", "network"])
    sp.add_argument("--kernel", choices=["gaussian", "bisquare"])
    sp.add_argument("--eps", type=float, help="bandwidth search stop width override")
    sp.add_argument("--radius-km", dest="earth_radius_km", type=float)
    sp.add_argument("--s-grid", dest="s_grid", type=int)
    sp.add_argument("--center", help="city center as LAT,LON for derived features")
    sp.add_argument(
        "--derive-network-features",
        dest="derive_network",
        action="store_const",
        const=True,
        help="append Degree, Betweenness, Dis_to_center columns",
    )
    sp.add_argument(
        "--no-standardize",
        dest="standardize",
        action="store_const",
        const=False,
        help="skip unit-variance column scaling in the lasso",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gwlasso",
        description="Geographically weighted lasso on transit networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("fit", "fit the weighted lasso and write model.json + coefficients.csv"),
        ("compare", "fit OLS/GWR/lasso variants under both metrics"),
        ("diagnose", "Moran's I and local condition numbers"),
        ("cluster", "k-means on per-station coefficient profiles"),
        ("predict", "predict from a saved model and a feature CSV"),
    ):
        sp = sub.add_parser(name, help=help_text)
        _add_common(sp)
        if name in ("fit", "compare", "diagnose"):
            _add_data(sp)
        if name == "diagnose":
            sp.add_argument("--moran-weights", dest="moran_weights",
                            choices=["inverse_distance", "knn"])
            sp.add_argument("--moran-knn", dest="moran_knn", type=int)
            sp.add_argument("--moran-method", dest="moran_method",
                            choices=["normal", "permutation"])
            sp.add_argument("--permutations", type=int)
        if name == "cluster":
            sp.add_argument("--model", help="model.json from a fit run")
            sp.add_argument("--k", help="'auto' or a cluster count")
            sp.add_argument("--k-min", dest="k_min", type=int)
            sp.add_argument("--k-max", dest="k_max", type=int)
            sp.add_argument("--scale-mode", dest="scale_mode",
                            choices=["station", "variable", "none"])
        if name == "predict":
            sp.add_argument("--model", help="model.json from a fit run")
            sp.add_argument("--features", dest="features_csv",
                            help="CSV with station_id + model feature columns")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config") and v is not None
    }
    for key in ("targets", "features"):
        if key in values and isinstance(values[key], str):
            values[key] = tuple(s.strip() for s in values[key].split(",") if s.strip())
    if "center" in values:
        raw = values.pop("center")
        try:
            lat, lon = (float(s) for s in raw.split(","))
        except ValueError:
            raise ValueError(f"--center expects LAT,LON, got {raw!r}") from None
        values["center_lat"] = lat
        values["center_lon"] = lon
    return resolve_config(values, getattr(args, "config", None))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except (GwlassoError, ValueError, OSError) as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
