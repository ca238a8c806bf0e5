"""Run configuration: defaults, key=value config files, CLI precedence.

Resolution order is CLI flag > config file > defaults.  The resolved
configuration is echoed into every output directory so runs are
reproducible from their artifacts alone.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

from .network import EARTH_RADIUS_KM

THREADS_ENV_VAR = "GEOWL_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from None


@dataclass
class RunConfig:
    stations: str | None = None
    edges: str | None = None
    model: str | None = None
    features_csv: str | None = None
    out_dir: str = "out"
    target: str | None = None
    targets: tuple = ()
    features: tuple | None = None
    metric: str = "network"
    kernel: str = "gaussian"
    earth_radius_km: float = EARTH_RADIUS_KM
    eps: float | None = None
    seed: int = 0
    k: str = "auto"
    k_min: int = 1
    k_max: int = 10
    scale_mode: str = "station"
    s_grid: int = 101
    standardize: bool = True
    threads: int = field(default_factory=_default_threads)
    center_lat: float | None = None
    center_lon: float | None = None
    derive_network: bool = False
    moran_weights: str = "inverse_distance"
    moran_knn: int = 5
    moran_method: str = "normal"
    permutations: int = 999

    def validate(self) -> "RunConfig":
        if self.metric not in ("euclidean", "network"):
            raise ValueError(f"metric must be euclidean or network, got {self.metric!r}")
        if self.kernel not in ("gaussian", "bisquare"):
            raise ValueError(f"kernel must be gaussian or bisquare, got {self.kernel!r}")
        if self.earth_radius_km <= 0:
            raise ValueError("earth_radius_km must be positive")
        if self.eps is not None and self.eps <= 0:
            raise ValueError("eps override must be positive")
        if self.s_grid < 2:
            raise ValueError("s_grid must be at least 2")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.k != "auto":
            int(self.k)  # raises on a malformed cluster count
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError(f"bad k range [{self.k_min}, {self.k_max}]")
        if self.scale_mode not in ("station", "variable", "none"):
            raise ValueError(f"unknown scale_mode {self.scale_mode!r}")
        if self.moran_weights not in ("inverse_distance", "knn"):
            raise ValueError(f"unknown moran_weights {self.moran_weights!r}")
        if self.moran_method not in ("normal", "permutation"):
            raise ValueError(f"unknown moran_method {self.moran_method!r}")
        if self.target is not None and self.targets and self.target not in self.targets:
            raise ValueError(
                f"target {self.target!r} is not among declared targets {list(self.targets)}"
            )
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["targets"] = list(self.targets)
        d["features"] = list(self.features) if self.features is not None else None
        return d


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: str):
    spec = {f.name: f for f in fields(RunConfig)}
    if name not in spec:
        raise ValueError(f"unknown config key {name!r}")
    raw = raw.strip()
    if name in ("targets", "features"):
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if name in ("standardize", "derive_network"):
        low = raw.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ValueError(f"config key {name!r}: expected a boolean, got {raw!r}")
    if name in ("seed", "k_min", "k_max", "s_grid", "threads", "moran_knn", "permutations"):
        return int(raw)
    if name in ("earth_radius_km", "eps", "center_lat", "center_lon"):
        return float(raw)
    return raw


def parse_config_file(path) -> dict:
    """Parse a `key = value` file; '#' starts a comment, blank lines skip."""
    out = {}
    with open(path) as fh:
        for line_num, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{line_num}: expected key = value, got {text!r}")
            key, raw = text.split("=", 1)
            out[key.strip()] = _coerce(key.strip(), raw)
    return out


def resolve_config(cli_values: dict, config_path=None) -> RunConfig:
    """Merge CLI values over config-file values over defaults."""
    merged = {}
    if config_path:
        merged.update(parse_config_file(config_path))
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    valid = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged).validate()
