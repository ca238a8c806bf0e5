"""Distance-decay kernels and per-location weight vectors.

A kernel maps a distance (km) and a bandwidth (km) to a weight in [0, 1].
Weights are evaluated against one row of a distance matrix to produce the
diagonal of the local weight matrix for a calibration station.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KERNEL_FAMILIES = ("gaussian", "bisquare")


def gaussian_weight(d, bandwidth):
    """exp(-(d/b)^2); strictly positive for any finite distance.

    Tiny weights are kept as-is, never truncated to zero.
    """
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    d = np.asarray(d, dtype=float)
    return np.exp(-((d / bandwidth) ** 2))


def bisquare_weight(d, bandwidth):
    """(1 - (d/b)^2)^2 inside the bandwidth, exactly 0 at d >= b."""
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    d = np.asarray(d, dtype=float)
    u = d / bandwidth
    w = np.where(u < 1.0, (1.0 - u**2) ** 2, 0.0)
    if w.ndim == 0:
        return float(w)
    return w


_KERNELS = {"gaussian": gaussian_weight, "bisquare": bisquare_weight}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus a fixed bandwidth in distance units (km)."""

    family: str = "gaussian"
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; "
                f"expected one of {KERNEL_FAMILIES}"
            )
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")

    def weights(self, distances):
        """Evaluate the kernel on an array of distances."""
        return _KERNELS[self.family](distances, self.bandwidth)


@dataclass(frozen=True)
class WeightVector:
    """Geographic weights of all stations relative to one calibration station."""

    station: int
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values.sum())


def weight_vector(dm, station, spec: KernelSpec, leave_one_out: bool = False) -> WeightVector:
    """Kernel weights for calibration station `station` from a distance matrix.

    With `leave_one_out` the self-weight is forced to zero so that the
    station cannot contribute to its own prediction.

    `dm` may be a DistanceMatrix or a plain (n, n) array; only the numbers
    matter, not the metric they were computed under.
    """
    values = getattr(dm, "values", dm)
    n = values.shape[0]
    if not 0 <= station < n:
        raise IndexError(f"station index {station} out of range for n={n}")
    w = np.asarray(spec.weights(values[station]), dtype=float).copy()
    if leave_one_out:
        w[station] = 0.0
    return WeightVector(station=station, values=w)
