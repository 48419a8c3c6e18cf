"""Peak picking and three-step target selection in the delay-Doppler domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .doppler import CellPeak, DelayDopplerMap
from .errors import ConfigError
from .scene import Position3


@dataclass(frozen=True)
class DetectorConfig:
    region_length: int = 16  # m, delay bins per region
    region_count: int | None = None  # Nc; None = as many whole regions as fit
    per_region_top: int = 2  # k
    global_top: int = 8  # U
    threshold_db: float = 12.0  # above the map median
    threshold_linear: float | None = None  # absolute override
    dynamic_range_db: float = 100.0  # floor below the reference-packet power scale

    def regions(self, num_delay_bins: int) -> int:
        if self.region_length <= 0:
            raise ConfigError("region_length must be positive")
        nc = self.region_count if self.region_count is not None else num_delay_bins // self.region_length
        if nc <= 0 or self.region_length * nc > num_delay_bins:
            raise ConfigError(
                f"{nc} regions of {self.region_length} bins do not fit in {num_delay_bins} delay bins"
            )
        if self.per_region_top < 1:
            raise ConfigError("per_region_top must be >= 1")
        if not 0 < self.global_top <= self.per_region_top * nc:
            raise ConfigError(f"global_top must be in [1, {self.per_region_top * nc}]")
        return nc

    def power_threshold(self, noise_floor: float, reference_power: float | None = None) -> float:
        if self.threshold_linear is not None:
            thr = self.threshold_linear
        else:
            thr = noise_floor * 10 ** (self.threshold_db / 10)
        if reference_power is not None:
            thr = max(thr, reference_power * 10 ** (-self.dynamic_range_db / 10))
        return thr


@dataclass(frozen=True)
class Detection:
    timestamp: float
    delay_bin: int
    doppler_bin: int  # index into the centred Doppler axis
    aoa_id: int
    power: float
    position: Position3 | None = None


def _sort_key(p):
    return (-p.power, p.delay_bin, p.doppler_bin)


def find_local_peaks(dd_map: DelayDopplerMap) -> list[CellPeak]:
    """Cells that beat all 8 delay-Doppler neighbours.

    On a plateau only the lowest-index cell (row-major) survives: a cell must
    be strictly greater than earlier neighbours and no smaller than later ones.
    """
    P = dd_map.power
    Ts, T = P.shape
    padded = np.full((Ts + 2, T + 2), -np.inf)
    padded[1:-1, 1:-1] = P
    peak = np.isfinite(P)
    for dd in (-1, 0, 1):
        for df in (-1, 0, 1):
            if dd == 0 and df == 0:
                continue
            nb = padded[1 + dd:1 + dd + Ts, 1 + df:1 + df + T]
            earlier = dd < 0 or (dd == 0 and df < 0)
            peak &= (P > nb) if earlier else (P >= nb)
    d_idx, f_idx = np.nonzero(peak)
    return [CellPeak(int(d), int(f), int(dd_map.aoa_id[d, f]), float(P[d, f]))
            for d, f in zip(d_idx, f_idx)]


def partition_peaks(peaks, cfg: DetectorConfig, num_delay_bins: int) -> list[list[CellPeak]]:
    """Bucket peaks into regions of ``region_length`` consecutive delay bins.

    Peaks beyond the last whole region are dropped.
    """
    nc = cfg.regions(num_delay_bins)
    regions: list[list[CellPeak]] = [[] for _ in range(nc)]
    for p in peaks:
        r = p.delay_bin // cfg.region_length
        if 0 <= r < nc:
            regions[r].append(p)
    return regions


def select_candidates(regions, cfg: DetectorConfig, threshold: float, timestamp: float = 0.0) -> list[Detection]:
    """Top-k per region, then the top-U of those strictly above ``threshold``.

    Output is sorted by descending power; ties go to the lower delay bin,
    then the lower Doppler index.
    """
    pooled = []
    for region in regions:
        pooled.extend(sorted(region, key=_sort_key)[: cfg.per_region_top])
    pooled = [p for p in sorted(pooled, key=_sort_key) if p.power > threshold]
    return [Detection(timestamp, p.delay_bin, p.doppler_bin, p.aoa_id, p.power)
            for p in pooled[: cfg.global_top]]
