"""Slow-time Doppler transform and steering-vector AOA search."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, WindowIncomplete
from .scene import RadioConfig

_SEARCH_CHUNK = 2048  # cells per matrix product in the grid search


@dataclass(frozen=True, eq=False)
class AoaGrid:
    """Azimuth x elevation search grid; flat id = i_az * len(elevations) + i_el."""

    azimuths: np.ndarray
    elevations: np.ndarray

    def __post_init__(self):
        az = np.atleast_1d(np.asarray(self.azimuths, dtype=float))
        el = np.atleast_1d(np.asarray(self.elevations, dtype=float))
        if az.size == 0 or el.size == 0:
            raise ConfigError("AOA grid must be non-empty on both axes")
        if np.any(np.diff(az) <= 0) or np.any(np.diff(el) <= 0):
            raise ConfigError("AOA grid axes must be strictly increasing")
        object.__setattr__(self, "azimuths", az)
        object.__setattr__(self, "elevations", el)

    @classmethod
    def from_degrees(cls, az_min=-60.0, az_max=60.0, el_min=-30.0, el_max=30.0, step=2.0) -> "AoaGrid":
        n_az = int(round((az_max - az_min) / step)) + 1
        n_el = int(round((el_max - el_min) / step)) + 1
        return cls(np.deg2rad(np.linspace(az_min, az_max, n_az)),
                   np.deg2rad(np.linspace(el_min, el_max, n_el)))

    def __len__(self):
        return self.azimuths.size * self.elevations.size

    def angles(self, aoa_id: int) -> tuple[float, float]:
        """(azimuth, elevation) in radians for a flat grid index."""
        if not 0 <= aoa_id < len(self):
            raise IndexError(f"AOA id {aoa_id} outside grid of {len(self)}")
        i_az, i_el = divmod(int(aoa_id), self.elevations.size)
        return float(self.azimuths[i_az]), float(self.elevations[i_el])

    def all_angles(self) -> tuple[np.ndarray, np.ndarray]:
        az, el = np.meshgrid(self.azimuths, self.elevations, indexing="ij")
        return az.ravel(), el.ravel()


def _steering(cfg: RadioConfig, azimuth, elevation) -> np.ndarray:
    rows, cols = cfg.element_indices()
    az = np.atleast_1d(azimuth)
    el = np.atleast_1d(elevation)
    u_h = np.cos(el) * np.sin(az)
    u_v = np.sin(el)
    phase = np.outer(u_v, rows) + np.outer(u_h, cols)
    return np.exp(2j * np.pi * cfg.element_spacing * phase)


def steering_vector(cfg: RadioConfig, grid: AoaGrid, aoa_id: int) -> np.ndarray:
    return _steering(cfg, *grid.angles(aoa_id))[0]


def steering_matrix(cfg: RadioConfig, grid: AoaGrid) -> np.ndarray:
    """All grid steering vectors as a (G, N) array."""
    return _steering(cfg, *grid.all_angles())


@dataclass(eq=False)
class DopplerCube:
    """Delay x antenna x Doppler values with DC at Doppler index ``T // 2``."""

    values: np.ndarray  # (Ts, N, T)
    bin_spacing: float  # Hz
    first_packet: int = 0

    @property
    def num_bins(self) -> int:
        return self.values.shape[2]

    def signed_bins(self) -> np.ndarray:
        return np.arange(self.num_bins) - self.num_bins // 2

    def frequency(self, doppler_index) -> np.ndarray | float:
        return (np.asarray(doppler_index) - self.num_bins // 2) * self.bin_spacing


@dataclass(frozen=True)
class CellPeak:
    delay_bin: int
    doppler_bin: int  # index into the centred Doppler axis
    aoa_id: int
    power: float


def doppler_transform(h_seq, packet_period: float, window: str = "rect",
                      expected_length: int | None = None) -> DopplerCube:
    """T-point FFT over consecutive differential channels, centred on zero Doppler.

    The rectangular transform is unnormalised, so per (delay, antenna)
    ``sum_d |X|^2 = T * sum_t |h|^2``.
    """
    h_seq = list(h_seq)
    T = len(h_seq)
    if T < 2 or (expected_length is not None and T != expected_length):
        raise WindowIncomplete(f"window holds {T} packets, expected {expected_length or '>= 2'}")
    idx = np.array([h.t for h in h_seq])
    if np.any(np.diff(idx) != 1):
        missing = sorted(set(range(idx[0], idx[0] + T)) - set(idx.tolist()))
        raise WindowIncomplete(f"packets not consecutive; missing {missing}")

    data = np.stack([h.h for h in h_seq], axis=-1)  # (Ts, N, T)
    if window == "hann":
        data = data * np.hanning(T)
    elif window != "rect":
        raise ConfigError(f"unknown slow-time window {window!r}")
    values = np.fft.fftshift(np.fft.fft(data, axis=-1), axes=-1)
    return DopplerCube(values, 1.0 / (T * packet_period), int(idx[0]))


def guard_mask(num_bins: int, guard: int) -> np.ndarray:
    """True for Doppler indices searched, False within +-guard bins of DC."""
    if guard < 0:
        raise ConfigError("zero-Doppler guard must be non-negative")
    signed = np.arange(num_bins) - num_bins // 2
    return np.abs(signed) > guard


@dataclass(eq=False)
class DelayDopplerMap:
    """Best-AOA correlation power per cell; guarded cells hold -inf and id -1."""

    power: np.ndarray  # (Ts, T)
    aoa_id: np.ndarray  # (Ts, T) int

    @property
    def searched(self) -> np.ndarray:
        return self.aoa_id >= 0

    def noise_floor(self) -> float:
        """Median power over searched cells."""
        vals = self.power[self.searched]
        return float(np.median(vals)) if vals.size else 0.0


def aoa_power_map(cube: DopplerCube, grid: AoaGrid, cfg: RadioConfig, guard: int = 2) -> DelayDopplerMap:
    if len(grid) == 0:
        raise ConfigError("empty AOA grid")
    Ts, N, T = cube.values.shape
    if N != cfg.num_antennas:
        raise ConfigError(f"cube has {N} antennas, radio config {cfg.num_antennas}")
    keep = guard_mask(T, guard)
    cols = np.flatnonzero(keep)

    S_h = steering_matrix(cfg, grid).conj().T  # (N, G)
    cells = np.moveaxis(cube.values[:, :, cols], 1, -1).reshape(-1, N)
    best_p = np.empty(cells.shape[0])
    best_id = np.empty(cells.shape[0], dtype=np.int64)
    for start in range(0, cells.shape[0], _SEARCH_CHUNK):
        corr = cells[start:start + _SEARCH_CHUNK] @ S_h
        p = corr.real ** 2 + corr.imag ** 2
        j = np.argmax(p, axis=1)
        best_id[start:start + _SEARCH_CHUNK] = j
        best_p[start:start + _SEARCH_CHUNK] = p[np.arange(p.shape[0]), j]

    power = np.full((Ts, T), -np.inf)
    ids = np.full((Ts, T), -1, dtype=np.int64)
    power[:, cols] = best_p.reshape(Ts, cols.size)
    ids[:, cols] = best_id.reshape(Ts, cols.size)
    return DelayDopplerMap(power, ids)


def aoa_power_search(cube: DopplerCube, grid: AoaGrid, cfg: RadioConfig, guard: int = 2) -> list[CellPeak]:
    """Best grid AOA and its power for every delay-Doppler cell outside the guard."""
    m = aoa_power_map(cube, grid, cfg, guard)
    d_idx, f_idx = np.nonzero(m.searched)
    return [CellPeak(int(d), int(f), int(m.aoa_id[d, f]), float(m.power[d, f]))
            for d, f in zip(d_idx, f_idx)]


def write_power_map_csv(path, dd_map: DelayDopplerMap) -> None:
    """Dump searched cells as ``delay_bin,doppler_bin,aoa_id,power`` (signed Doppler bins)."""
    T = dd_map.power.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delay_bin", "doppler_bin", "aoa_id", "power"])
        for d, f in zip(*np.nonzero(dd_map.searched)):
            w.writerow([int(d), int(f) - T // 2, int(dd_map.aoa_id[d, f]), repr(float(dd_map.power[d, f]))])
