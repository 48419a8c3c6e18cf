"""Windowed sensing: packets in, localized detections and track records out."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import PacketMatrix
from .detect import Detection, DetectorConfig, find_local_peaks, partition_peaks, select_candidates
from .doppler import AoaGrid, DelayDopplerMap, DopplerCube, aoa_power_map, doppler_transform, write_power_map_csv
from .errors import ConfigError, DegenerateGeometry, NoPhysicalSolution
from .fileio import TrackRecord
from .localize import localize_detection
from .preprocess import PreprocConfig, preprocess_window
from .scene import Position3, RadioConfig
from .track import Tracker, TrackerConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SenseConfig:
    radio: RadioConfig
    tx_position: Position3
    preprocess: PreprocConfig = PreprocConfig()
    grid: AoaGrid = field(default_factory=AoaGrid.from_degrees)
    guard: int = 2
    slow_time_window: str = "rect"
    detector: DetectorConfig = DetectorConfig()
    tracker: TrackerConfig = TrackerConfig()
    window_length: int = 64  # differential packets per window (T)
    hop: int | None = None  # packets between window starts; None = window_length
    localize_eps: float = 1e-9

    @property
    def step(self) -> int:
        return self.hop or self.window_length

    def validate(self) -> None:
        self.preprocess.validate(self.radio.num_subcarriers)
        self.detector.regions(self.preprocess.truncation)
        if self.window_length < 2:
            raise ConfigError("window_length must be >= 2")
        if self.step < 1:
            raise ConfigError("hop must be >= 1")

    def window_timestamp(self, start: int) -> float:
        """Time of the central differential packet of the window starting at ``start``."""
        return (start + (self.window_length + 1) // 2) * self.radio.packet_period


@dataclass(eq=False)
class WindowResult:
    start: int
    timestamp: float
    cube: DopplerCube
    dd_map: DelayDopplerMap
    threshold: float
    detections: list[Detection]
    unlocalized: int = 0


def window_starts(num_packets: int, window_length: int, hop: int) -> list[int]:
    """Starts of every window whose reference and T packets fit in the capture."""
    return list(range(0, num_packets - window_length, hop))


def reference_power(ref: np.ndarray, sc: SenseConfig) -> float:
    """Map-domain power of a path carrying the reference packet's mean element power.

    Combines the coherent gains of the subcarrier IFFT (M/Ns), the Doppler
    FFT (T) and the array correlation (N).
    """
    M, N = ref.shape
    gain = M / sc.preprocess.ifft_size * sc.window_length * N
    return float(np.mean(np.abs(ref) ** 2)) * gain * gain


def process_window(packets, sc: SenseConfig, timestamp: float | None = None) -> WindowResult:
    """Run preprocessing, Doppler/AOA search, selection and localization on one window.

    ``packets`` holds the reference followed by ``window_length`` packets.
    """
    if len(packets) != sc.window_length + 1:
        raise ConfigError(f"window needs {sc.window_length + 1} packets, got {len(packets)}")
    start = packets[0].t
    if timestamp is None:
        timestamp = sc.window_timestamp(start)
    h_seq = preprocess_window(packets, sc.preprocess)
    cube = doppler_transform(h_seq, sc.radio.packet_period, sc.slow_time_window, sc.window_length)
    dd_map = aoa_power_map(cube, sc.grid, sc.radio, sc.guard)

    threshold = sc.detector.power_threshold(dd_map.noise_floor(), reference_power(packets[0].samples, sc))
    regions = partition_peaks(find_local_peaks(dd_map), sc.detector, dd_map.power.shape[0])
    selected = select_candidates(regions, sc.detector, threshold, timestamp)

    located, dropped = [], 0
    for det in selected:
        try:
            located.append(localize_detection(det, sc.tx_position, sc.grid, sc.radio, sc.preprocess,
                                              sc.localize_eps))
        except (DegenerateGeometry, NoPhysicalSolution) as exc:
            dropped += 1
            log.debug("window %d: detection at delay bin %d not localized: %s", start, det.delay_bin, exc)
    return WindowResult(start, timestamp, cube, dd_map, threshold, located, dropped)


def _record(trk, cube: DopplerCube) -> TrackRecord:
    entry = trk.history[-1]
    det = entry.detection
    x, y, z = (float(v) for v in entry.position)
    rec = TrackRecord(entry.timestamp, trk.id, trk.state.value, x, y, z,
                      10 * math.log10(entry.power) if entry.power > 0 else float("-inf"))
    if det is not None:
        rec.delay_bin = det.delay_bin
        rec.doppler_bin = det.doppler_bin - cube.num_bins // 2
        rec.doppler_hz = float(cube.frequency(det.doppler_bin))
    return rec


@dataclass(eq=False)
class SenseResult:
    records: list[TrackRecord]
    windows: list[WindowResult]
    tracker: Tracker


def sense(packets, sc: SenseConfig, dump_dir=None, keep_windows: bool = True) -> SenseResult:
    """Process a capture window by window and track the detections.

    ``packets`` is a sequence of PacketMatrix (or a (T, M, N) array) covering
    consecutive packet indices.
    """
    sc.validate()
    if isinstance(packets, np.ndarray):
        packets = [PacketMatrix(t, packets[t]) for t in range(packets.shape[0])]
    tracker = Tracker(sc.tracker)
    records, windows = [], []
    starts = window_starts(len(packets), sc.window_length, sc.step)
    if not starts:
        raise ConfigError(f"capture of {len(packets)} packets is shorter than one window "
                          f"({sc.window_length + 1} packets)")
    for start in starts:
        res = process_window(packets[start:start + sc.window_length + 1], sc)
        log.info("window @%.3fs: %d detections (threshold %.3g)", res.timestamp, len(res.detections), res.threshold)
        if dump_dir is not None:
            write_power_map_csv(Path(dump_dir) / f"map_{start:06d}.csv", res.dd_map)
        for trk in tracker.step(res.detections, res.timestamp):
            records.append(_record(trk, res.cube))
        if keep_windows:
            windows.append(res)
    return SenseResult(records, windows, tracker)
