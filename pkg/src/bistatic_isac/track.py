"""Nearest-neighbour association and track confirmation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .detect import Detection
from .errors import ConfigError


class TrackState(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class TrackerConfig:
    gate: float = 5.0  # m
    confirm_count: int = 4  # p
    min_velocity: float = 0.5  # m/s
    miss_limit: int = 3  # q
    absorb_duplicates: bool = True

    def __post_init__(self):
        if not self.gate > 0:
            raise ConfigError("gate must be positive")
        if self.confirm_count < 2:
            raise ConfigError("confirm_count must be >= 2")
        if self.min_velocity < 0:
            raise ConfigError("min_velocity must be non-negative")
        if self.miss_limit < 1:
            raise ConfigError("miss_limit must be >= 1")


@dataclass(frozen=True)
class HistoryEntry:
    timestamp: float
    position: np.ndarray
    power: float
    detection: Detection | None = None


@dataclass(eq=False)
class Track:
    id: int
    state: TrackState = TrackState.TENTATIVE
    occurrences: int = 0
    misses: int = 0
    history: list[HistoryEntry] = field(default_factory=list)

    @property
    def live(self) -> bool:
        return self.state is not TrackState.TERMINATED

    @property
    def position(self) -> np.ndarray:
        return self.history[-1].position

    def average_velocity(self, steps: int) -> np.ndarray:
        """Mean velocity vector over the last ``steps`` displacements."""
        steps = min(steps, len(self.history) - 1)
        if steps <= 0:
            return np.zeros(3)
        a, b = self.history[-1 - steps], self.history[-1]
        return (b.position - a.position) / (b.timestamp - a.timestamp)

    @property
    def velocity(self) -> np.ndarray:
        return self.average_velocity(len(self.history) - 1)


@dataclass
class Assignment:
    detections: list[Detection]
    matches: dict[int, int]  # track id -> detection index
    unmatched: list[int]


def associate(tracks, detections, gate: float) -> Assignment:
    """Greedy nearest-neighbour pairing in order of increasing distance.

    Each live track and each detection is used at most once; pairs farther
    apart than ``gate`` are never made. Ties go to the lower track id, then
    the lower detection index.
    """
    live = [t for t in tracks if t.live]
    pairs = []
    for ti, trk in enumerate(live):
        for di, det in enumerate(detections):
            dist = float(np.linalg.norm(np.asarray(det.position) - trk.position))
            if dist <= gate:
                pairs.append((dist, trk.id, di))
    pairs.sort()
    matches: dict[int, int] = {}
    used = set()
    for dist, tid, di in pairs:
        if tid in matches or di in used:
            continue
        matches[tid] = di
        used.add(di)
    unmatched = [i for i in range(len(detections)) if i not in used]
    return Assignment(list(detections), matches, unmatched)


def _entry(det: Detection, timestamp: float) -> HistoryEntry:
    return HistoryEntry(timestamp, np.asarray(det.position, dtype=float), det.power, det)


def update(tracks, assignment: Assignment, cfg: TrackerConfig, timestamp: float, new_id=None) -> list[Track]:
    """Apply one window of associations; returns the tracks touched this window.

    Matched tracks gain a history entry; live tracks without a match count a
    miss and die after ``miss_limit`` consecutive misses. Unmatched detections
    open tentative tracks, except (with ``absorb_duplicates``) those within
    the gate of a track already updated in this window.
    """
    if new_id is None:
        existing = [t.id for t in tracks]
        new_id = itertools.count(max(existing, default=-1) + 1).__next__
    p = cfg.confirm_count
    touched = []
    for trk in tracks:
        if not trk.live:
            continue
        if trk.history and timestamp <= trk.history[-1].timestamp:
            raise ValueError(f"timestamp {timestamp} does not advance track {trk.id}")
        di = assignment.matches.get(trk.id)
        if di is None:
            trk.occurrences = 0
            trk.misses += 1
            if trk.misses >= cfg.miss_limit:
                trk.state = TrackState.TERMINATED
            continue
        trk.history.append(_entry(assignment.detections[di], timestamp))
        trk.occurrences += 1
        trk.misses = 0
        if trk.state is TrackState.TENTATIVE and trk.occurrences >= p:
            speed = float(np.linalg.norm(trk.average_velocity(p - 1)))
            if speed >= cfg.min_velocity:
                trk.state = TrackState.CONFIRMED
        touched.append(trk)

    for di in assignment.unmatched:
        det = assignment.detections[di]
        pos = np.asarray(det.position, dtype=float)
        if cfg.absorb_duplicates and any(
            np.linalg.norm(pos - t.position) <= cfg.gate for t in touched
        ):
            continue
        trk = Track(new_id(), occurrences=1, history=[_entry(det, timestamp)])
        tracks.append(trk)
        touched.append(trk)
    return touched


class Tracker:
    """Stateful wrapper owning the track list and id counter."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.tracks: list[Track] = []
        self._ids = itertools.count()

    def step(self, detections, timestamp: float) -> list[Track]:
        detections = [d for d in detections if d.position is not None]
        assignment = associate(self.tracks, detections, self.cfg.gate)
        return update(self.tracks, assignment, self.cfg, timestamp, self._ids.__next__)

    @property
    def live_tracks(self) -> list[Track]:
        return [t for t in self.tracks if t.live]
