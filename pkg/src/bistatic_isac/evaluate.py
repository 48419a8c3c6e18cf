"""Localization accuracy of track records against simulated ground truth."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NoOverlap


@dataclass
class ErrorSample:
    timestamp: float
    track_id: int
    target_id: int
    error: float


@dataclass
class EvalReport:
    assignment: dict[int, int]  # target id -> track id
    samples: list[ErrorSample]
    outliers_excluded: int = 2
    swaps: dict[int, int] = field(default_factory=dict)  # target id -> identity changes

    @property
    def errors(self) -> np.ndarray:
        return np.array([s.error for s in self.samples])

    def errors_for(self, target_id: int) -> np.ndarray:
        return np.array([s.error for s in self.samples if s.target_id == target_id])

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def mean_excluding_outliers(self) -> float:
        e = np.sort(self.errors)
        k = min(self.outliers_excluded, e.size - 1)
        return float(np.mean(e[: e.size - k])) if k > 0 else float(np.mean(e))

    @property
    def min(self) -> float:
        return float(np.min(self.errors))

    @property
    def max(self) -> float:
        return float(np.max(self.errors))

    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted errors and the cumulative fraction at or below each."""
        e = np.sort(self.errors)
        return e, np.arange(1, e.size + 1) / e.size

    def summary(self) -> dict:
        return {
            "snapshots": len(self.samples),
            "mean": self.mean,
            "mean_excluding_outliers": self.mean_excluding_outliers,
            "outliers_excluded": self.outliers_excluded,
            "min": self.min,
            "max": self.max,
            "assignment": {str(k): v for k, v in sorted(self.assignment.items())},
            "identity_swaps": {str(k): v for k, v in sorted(self.swaps.items())},
        }


def write_cdf_csv(path, report: EvalReport) -> None:
    e, frac = report.cdf()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["error_m", "cdf"])
        for a, b in zip(e, frac):
            w.writerow([repr(float(a)), repr(float(b))])


def _truth_tables(truth):
    by_target = defaultdict(list)
    for row in truth:
        by_target[row.target_id].append((row.time, row.x, row.y, row.z))
    out = {}
    for tid, rows in by_target.items():
        arr = np.array(sorted(rows))
        out[tid] = (arr[:, 0], arr[:, 1:])
    return out


def _nearest(times: np.ndarray, t: float) -> int:
    i = int(np.searchsorted(times, t))
    if i == 0:
        return 0
    if i == times.size:
        return times.size - 1
    return i if times[i] - t < t - times[i - 1] else i - 1


def evaluate(records, truth, tolerance: float | None = None, outliers: int = 2,
             states=("confirmed",), swap_radius: float | None = None) -> EvalReport:
    """Match tracks to truth targets once for the whole run and score every snapshot.

    Each truth target gets the single track minimising mean error over the
    timestamps they share (optimal one-to-one assignment). Record timestamps
    align to the nearest truth sample within ``tolerance`` seconds, by default
    half the median gap between record timestamps.
    """
    recs = [r for r in records if states is None or r.state in states]
    tables = _truth_tables(truth)
    if not recs or not tables:
        raise NoOverlap("no track records or no truth rows to compare")

    stamps = np.unique([r.timestamp for r in recs])
    if tolerance is None:
        tolerance = 0.5 * float(np.median(np.diff(stamps))) if stamps.size > 1 else np.inf

    # per (track, target): list of (timestamp, error)
    pair_errors: dict[tuple[int, int], list[tuple[float, float]]] = defaultdict(list)
    for r in recs:
        for tid, (times, pos) in tables.items():
            i = _nearest(times, r.timestamp)
            if abs(times[i] - r.timestamp) <= tolerance:
                pair_errors[(r.track_id, tid)].append((r.timestamp, float(np.linalg.norm(r.position - pos[i]))))
    if not pair_errors:
        raise NoOverlap("no record timestamp lies within tolerance of the truth timeline")

    track_ids = sorted({k[0] for k in pair_errors})
    target_ids = sorted(tables)
    big = 1e18
    cost = np.full((len(target_ids), len(track_ids)), big)
    for (trk, tgt), errs in pair_errors.items():
        cost[target_ids.index(tgt), track_ids.index(trk)] = np.mean([e for _, e in errs])
    rows, cols = linear_sum_assignment(cost)

    assignment, samples = {}, []
    for i, j in zip(rows, cols):
        if cost[i, j] >= big:
            continue
        tgt, trk = target_ids[i], track_ids[j]
        assignment[tgt] = trk
        samples.extend(ErrorSample(ts, trk, tgt, e) for ts, e in pair_errors[(trk, tgt)])
    samples.sort(key=lambda s: (s.timestamp, s.target_id))

    report = EvalReport(assignment, samples, outliers)
    report.swaps = identity_swaps(recs, tables, tolerance, swap_radius)
    return report


def identity_swaps(records, tables, tolerance: float, radius: float | None = None) -> dict[int, int]:
    """Per truth target, how often the nearest track changes identity between snapshots.

    Snapshots with no record within ``radius`` metres of the target are skipped.
    """
    by_time = defaultdict(list)
    for r in records:
        by_time[r.timestamp].append(r)
    swaps = {}
    for tid, (times, pos) in tables.items():
        seq = []
        for ts in sorted(by_time):
            i = _nearest(times, ts)
            if abs(times[i] - ts) > tolerance:
                continue
            dist, trk = min((float(np.linalg.norm(r.position - pos[i])), r.track_id) for r in by_time[ts])
            if radius is None or dist <= radius:
                seq.append(trk)
        swaps[tid] = sum(a != b for a, b in zip(seq, seq[1:]))
    return swaps
