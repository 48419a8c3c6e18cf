"""Binary packet captures, ground-truth CSV and JSON-lines track records.

Capture layout (little-endian)::

    magic      4 bytes   b"ISAC"
    version    u16       1
    M, N, T    u32 x 3   subcarriers, antennas, packets
    df, fc, Tp f64 x 3   subcarrier spacing (Hz), carrier (Hz), packet period (s)
    payload    T packets of M*N complex values (f32 re, f32 im), subcarrier-major
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .channel import PacketMatrix, TruthRow
from .errors import Corrupt, InputError, NotACapture, ShapeError, Unsupported

MAGIC = b"ISAC"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIddd")
_SAMPLE = np.dtype("<c8")


@dataclass(frozen=True)
class CaptureHeader:
    num_subcarriers: int
    num_antennas: int
    num_packets: int
    subcarrier_spacing: float
    carrier_frequency: float
    packet_period: float
    version: int = VERSION

    @property
    def packet_bytes(self) -> int:
        return self.num_subcarriers * self.num_antennas * _SAMPLE.itemsize

    @classmethod
    def for_radio(cls, cfg, num_packets: int) -> "CaptureHeader":
        return cls(cfg.num_subcarriers, cfg.num_antennas, num_packets,
                   cfg.subcarrier_spacing, cfg.carrier_frequency, cfg.packet_period)


@dataclass(eq=False)
class Capture:
    header: CaptureHeader
    samples: np.ndarray  # (T, M, N) complex64

    def packets(self, start: int = 0, stop: int | None = None) -> list[PacketMatrix]:
        stop = self.header.num_packets if stop is None else stop
        return [PacketMatrix(t, self.samples[t]) for t in range(start, stop)]


def _as_array(packets) -> np.ndarray:
    if isinstance(packets, np.ndarray):
        return packets
    return np.stack([p.samples if isinstance(p, PacketMatrix) else np.asarray(p) for p in packets])


def write_capture(path, header: CaptureHeader, packets) -> None:
    data = _as_array(packets)
    expected = (header.num_packets, header.num_subcarriers, header.num_antennas)
    if data.shape != expected:
        raise ShapeError(f"packets have shape {data.shape}, header says {expected}")
    if min(expected) <= 0:
        raise ShapeError("capture dimensions must be positive")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, header.version, header.num_subcarriers, header.num_antennas,
                              header.num_packets, header.subcarrier_spacing,
                              header.carrier_frequency, header.packet_period))
        fh.write(np.ascontiguousarray(data, dtype=_SAMPLE).tobytes())


def _parse_header(raw: bytes) -> CaptureHeader:
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise NotACapture(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    if len(raw) < _HEADER.size:
        raise Corrupt(f"header truncated at {len(raw)} of {_HEADER.size} bytes")
    _, version, M, N, T, df, fc, tp = _HEADER.unpack(raw[:_HEADER.size])
    if version != VERSION:
        raise Unsupported(f"capture format version {version}; this reader handles {VERSION}")
    if min(M, N, T) == 0:
        raise Corrupt(f"zero dimension in header (M={M}, N={N}, T={T})")
    if not all(math.isfinite(v) and v > 0 for v in (df, fc, tp)):
        raise Corrupt("non-positive or non-finite radio parameters in header")
    return CaptureHeader(M, N, T, df, fc, tp, version)


def read_header(path) -> CaptureHeader:
    with open(path, "rb") as fh:
        return _parse_header(fh.read(_HEADER.size))


def read_capture(path) -> Capture:
    raw = Path(path).read_bytes()
    header = _parse_header(raw)
    payload = memoryview(raw)[_HEADER.size:]
    need = header.num_packets * header.packet_bytes
    if len(payload) < need:
        idx = len(payload) // header.packet_bytes
        raise Corrupt(f"file ends inside packet {idx} of {header.num_packets}", packet_index=idx)
    if len(payload) > need:
        raise Corrupt(f"{len(payload) - need} trailing bytes after the last packet")
    samples = np.frombuffer(payload, dtype=_SAMPLE).reshape(
        header.num_packets, header.num_subcarriers, header.num_antennas)
    return Capture(header, samples)


TRUTH_FIELDS = ("t", "time", "target_id", "x", "y", "z", "r")


def write_truth_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRUTH_FIELDS)
        for row in rows:
            w.writerow([row.t, repr(row.time), row.target_id, repr(row.x), repr(row.y), repr(row.z), repr(row.r)])


def read_truth_csv(path) -> list[TruthRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRUTH_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise InputError(f"truth CSV lacks columns {sorted(missing)}")
        try:
            return [TruthRow(int(r["t"]), float(r["time"]), int(r["target_id"]), float(r["x"]),
                             float(r["y"]), float(r["z"]), float(r["r"])) for r in reader]
        except ValueError as exc:
            raise InputError(f"bad truth CSV row: {exc}") from exc


@dataclass
class TrackRecord:
    timestamp: float
    track_id: int
    state: str
    x: float
    y: float
    z: float
    power_db: float
    delay_bin: int | None = None
    doppler_bin: int | None = None  # signed, 0 = zero Doppler
    doppler_hz: float | None = None
    error: float | None = None

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def to_json(self) -> str:
        return json.dumps({k: v for k, v in asdict(self).items() if v is not None})

    @classmethod
    def from_json(cls, line: str) -> "TrackRecord":
        try:
            return cls(**json.loads(line))
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad track record {line.strip()[:80]!r}: {exc}") from exc


def write_records(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path) -> list[TrackRecord]:
    with open(path) as fh:
        return [TrackRecord.from_json(line) for line in fh if line.strip()]
