"""Forward model: per-packet frequency-domain snapshots for a scene.

Each packet is the sum over propagation paths of

    amplitude * exp(-j 2 pi (fc + f_m) tau) * a_n(direction)

plus receiver noise, where ``tau`` is the bistatic delay at the packet time.
The receiver of an unsynchronised base station then applies a timing offset
(linear phase across subcarriers) and a common phase offset to everything it
receives, noise included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateDirection, DelayAliased
from .scene import SPEED_OF_LIGHT, Position3, RadioConfig, Scene, bistatic_range

_OFFSET_STREAM = 0x5EED


@dataclass(eq=False)
class PacketMatrix:
    t: int
    samples: np.ndarray  # (M, N) complex, subcarrier-major

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("packet index must be non-negative")
        if self.samples.ndim != 2:
            raise ValueError("packet samples must be a 2-D (M, N) array")

    @property
    def shape(self):
        return self.samples.shape


@dataclass(frozen=True)
class SyncOffsets:
    timing: float = 0.0  # seconds
    phase: float = 0.0  # radians


@dataclass(frozen=True)
class TruthRow:
    t: int
    time: float
    target_id: int
    x: float
    y: float
    z: float
    r: float

    @property
    def position(self) -> Position3:
        return Position3(self.x, self.y, self.z)


@dataclass(eq=False)
class SimulatedCapture:
    packets: list[PacketMatrix]
    truth: list[TruthRow]
    offsets: list[SyncOffsets] = field(default_factory=list)

    def samples(self) -> np.ndarray:
        """All packets stacked as a (T, M, N) array."""
        return np.stack([p.samples for p in self.packets])


def array_response(cfg: RadioConfig, direction: np.ndarray) -> np.ndarray:
    """Receive-array response to a plane wave arriving from unit vector ``direction``.

    Element (row, col) sits at ``(0, col*d, row*d)`` wavelengths.
    """
    rows, cols = cfg.element_indices()
    d = cfg.element_spacing
    ux, uy, uz = np.asarray(direction, dtype=float)
    return np.exp(2j * np.pi * d * (cols * uy + rows * uz))


def _paths_at(scene: Scene, cfg: RadioConfig, time: float):
    """Yield (delay, amplitude, direction) for every path at ``time``."""
    for c in scene.clutter_paths:
        ce = math.cos(c.elevation)
        u = np.array([ce * math.cos(c.azimuth), ce * math.sin(c.azimuth), math.sin(c.elevation)])
        yield c.delay, c.amplitude, u
    for tgt in scene.targets:
        p = np.asarray(tgt.position_at(time))
        dist = np.linalg.norm(p)
        if dist == 0.0:
            raise DegenerateDirection("target at the receiver has no arrival direction")
        r = bistatic_range(p, scene.tx_position)
        yield r / SPEED_OF_LIGHT, tgt.reflectivity, p / dist


def synthesize_packet(
    scene: Scene,
    cfg: RadioConfig,
    t: int,
    offsets: SyncOffsets | None = None,
    seed: int = 0,
) -> PacketMatrix:
    if t < 0:
        raise ValueError("packet index must be non-negative")
    offsets = offsets or SyncOffsets()
    f_base = cfg.subcarrier_offsets()
    f_rf = cfg.carrier_frequency + f_base
    max_delay = 1.0 / cfg.subcarrier_spacing

    h = np.zeros((cfg.num_subcarriers, cfg.num_antennas), dtype=complex)
    for delay, amp, u in _paths_at(scene, cfg, t * cfg.packet_period):
        if delay >= max_delay:
            raise DelayAliased(
                f"path delay {delay:.3e} s exceeds the unambiguous delay {max_delay:.3e} s"
            )
        h += amp * np.outer(np.exp(-2j * np.pi * f_rf * delay), array_response(cfg, u))

    if scene.noise_power > 0:
        rng = np.random.default_rng([seed, t])
        scale = math.sqrt(scene.noise_power / 2)
        h += scale * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))

    if offsets.timing or offsets.phase:
        ramp = np.exp(-2j * np.pi * f_base * offsets.timing + 1j * offsets.phase)
        h *= ramp[:, None]
    return PacketMatrix(t, h)


def draw_offsets(
    cfg: RadioConfig,
    num_packets: int,
    seed: int,
    timing_max: float | None = None,
    phase_max: float = math.pi,
) -> list[SyncOffsets]:
    """Per-packet offsets, uniform in +-timing_max and (-phase_max, phase_max].

    Packet 0 is the reference and always gets zero offsets.
    """
    if timing_max is None:
        timing_max = 0.1 / cfg.bandwidth
    rng = np.random.default_rng([seed, _OFFSET_STREAM])
    timing = rng.uniform(-timing_max, timing_max, num_packets)
    # uniform on [-a, a) mirrored to (-a, a]
    phase = -rng.uniform(-phase_max, phase_max, num_packets)
    out = [SyncOffsets(float(a), float(b)) for a, b in zip(timing, phase)]
    out[0] = SyncOffsets()
    return out


def synthesize_capture(
    scene: Scene,
    cfg: RadioConfig,
    num_packets: int,
    seed: int = 0,
    timing_max: float | None = None,
    phase_max: float = math.pi,
) -> SimulatedCapture:
    """Simulate ``num_packets`` consecutive packets plus per-packet ground truth."""
    if num_packets < 2:
        raise ConfigError("a capture needs at least two packets")
    if scene.sync_offsets_enabled:
        offsets = draw_offsets(cfg, num_packets, seed, timing_max, phase_max)
    else:
        offsets = [SyncOffsets()] * num_packets

    packets = [synthesize_packet(scene, cfg, t, offsets[t], seed) for t in range(num_packets)]

    truth = []
    for t in range(num_packets):
        time = t * cfg.packet_period
        for k, tgt in enumerate(scene.targets):
            p = tgt.position_at(time)
            truth.append(TruthRow(t, time, k, p.x, p.y, p.z, bistatic_range(p, scene.tx_position)))
    return SimulatedCapture(packets, truth, offsets)


def bistatic_range_rate(target, tx, time: float) -> float:
    """Time derivative of the bistatic sum-range of a constant-velocity target."""
    p = np.asarray(target.position_at(time))
    v = np.asarray(target.velocity, dtype=float)
    to_tx = p - np.asarray(tx, dtype=float)
    return float(v @ (p / np.linalg.norm(p) + to_tx / np.linalg.norm(to_tx)))
