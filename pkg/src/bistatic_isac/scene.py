"""Radio configuration, geometry and ground-truth scene description.

All positions are local Cartesian metres with the receiving base station at
the origin. The receive array is a uniform planar array lying in the y-z
plane with its boresight along +x.

Angle conventions
-----------------
``theta``      polar angle measured from +z (``z = r' cos(theta)``).
``psi``        azimuth measured counterclockwise from +x in the x-y plane.
``elevation``  angle above the x-y plane, ``pi/2 - theta``. The AOA grid is
               expressed in (azimuth, elevation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DegenerateDirection

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class RadioConfig:
    carrier_frequency: float
    bandwidth: float
    subcarrier_spacing: float
    num_subcarriers: int
    num_antennas: int
    packet_period: float
    array_rows: int
    array_cols: int
    element_spacing: float = 0.5  # wavelengths

    def __post_init__(self):
        if self.num_subcarriers <= 0:
            raise ConfigError("num_subcarriers must be positive")
        if self.array_rows <= 0 or self.array_cols <= 0:
            raise ConfigError("array dimensions must be positive")
        if self.num_antennas != self.array_rows * self.array_cols:
            raise ConfigError(
                f"num_antennas={self.num_antennas} != array_rows*array_cols="
                f"{self.array_rows * self.array_cols}"
            )
        for name in ("carrier_frequency", "bandwidth", "subcarrier_spacing",
                     "packet_period", "element_spacing"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive, got {value!r}")
        occupied = self.num_subcarriers * self.subcarrier_spacing
        if occupied > self.bandwidth * (1 + 1e-9):
            raise ConfigError(
                f"{self.num_subcarriers} subcarriers at {self.subcarrier_spacing} Hz "
                f"occupy {occupied} Hz > bandwidth {self.bandwidth} Hz"
            )

    @classmethod
    def full_scale(cls) -> "RadioConfig":
        """Full-scale 100 MHz, 30 kHz, 64-antenna deployment configuration."""
        return cls(
            carrier_frequency=4.85e9,
            bandwidth=100e6,
            subcarrier_spacing=30e3,
            num_subcarriers=273 * 12,
            num_antennas=64,
            packet_period=0.005,
            array_rows=8,
            array_cols=8,
        )

    @classmethod
    def desk_scale(cls) -> "RadioConfig":
        """34 resource blocks and a 4x4 array; same carrier and numerology as ``full_scale``."""
        return cls(
            carrier_frequency=4.85e9,
            bandwidth=34 * 12 * 30e3,
            subcarrier_spacing=30e3,
            num_subcarriers=34 * 12,
            num_antennas=16,
            packet_period=0.005,
            array_rows=4,
            array_cols=4,
        )

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def unambiguous_range(self) -> float:
        """Largest bistatic sum-range representable without delay aliasing."""
        return SPEED_OF_LIGHT / self.subcarrier_spacing

    def subcarrier_offsets(self) -> np.ndarray:
        """Baseband frequency of each subcarrier, ``(m - M/2) * df`` for m = 0..M-1."""
        m = np.arange(self.num_subcarriers)
        return (m - self.num_subcarriers // 2) * self.subcarrier_spacing

    def element_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) index of each antenna, antenna n = row * array_cols + col."""
        n = np.arange(self.num_antennas)
        return n // self.array_cols, n % self.array_cols


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite position {(self.x, self.y, self.z)}")

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.z], dtype=dtype or float)

    @classmethod
    def of(cls, xyz) -> "Position3":
        x, y, z = (float(v) for v in xyz)
        return cls(x, y, z)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


ORIGIN = Position3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TargetSpec:
    initial_position: Position3
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)
    reflectivity: float = 1.0

    def __post_init__(self):
        if len(self.velocity) != 3 or not all(math.isfinite(v) for v in self.velocity):
            raise ConfigError(f"velocity must be three finite components, got {self.velocity!r}")
        if not self.reflectivity > 0:
            raise ConfigError("reflectivity must be positive")

    @property
    def speed(self) -> float:
        return math.sqrt(sum(v * v for v in self.velocity))

    def position_at(self, time: float) -> Position3:
        p = np.asarray(self.initial_position) + time * np.asarray(self.velocity, dtype=float)
        return Position3.of(p)


@dataclass(frozen=True)
class ClutterPath:
    """A static propagation path: total delay, amplitude and arrival direction."""

    delay: float
    amplitude: float
    azimuth: float = 0.0
    elevation: float = 0.0

    def __post_init__(self):
        if not (self.delay >= 0 and math.isfinite(self.delay)):
            raise ConfigError("clutter delay must be finite and non-negative")


@dataclass(frozen=True)
class Scene:
    tx_position: Position3
    targets: tuple[TargetSpec, ...] = ()
    clutter_paths: tuple[ClutterPath, ...] = ()
    noise_power: float = 0.0
    sync_offsets_enabled: bool = True

    def __post_init__(self):
        if self.tx_position.norm() == 0.0:
            raise ConfigError("transmitter must not be collocated with the receiver")
        if self.noise_power < 0:
            raise ConfigError("noise_power must be non-negative")
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "clutter_paths", tuple(self.clutter_paths))

    def direct_path(self, amplitude: float = 1.0) -> ClutterPath:
        """Line-of-sight path from the transmitter."""
        r, theta, psi = spherical_from_cartesian(self.tx_position)
        return ClutterPath(r / SPEED_OF_LIGHT, amplitude, psi, math.pi / 2 - theta)

    def with_snr(self, snr_db: float | None) -> "Scene":
        """Copy with noise power set ``snr_db`` below the strongest target path.

        Falls back to the strongest clutter path for target-free scenes;
        ``None`` gives a noiseless scene.
        """
        if snr_db is None:
            return replace(self, noise_power=0.0)
        amps = [t.reflectivity for t in self.targets] or [abs(c.amplitude) for c in self.clutter_paths]
        if not amps:
            raise ConfigError("cannot set an SNR for a scene without paths")
        return replace(self, noise_power=max(amps) ** 2 / 10 ** (snr_db / 10))


def bistatic_range(target, tx) -> float:
    """Sum of the tx-to-target and target-to-receiver distances."""
    p = np.asarray(target, dtype=float)
    return float(np.linalg.norm(p) + np.linalg.norm(p - np.asarray(tx, dtype=float)))


def spherical_from_cartesian(p) -> tuple[float, float, float]:
    """Return ``(r', theta, psi)`` for a point; azimuth is 0 on the z axis."""
    x, y, z = (float(v) for v in np.asarray(p, dtype=float))
    rho = math.hypot(x, y)
    r = math.hypot(rho, z)
    if r == 0.0:
        raise DegenerateDirection("direction of the zero vector is undefined")
    theta = math.atan2(rho, z)
    psi = math.atan2(y, x) if rho > 0 else 0.0
    return r, theta, psi


def cartesian_from_spherical(r: float, theta: float, psi: float) -> Position3:
    st = math.sin(theta)
    return Position3(r * st * math.cos(psi), r * st * math.sin(psi), r * math.cos(theta))


def unit_vector(azimuth, elevation) -> np.ndarray:
    """Unit direction(s) for azimuth/elevation angles; last axis is xyz."""
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    ce = np.cos(el)
    return np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=-1)
