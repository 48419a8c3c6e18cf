"""Delay/phase alignment against a reference packet and clutter differencing.

Every packet of a processing window is rotated onto the window's reference
packet using two per-antenna estimates taken from the correlation with the
reference: the residual delay (a phase slope across subcarriers) and the
residual common phase. Subtracting the aligned reference then removes all
static multipath, and an inverse FFT over subcarriers gives the differential
channel as a function of delay.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PacketMatrix
from .errors import ConfigError, IndeterminatePhase, ShapeError
from .scene import SPEED_OF_LIGHT, RadioConfig

# relative magnitude below which a phasor sum is treated as cancelled
_PHASE_TOL = 1e-12


@dataclass(frozen=True)
class PreprocConfig:
    shift: int = 8  # m0
    ifft_size: int = 4096  # Ns
    truncation: int = 512  # Ts

    def validate(self, num_subcarriers: int) -> None:
        if not 0 < self.shift < num_subcarriers:
            raise ConfigError(f"shift must be in (0, {num_subcarriers}), got {self.shift}")
        if self.ifft_size < num_subcarriers:
            raise ConfigError(f"ifft_size {self.ifft_size} < number of subcarriers {num_subcarriers}")
        if not 0 < self.truncation <= self.ifft_size:
            raise ConfigError(f"truncation must be in (0, {self.ifft_size}], got {self.truncation}")

    def delay_bin_seconds(self, cfg: RadioConfig) -> float:
        return 1.0 / (self.ifft_size * cfg.subcarrier_spacing)

    def range_bin_meters(self, cfg: RadioConfig) -> float:
        """Bistatic sum-range spanned by one delay bin."""
        return SPEED_OF_LIGHT * self.delay_bin_seconds(cfg)


@dataclass(eq=False)
class DifferentialChannel:
    t: int
    h: np.ndarray  # (Ts, N) complex


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, PacketMatrix) else np.asarray(x)


def correlate_with_reference(ref, pkt) -> np.ndarray:
    """Element-wise ``ref * conj(pkt)`` per (subcarrier, antenna)."""
    a, b = _samples(ref), _samples(pkt)
    if a.shape != b.shape:
        raise ShapeError(f"reference shape {a.shape} != packet shape {b.shape}")
    return a * np.conj(b)


def _checked_angle(s: np.ndarray, magnitude: np.ndarray, what: str) -> np.ndarray:
    bad = np.abs(s) <= _PHASE_TOL * magnitude
    bad |= ~np.isfinite(s)
    if np.any(bad):
        raise IndeterminatePhase(f"{what}: phasor sum vanishes on antenna(s) {np.flatnonzero(bad).tolist()}")
    return np.angle(s)


def estimate_delay_slope(R: np.ndarray, shift: int) -> np.ndarray:
    """Per-antenna phase slope (radians per subcarrier) of the correlation matrix.

    Unambiguous only while ``|slope| * shift < pi``.
    """
    R = np.asarray(R)
    M = R.shape[0]
    if not 0 < shift < M:
        raise ConfigError(f"shift must be in (0, {M}), got {shift}")
    A = R[: M - shift] * np.conj(R[shift:])
    total = A.sum(axis=0)
    return -_checked_angle(total, np.abs(A).sum(axis=0), "delay slope") / shift


def _delay_ramp(M: int, tau: np.ndarray) -> np.ndarray:
    m = np.arange(M) - M // 2
    return np.exp(1j * np.outer(m, tau))


def estimate_initial_phase(R: np.ndarray, tau: np.ndarray) -> np.ndarray:
    R = np.asarray(R)
    tau = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(tau)):
        raise ValueError("delay slope must be finite")
    B = R * np.conj(_delay_ramp(R.shape[0], tau))
    total = B.sum(axis=0)
    return _checked_angle(total, np.abs(B).sum(axis=0), "initial phase")


def compensate(pkt, tau: np.ndarray, p_ini: np.ndarray) -> np.ndarray:
    """Rotate a packet onto its reference using the estimated slope and phase.

    The correlation ``ref * conj(pkt)`` carries the reference-minus-packet
    phase, so applying its fitted ramp and phase to the packet aligns it.
    """
    Y = _samples(pkt)
    tau = np.asarray(tau, dtype=float)
    p_ini = np.asarray(p_ini, dtype=float)
    if tau.shape != (Y.shape[1],) or p_ini.shape != (Y.shape[1],):
        raise ShapeError("one delay slope and one phase per antenna expected")
    return Y * _delay_ramp(Y.shape[0], tau) * np.exp(1j * p_ini)[None, :]


def differential(c_t: np.ndarray, c_0: np.ndarray) -> np.ndarray:
    if np.shape(c_t) != np.shape(c_0):
        raise ShapeError("compensated matrices differ in shape")
    return np.asarray(c_t) - np.asarray(c_0)


def to_time_domain(c_diff: np.ndarray, ifft_size: int, truncation: int, t: int = 0) -> DifferentialChannel:
    """Zero-padded IFFT over subcarriers, keeping the first ``truncation`` delay bins.

    Uses the 1/Ns-normalised inverse transform, so the full-length output
    satisfies ``sum|h|^2 = sum|C|^2 / Ns``.
    """
    c_diff = np.asarray(c_diff)
    if truncation > ifft_size or truncation <= 0:
        raise ConfigError(f"truncation {truncation} must be in (0, ifft_size={ifft_size}]")
    if ifft_size < c_diff.shape[0]:
        raise ConfigError(f"ifft_size {ifft_size} < number of subcarriers {c_diff.shape[0]}")
    h = np.fft.ifft(c_diff, n=ifft_size, axis=0)
    return DifferentialChannel(t, h[:truncation])


def align(ref, pkt, shift: int) -> np.ndarray:
    """Estimate offsets of ``pkt`` relative to ``ref`` and return the aligned packet."""
    R = correlate_with_reference(ref, pkt)
    tau = estimate_delay_slope(R, shift)
    return compensate(pkt, tau, estimate_initial_phase(R, tau))


def preprocess_window(packets, cfg: PreprocConfig) -> list[DifferentialChannel]:
    """Differential channels for ``packets[1:]`` against ``packets[0]``.

    ``packets`` is a sequence of PacketMatrix; the first is the reference.
    """
    if len(packets) < 2:
        raise ConfigError("a window needs a reference and at least one packet")
    ref = packets[0]
    Y0 = _samples(ref)
    cfg.validate(Y0.shape[0])
    c0 = align(Y0, Y0, cfg.shift)
    out = []
    for pkt in packets[1:]:
        c_t = align(Y0, pkt, cfg.shift)
        t = pkt.t if isinstance(pkt, PacketMatrix) else len(out) + 1
        out.append(to_time_domain(differential(c_t, c0), cfg.ifft_size, cfg.truncation, t))
    return out
