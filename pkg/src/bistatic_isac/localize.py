"""Closed-form bistatic position fix from sum-range and arrival angles.

With the receiver at the origin and the transmitter at ``tx``, a target at
distance ``r'`` along unit direction ``u`` has sum-range
``r = r' + |r' u - tx|``. Squaring and solving for ``r'`` gives

    r' = (|tx|^2 - r^2) / (2 tx.u - 2 r)

which is the only root; it is physical when ``0 < r' <= r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .detect import Detection
from .doppler import AoaGrid
from .errors import DegenerateGeometry, NoPhysicalSolution
from .preprocess import PreprocConfig
from .scene import Position3, RadioConfig, cartesian_from_spherical


@dataclass(frozen=True)
class Measurement:
    r: float  # bistatic sum-range, m
    theta: float  # polar angle from +z
    psi: float  # azimuth from +x


def measurement_from_detection(d: Detection, grid: AoaGrid, cfg: RadioConfig, preproc: PreprocConfig) -> Measurement:
    r = d.delay_bin * preproc.range_bin_meters(cfg)
    az, el = grid.angles(d.aoa_id)
    return Measurement(r, math.pi / 2 - el, az)


def _direction(theta, psi):
    st = np.sin(theta)
    return np.stack([st * np.cos(psi), st * np.sin(psi), np.cos(theta)], axis=-1)


def solve_bistatic(meas: Measurement, tx, eps: float = 1e-9) -> Position3:
    if not meas.r > 0:
        raise DegenerateGeometry(f"sum-range {meas.r} m carries no position information")
    a, b, c = (float(v) for v in np.asarray(tx, dtype=float))
    st = math.sin(meas.theta)
    den = 2 * (a * st * math.cos(meas.psi) + b * st * math.sin(meas.psi) + c * math.cos(meas.theta)) - 2 * meas.r
    if abs(den) <= eps:
        raise DegenerateGeometry(f"denominator {den:.3e} within {eps:g} of zero")
    r_rx = (a * a + b * b + c * c - meas.r * meas.r) / den
    if r_rx <= 0 or r_rx > meas.r:
        raise NoPhysicalSolution(f"receiver distance {r_rx:.6g} m outside (0, {meas.r:.6g}]")
    return cartesian_from_spherical(r_rx, meas.theta, meas.psi)


def solve_bistatic_many(r, theta, psi, tx, eps: float = 1e-9):
    """Vectorised ``solve_bistatic``.

    ``tx`` is one (3,) transmitter or one per row (K, 3). Returns
    ``(positions (K, 3), receiver distance (K,), valid (K,))``; invalid rows
    hold NaN instead of raising.
    """
    r = np.asarray(r, dtype=float)
    u = _direction(np.asarray(theta, dtype=float), np.asarray(psi, dtype=float))
    tx = np.asarray(tx, dtype=float)
    den = 2 * np.sum(u * tx, axis=-1) - 2 * r
    num = np.sum(tx * tx, axis=-1) - r * r
    ok = (np.abs(den) > eps) & (r > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_rx = np.where(ok, num / np.where(ok, den, 1.0), np.nan)
    ok &= (r_rx > 0) & (r_rx <= r)
    r_rx = np.where(ok, r_rx, np.nan)
    return u * r_rx[..., None], r_rx, ok


def localize_detection(d: Detection, tx, grid: AoaGrid, cfg: RadioConfig, preproc: PreprocConfig,
                       eps: float = 1e-9) -> Detection:
    """Return ``d`` with its provisional position filled in (may raise)."""
    pos = solve_bistatic(measurement_from_detection(d, grid, cfg, preproc), tx, eps)
    return replace(d, position=pos)
