"""Bistatic OFDM sensing: detect, track and localize moving targets from CSI snapshots."""

from .errors import IsacError
from .scene import ClutterPath, Position3, RadioConfig, Scene, TargetSpec, bistatic_range

__version__ = "0.1.0"

__all__ = ["IsacError", "ClutterPath", "Position3", "RadioConfig", "Scene", "TargetSpec", "bistatic_range"]
