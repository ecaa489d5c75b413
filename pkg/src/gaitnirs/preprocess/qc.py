"""Automatic channel rejection on raw intensities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import N_CHANNELS, RawRecording
from ..errors import AllChannelsRejected, ConfigError

MAX_OUTLIER_FRACTION = 0.01


@dataclass(frozen=True)
class QcConfig:
    saturation_level: float = 4095.0
    dark_level: float = 10.0
    max_abs_z: float = 6.0
    min_variance: float = 1e-6

    def __post_init__(self):
        if not self.saturation_level > self.dark_level >= 0:
            raise ConfigError("need saturation_level > dark_level >= 0", stage="qc")
        if self.max_abs_z <= 0 or self.min_variance < 0:
            raise ConfigError("max_abs_z must be positive and min_variance non-negative", stage="qc")


def channel_problems(x: np.ndarray, cfg: QcConfig) -> list[str]:
    """Reasons a single intensity series fails QC (empty list when it passes)."""
    reasons = []
    if np.any(x >= cfg.saturation_level):
        reasons.append("saturation")
    if np.median(x) <= cfg.dark_level:
        reasons.append("dark current")
    var = np.var(x)
    if var < cfg.min_variance:
        reasons.append("low variance")
    elif np.mean(np.abs((x - np.mean(x)) / np.sqrt(var)) > cfg.max_abs_z) > MAX_OUTLIER_FRACTION:
        reasons.append("extreme noise")
    if not np.all(np.isfinite(x)):
        reasons.append("non-finite")
    return reasons


def qc_channels(rec: RawRecording, cfg: QcConfig | None = None) -> np.ndarray:
    """Boolean validity mask over the 16 channels; a channel must pass at both wavelengths."""
    cfg = cfg or QcConfig()
    valid = np.array(
        [not channel_problems(rec.i730[c], cfg) and not channel_problems(rec.i850[c], cfg) for c in range(N_CHANNELS)]
    )
    if not valid.any():
        raise AllChannelsRejected(f"{rec.subject_id}: all {N_CHANNELS} channels rejected", stage="qc")
    return valid
