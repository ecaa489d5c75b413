"""Movement-artifact reduction by moving-SD detection and smoothing-spline subtraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_smoothing_spline

from ..core import SAMPLING_RATE
from ..errors import ConfigError, TooShort


@dataclass(frozen=True)
class MaraConfig:
    window: float = 3.0  # seconds
    threshold_k: float = 2.0
    spline_smoothing: float = 0.01  # p in [0, 1]; 1 interpolates, 0 is a straight line
    join_window: float = 12.0  # seconds averaged on each side when re-levelling a clean segment
    fs: float = SAMPLING_RATE
    enabled: bool = True

    def __post_init__(self):
        if self.window_samples < 1:
            raise ConfigError("window must cover at least one sample", stage="mara")
        if not self.threshold_k > 0:
            raise ConfigError("threshold_k must be positive", stage="mara")
        if not 0.0 <= self.spline_smoothing <= 1.0:
            raise ConfigError("spline_smoothing must lie in [0, 1]", stage="mara")

    @property
    def window_samples(self) -> int:
        return int(round(self.window * self.fs))

    @property
    def join_samples(self) -> int:
        return max(1, int(round(self.join_window * self.fs)))


def moving_sd(x: np.ndarray, w: int) -> np.ndarray:
    """Population SD over a centred window of ``w`` samples, truncated at the edges."""
    n = len(x)
    half = w // 2
    lo = np.clip(np.arange(n) - half, 0, n)
    hi = np.clip(lo + w, 0, n)
    c1 = np.concatenate([[0.0], np.cumsum(x)])
    c2 = np.concatenate([[0.0], np.cumsum(x * x)])
    cnt = hi - lo
    mean = (c1[hi] - c1[lo]) / cnt
    var = (c2[hi] - c2[lo]) / cnt - mean**2
    return np.sqrt(np.maximum(var, 0.0))


def detect_segments(x: np.ndarray, cfg: MaraConfig) -> list[tuple[int, int, bool]]:
    """Partition ``x`` into (start, stop, is_artifact) runs."""
    n = len(x)
    w = cfg.window_samples
    msd = moving_sd(x, w)
    # robust series scale: a plain SD is inflated by the very shifts we look for
    scale = np.median(msd)
    if scale == 0:
        return [(0, n, False)]
    flagged = msd > cfg.threshold_k * scale
    if not flagged.any():
        return [(0, n, False)]
    # widen by the half window so each run covers the whole disturbance
    idx = np.flatnonzero(flagged)
    mask = np.zeros(n, dtype=bool)
    for i in idx:
        mask[max(0, i - w // 2) : min(n, i + w // 2 + 1)] = True
    edges = np.flatnonzero(np.diff(mask.astype(int))) + 1
    bounds = np.concatenate([[0], edges, [n]])
    return [(int(a), int(b), bool(mask[a])) for a, b in zip(bounds[:-1], bounds[1:])]


def _spline_trend(y: np.ndarray, p: float) -> np.ndarray:
    t = np.arange(len(y), dtype=float)
    if len(y) < 5 or p <= 0.0:
        return np.polyval(np.polyfit(t, y, 1), t) if len(y) > 1 else y.copy()
    if p >= 1.0:
        return y.copy()
    # p*sum(resid^2) + (1-p)*roughness  <=>  sum(resid^2) + lam*roughness
    return make_smoothing_spline(t, y, lam=(1.0 - p) / p)(t)


def mara_spline(series, cfg: MaraConfig | None = None) -> np.ndarray:
    """Remove the spline trend inside flagged segments and re-join the pieces.

    Each flagged segment keeps only its residual around the smoothing spline,
    shifted to the level of the preceding clean segment's tail. Clean segments
    keep their shape; after an artifact they are shifted so their head lines
    up with the previous clean tail, which removes the level shift. With no
    flagged samples the input is returned unchanged.
    """
    cfg = cfg or MaraConfig()
    x = np.asarray(series, dtype=float)
    w = cfg.window_samples
    if w >= len(x):
        raise TooShort(f"window of {w} samples not shorter than series ({len(x)})", stage="mara")
    if not cfg.enabled:
        return x.copy()
    segments = detect_segments(x, cfg)
    if len(segments) == 1 and not segments[0][2]:
        return x.copy()

    out = x.copy()
    last_clean = None  # corrected values of the most recent clean segment
    for a, b, artifact in segments:
        seg = x[a:b]
        if artifact:
            seg = seg - _spline_trend(seg, cfg.spline_smoothing)
            ref = last_clean if last_clean is not None else x[a:b]
            m = min(w, len(ref))
            seg = seg + (np.mean(ref[-m:]) - np.mean(seg))
        elif last_clean is not None:
            # bridge the artifact: continue from the previous clean level
            m = min(cfg.join_samples, len(last_clean), len(seg))
            seg = seg + (np.mean(last_clean[-m:]) - np.mean(seg[:m]))
        out[a:b] = seg
        if not artifact:
            last_clean = out[a:b]
    return out
