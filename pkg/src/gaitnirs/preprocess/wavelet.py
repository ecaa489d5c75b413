"""Daubechies wavelet transform and outlier-coefficient denoising.

The transform is periodized over a mirror-padded copy of the input, which
keeps it orthogonal (exact reconstruction) while the padding absorbs the
wrap-around at the edges. The padding is trimmed after the inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache
from math import comb, floor, log2
from statistics import NormalDist

import numpy as np

from ..errors import ConfigError, TooShort

MAD_TO_SD = 0.6745


@cache
def daubechies_filter(order: int) -> np.ndarray:
    """Minimum-phase Daubechies scaling filter with ``order`` vanishing moments.

    Built by spectral factorisation; normalised so the taps sum to sqrt(2).
    """
    if order < 1:
        raise ConfigError("Daubechies order must be >= 1")
    # P(y) = sum_k C(N-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z) / 4
    poly = [comb(order - 1 + k, k) for k in range(order)]
    h = np.array([1.0 + 0j])
    for _ in range(order):
        h = np.convolve(h, [1.0, 1.0])
    if order > 1:
        for y in np.roots(poly[::-1]):
            pair = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
            h = np.convolve(h, [1.0, -pair[np.argmin(np.abs(pair))]])
    h = np.real(h)
    h = h / h.sum() * np.sqrt(2.0)
    h.setflags(write=False)
    return h


def _qmf(h: np.ndarray) -> np.ndarray:
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


def _index(m: int, taps: int) -> np.ndarray:
    return (2 * np.arange(m // 2)[:, None] + np.arange(taps)[None, :]) % m


def _analysis(x: np.ndarray, h: np.ndarray, g: np.ndarray):
    seg = x[_index(len(x), len(h))]
    return seg @ h, seg @ g


def _synthesis(a: np.ndarray, d: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    m = 2 * len(a)
    out = np.zeros(m)
    np.add.at(out, _index(m, len(h)), a[:, None] * h + d[:, None] * g)
    return out


def _padding(n: int, levels: int, taps: int) -> tuple[int, int]:
    block = 2**levels
    left = 2 * taps
    total = n + 2 * left
    right = left + (-total) % block
    return left, right


def wavedec(x, levels: int, order: int = 5):
    """Multilevel periodized DWT of the mirror-padded signal.

    Returns ``(approx, [detail_1, ..., detail_levels], (pad_left, pad_right))``
    with detail_1 the finest scale.
    """
    x = np.asarray(x, dtype=float)
    h = daubechies_filter(order)
    g = _qmf(h)
    left, right = _padding(len(x), levels, len(h))
    a = np.pad(x, (left, right), mode="symmetric")
    details = []
    for _ in range(levels):
        a, d = _analysis(a, h, g)
        details.append(d)
    return a, details, (left, right)


def waverec(approx, details, pads, order: int = 5) -> np.ndarray:
    h = daubechies_filter(order)
    g = _qmf(h)
    a = np.asarray(approx, dtype=float)
    for d in reversed(details):
        a = _synthesis(a, d, h, g)
    left, right = pads
    return a[left : len(a) - right]


@dataclass(frozen=True)
class WaveletConfig:
    order: int = 5
    levels: int = 4
    alpha: float = 0.1
    enabled: bool = True

    def __post_init__(self):
        if self.order != 5:
            raise ConfigError("only the order-5 Daubechies wavelet (db5) is supported", stage="wavelet")
        if self.levels < 1:
            raise ConfigError("levels must be >= 1", stage="wavelet")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]", stage="wavelet")


def coefficient_threshold(d: np.ndarray, alpha: float) -> float:
    """Magnitude above which a detail coefficient counts as an outlier."""
    if alpha <= 0.0:
        return np.inf
    sigma = np.median(np.abs(d - np.median(d))) / MAD_TO_SD
    if alpha >= 1.0:
        return 0.0
    return NormalDist().inv_cdf(1.0 - alpha / 2.0) * sigma


def wavelet_denoise(series, cfg: WaveletConfig | None = None) -> np.ndarray:
    """Zero outlying detail coefficients at every level and invert.

    A coefficient is an outlier when its magnitude exceeds the two-sided
    Gaussian quantile for ``alpha`` times the level's robust SD.
    """
    cfg = cfg or WaveletConfig()
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("wavelet_denoise expects a 1-D series")
    n = len(x)
    if n < 2 ** (cfg.levels + 2):
        raise TooShort(f"series of {n} samples too short for {cfg.levels} levels", stage="wavelet")
    if cfg.levels > floor(log2(n)) - 2:
        raise ConfigError(f"levels={cfg.levels} exceeds floor(log2({n})) - 2", stage="wavelet")
    if not cfg.enabled:
        return x.copy()
    approx, details, pads = wavedec(x, cfg.levels, cfg.order)
    cleaned = []
    for d in details:
        thr = coefficient_threshold(d, cfg.alpha)
        cleaned.append(np.where(np.abs(d) > thr, 0.0, d))
    return waverec(approx, cleaned, pads, cfg.order)
