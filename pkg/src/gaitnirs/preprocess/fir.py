"""Windowed-sinc linear-phase low-pass filter."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import SAMPLING_RATE
from ..errors import ConfigError, TooShort

_WINDOWS = {
    "hamming": np.hamming,
    "hann": np.hanning,
    "blackman": np.blackman,
    "rect": np.ones,
}


@dataclass(frozen=True)
class FilterSpec:
    taps: int = 101
    cutoff: float = 0.08
    window_fn: str = "hamming"
    fs: float = SAMPLING_RATE
    enabled: bool = True
    coefficients: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.taps < 1 or self.taps % 2 == 0:
            raise ConfigError(f"taps must be a positive odd count, got {self.taps}", stage="fir")
        if not 0 < self.cutoff < self.fs / 2:
            raise ConfigError(f"cutoff must lie in (0, {self.fs / 2}) Hz", stage="fir")
        if self.window_fn not in _WINDOWS:
            raise ConfigError(f"unknown window {self.window_fn!r}; choose from {sorted(_WINDOWS)}", stage="fir")
        object.__setattr__(self, "coefficients", design_lowpass(self.taps, self.cutoff, self.fs, self.window_fn))

    @property
    def group_delay(self) -> int:
        return (self.taps - 1) // 2


def design_lowpass(taps: int, cutoff: float, fs: float = SAMPLING_RATE, window_fn: str = "hamming") -> np.ndarray:
    """Symmetric taps with unity DC gain."""
    m = (taps - 1) / 2.0
    n = np.arange(taps) - m
    fc = cutoff / fs
    h = 2 * fc * np.sinc(2 * fc * n) * _WINDOWS[window_fn](taps)
    h = h / h.sum()
    # enforce exact symmetry after normalisation
    h = 0.5 * (h + h[::-1])
    h.setflags(write=False)
    return h


def frequency_response(taps: np.ndarray, freqs, fs: float = SAMPLING_RATE) -> np.ndarray:
    """Magnitude |H(f)| of an FIR filter at the given frequencies (Hz)."""
    taps = np.asarray(taps, dtype=float)
    w = 2 * np.pi * np.asarray(freqs, dtype=float)[..., None] / fs
    k = np.arange(len(taps))
    return np.abs(np.sum(taps * np.exp(-1j * w * k), axis=-1))


def fir_lowpass(series, spec: FilterSpec | None = None) -> np.ndarray:
    """Zero-lag low-pass: mirror-extend by the group delay, convolve, keep the centre."""
    spec = spec or FilterSpec()
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("fir_lowpass expects a 1-D series")
    if len(x) < spec.taps:
        raise TooShort(f"series of {len(x)} samples shorter than {spec.taps} taps", stage="fir")
    if not spec.enabled or spec.taps == 1:
        return x.copy()
    pad = spec.group_delay
    ext = np.pad(x, pad, mode="symmetric")
    return np.convolve(ext, spec.coefficients, mode="valid")
