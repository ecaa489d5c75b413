import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaitnirs.errors import ConfigError, TooShort
from gaitnirs.preprocess.wavelet import (
    WaveletConfig,
    coefficient_threshold,
    daubechies_filter,
    wavedec,
    wavelet_denoise,
    waverec,
)

# Tabulated db5 scaling filter (sum = sqrt 2).
DB5 = [
    0.160102397974125,
    0.603829269797473,
    0.724308528438574,
    0.138428145901103,
    -0.242294887066190,
    -0.032244869585030,
    0.077571493840065,
    -0.006241490213012,
    -0.012580751999016,
    0.003335725285002,
]


def test_db5_taps_match_table():
    np.testing.assert_allclose(daubechies_filter(5), DB5, atol=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3, 5, 8])
def test_scaling_filter_is_orthonormal(order):
    h = daubechies_filter(order)
    assert len(h) == 2 * order
    assert h.sum() == pytest.approx(np.sqrt(2), abs=1e-12)
    for shift in range(0, len(h), 2):
        expected = 1.0 if shift == 0 else 0.0
        assert np.dot(h[shift:], h[: len(h) - shift]) == pytest.approx(expected, abs=1e-10)


def test_db5_has_five_vanishing_moments():
    h = daubechies_filter(5)
    g = h[::-1] * (-1.0) ** np.arange(10)
    k = np.arange(10, dtype=float)
    for p in range(5):
        assert abs(np.sum(g * k**p)) < 1e-6 * max(1.0, np.sum(np.abs(g) * k**p))


@pytest.mark.parametrize("n", [64, 120, 200])
def test_perfect_reconstruction(n):
    x = np.random.default_rng(n).normal(size=n).cumsum()
    out = wavelet_denoise(x, WaveletConfig(alpha=0.0))
    assert np.linalg.norm(out - x) / np.linalg.norm(x) < 1e-9


@given(arrays(np.float64, st.integers(64, 300), elements=st.floats(-1e3, 1e3)))
@settings(max_examples=40, deadline=None)
def test_decompose_reconstruct_identity(x):
    a, d, pads = wavedec(x, 4)
    y = waverec(a, d, pads)
    assert y.shape == x.shape
    np.testing.assert_allclose(y, x, atol=1e-9 * (1 + np.abs(x).max()))


def test_zero_threshold_probability_keeps_everything():
    assert coefficient_threshold(np.array([1.0, -2.0, 3.0]), 0.0) == np.inf


def spike_case(n=400, fs=2.0, carrier_hz=0.05, spike_at=200, height=10.0):
    t = np.arange(n) / fs
    carrier = np.sin(2 * np.pi * carrier_hz * t)
    x = carrier.copy()
    x[spike_at] += height
    return carrier, x


def test_spike_peak_is_reduced_by_at_least_80_percent():
    carrier, x = spike_case()
    out = wavelet_denoise(x)
    before = x[200] - carrier[200]
    after = out[200] - carrier[200]
    assert abs(after) <= 0.2 * abs(before)


def test_carrier_distortion_outside_spike_support_is_small():
    carrier, x = spike_case()
    out = wavelet_denoise(x)
    # the spike's own wavelet support: filter length x 2^levels samples centred on it
    half = 10 * 2**4 // 2
    keep = np.ones(len(x), dtype=bool)
    keep[200 - half : 200 + half + 1] = False
    rms = np.sqrt(np.mean((out[keep] - carrier[keep]) ** 2)) / np.sqrt(np.mean(carrier[keep] ** 2))
    assert rms <= 0.05


def test_clean_carrier_passes_nearly_unchanged():
    carrier, _ = spike_case()
    out = wavelet_denoise(carrier)
    assert np.sqrt(np.mean((out - carrier) ** 2)) / np.sqrt(np.mean(carrier**2)) <= 0.05


def test_disabled_stage_is_identity():
    x = np.random.default_rng(2).normal(size=128)
    np.testing.assert_array_equal(wavelet_denoise(x, WaveletConfig(enabled=False)), x)


def test_short_series_is_rejected():
    with pytest.raises(TooShort):
        wavelet_denoise(np.zeros(40))


def test_only_db5_is_configurable():
    with pytest.raises(ConfigError):
        WaveletConfig(order=4)
