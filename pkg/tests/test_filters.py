import numpy as np
import pytest
from scipy.signal import firwin

from gaitnirs.errors import ConfigError, TooShort
from gaitnirs.preprocess.fir import FilterSpec, design_lowpass, fir_lowpass, frequency_response
from gaitnirs.preprocess.mara import MaraConfig, detect_segments, mara_spline, moving_sd

# --- FIR ------------------------------------------------------------------------


def db(x):
    return 20 * np.log10(x)


def test_taps_match_scipy_window_design():
    np.testing.assert_allclose(design_lowpass(101, 0.08, 2.0), firwin(101, 0.08, window="hamming", fs=2.0), atol=1e-15)


def test_taps_are_symmetric_with_unit_dc_gain():
    h = FilterSpec().coefficients
    np.testing.assert_array_equal(h, h[::-1])
    assert abs(h.sum() - 1.0) <= 1e-9


def test_frequency_response_meets_band_limits():
    h = FilterSpec().coefficients
    assert db(frequency_response(h, 0.25)) <= -40.0
    assert abs(db(frequency_response(h, 0.02))) <= 0.5


def test_frequency_response_matches_direct_dtft():
    h = FilterSpec().coefficients
    f = 0.17
    direct = abs(sum(c * np.exp(-2j * np.pi * f / 2.0 * k) for k, c in enumerate(h)))
    assert frequency_response(h, f) == pytest.approx(direct, rel=1e-12)


def test_output_aligned_and_same_length():
    t = np.arange(400) / 2.0
    slow = np.sin(2 * np.pi * 0.01 * t)
    out = fir_lowpass(slow)
    assert out.shape == slow.shape
    # zero lag: in the interior a slow sine comes back in phase
    np.testing.assert_allclose(out[60:-60], slow[60:-60], atol=5e-3)
    lag = np.argmax(np.correlate(out[60:-60], slow[60:-60], mode="full")) - (len(slow) - 121)
    assert lag == 0


def test_constant_passes_exactly():
    np.testing.assert_allclose(fir_lowpass(np.full(300, 3.5)), 3.5, rtol=1e-12)


def test_respiration_band_is_removed():
    t = np.arange(600) / 2.0
    out = fir_lowpass(np.sin(2 * np.pi * 0.3 * t))
    assert np.max(np.abs(out[60:-60])) < 1e-2


def test_short_series_rejected():
    with pytest.raises(TooShort):
        fir_lowpass(np.zeros(100))


def test_even_tap_count_rejected():
    with pytest.raises(ConfigError):
        FilterSpec(taps=100)


# --- MARA -----------------------------------------------------------------------


def test_moving_sd_matches_loop():
    x = np.random.default_rng(0).normal(size=50)
    w = 6
    got = moving_sd(x, w)
    for i in range(50):
        lo = min(max(0, i - w // 2), 50)
        assert got[i] == pytest.approx(np.std(x[lo : min(50, lo + w)]), abs=1e-12)


def test_smooth_signal_returned_exactly():
    t = np.arange(400) / 2.0
    x = 0.5 * np.sin(2 * np.pi * 0.01 * t)
    np.testing.assert_array_equal(mara_spline(x), x)


def test_all_zero_stays_zero():
    np.testing.assert_array_equal(mara_spline(np.zeros(200)), np.zeros(200))


def step_case(seed, n=400, at=200, sigma=1.0, k=5.0):
    rng = np.random.default_rng(seed)
    noise = rng.normal(0, sigma, n)
    x = noise.copy()
    x[at:] += k * sigma
    return x, noise


@pytest.mark.parametrize("seed", range(10))
def test_level_shift_mostly_removed(seed):
    x, _ = step_case(seed)
    out = mara_spline(x)
    residual = np.mean(out[260:]) - np.mean(out[:140])
    assert abs(residual) <= 0.3 * 5.0


def test_level_shift_flagged_where_it_occurs():
    x, _ = step_case(1)
    segs = detect_segments(x, MaraConfig())
    flagged = [(a, b) for a, b, art in segs if art]
    assert any(a <= 200 < b for a, b in flagged)


def test_window_not_shorter_than_series_rejected():
    with pytest.raises(TooShort):
        mara_spline(np.zeros(6))


def test_disabled_is_identity():
    x, _ = step_case(0)
    np.testing.assert_array_equal(mara_spline(x, MaraConfig(enabled=False)), x)


def test_unflagged_samples_before_first_artifact_untouched():
    x, _ = step_case(3)
    segs = detect_segments(x, MaraConfig())
    first = next(a for a, b, art in segs if art)
    np.testing.assert_array_equal(mara_spline(x)[:first], x[:first])


def test_invalid_parameters():
    with pytest.raises(ConfigError):
        MaraConfig(threshold_k=0)
    with pytest.raises(ConfigError):
        MaraConfig(window=0.1)
    with pytest.raises(ConfigError):
        MaraConfig(spline_smoothing=1.5)
