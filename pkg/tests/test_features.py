import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats as sps

from gaitnirs.core import SubjectMeta, Task, TaskEpoch
from gaitnirs.errors import ConfigError, DataError, HemisphereEmpty
from gaitnirs.features import (
    ABLATION_MASKS,
    FEATURE_COLUMNS,
    FNIRS_MASK,
    FULL_MASK,
    CondFeatures,
    assemble_vector,
    build_table,
    channel_stats,
    condition_features,
    encode_pair,
    hemisphere_mean,
    make_mask,
    read_features,
    truncate_epoch,
    write_features,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec20 = arrays(np.float64, 20, elements=finite)


# --- statistics -----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_channel_stats_match_scipy(seed):
    x = np.random.default_rng(seed).gamma(2.0, size=120)
    s = channel_stats(x)
    assert s.skewness == pytest.approx(sps.skew(x, bias=True), rel=1e-10)
    assert s.kurtosis == pytest.approx(sps.kurtosis(x, fisher=True, bias=True), rel=1e-10)
    assert (s.max, s.min) == (x.max(), x.min())
    assert s.mean == pytest.approx(x.mean(), rel=1e-12)


def test_gaussian_excess_kurtosis_near_zero():
    x = np.random.default_rng(0).normal(size=200_000)
    assert abs(channel_stats(x).kurtosis) < 0.05


def test_constant_series_is_degenerate():
    s = channel_stats(np.full(30, 0.1))
    assert s.degenerate and s.skewness == 0.0 and s.kurtosis == 0.0


def test_too_few_samples():
    with pytest.raises(DataError):
        channel_stats([1.0, 2.0, 3.0])


@given(arrays(np.float64, st.integers(4, 60), elements=finite))
@settings(max_examples=80, deadline=None)
def test_min_le_mean_le_max(x):
    s = channel_stats(x)
    assert s.min <= s.mean + 1e-9 and s.mean <= s.max + 1e-9
    assert np.isfinite(s.as_array()).all()


@given(
    arrays(np.float64, st.integers(8, 40), elements=st.floats(-10, 10)),
    st.floats(0.1, 10),
    st.floats(-50, 50),
)
@settings(max_examples=60, deadline=None)
def test_affine_law(x, a, b):
    assume(np.std(x) > 1e-3)
    s, t = channel_stats(x), channel_stats(a * x + b)
    np.testing.assert_allclose([t.max, t.min, t.mean], [a * s.max + b, a * s.min + b, a * s.mean + b], atol=1e-8)
    np.testing.assert_allclose([t.skewness, t.kurtosis], [s.skewness, s.kurtosis], atol=1e-6)


def test_hemisphere_mean_uses_valid_channels_only():
    st_ = np.arange(80.0).reshape(16, 5)
    valid = np.ones(16, bool)
    valid[0] = False
    left, right = hemisphere_mean(st_, valid)
    np.testing.assert_allclose(left, st_[1:8].mean(axis=0))
    np.testing.assert_allclose(right, st_[8:].mean(axis=0))


def test_empty_hemisphere():
    valid = np.ones(16, bool)
    valid[8:] = False
    with pytest.raises(HemisphereEmpty) as exc:
        hemisphere_mean(np.zeros((16, 5)), valid)
    assert exc.value.stage == "features"


def _epoch(task, hbo2, hb, sid="a", valid=None):
    return TaskEpoch(sid, task, hbo2, hb, np.ones(16, bool) if valid is None else valid)


def test_condition_features_layout():
    rng = np.random.default_rng(2)
    hb = rng.normal(size=(16, 40))
    hbo2 = rng.normal(size=(16, 40)) + 5
    f = condition_features(_epoch("STW", hbo2, hb))
    # block order hb_l, hb_r, hbo2_l, hbo2_r; stat order max, min, mean, skew, kurt
    assert f.values[2] == pytest.approx(hb[:8].mean())
    assert f.values[15 + 2] == pytest.approx(hbo2[8:].mean())
    assert f.values[10] == pytest.approx(np.mean(hbo2[:8].max(axis=1)))


def test_truncation_to_horizon():
    x = np.zeros((16, 200))
    assert truncate_epoch(_epoch("STW", x, x), 30).n_samples == 60
    assert truncate_epoch(_epoch("STW", x, x), 500).n_samples == 200
    with pytest.raises(ConfigError):
        truncate_epoch(_epoch("STW", x, x), 0)


# --- encoding ---------------------------------------------------------------------


def _pair(a, b, sid="a"):
    return CondFeatures(sid, "STW", a), CondFeatures(sid, "DTW", b)


@given(vec20, vec20)
@settings(max_examples=500, deadline=None)
def test_bits_are_complements_without_ties(a, b):
    assume(np.all(a != b))
    stw, dtw = encode_pair(*_pair(a, b))
    np.testing.assert_array_equal(stw.bits + dtw.bits, np.ones(20))
    np.testing.assert_array_equal(dtw.bits, (b > a).astype(int))


def test_ties_give_zero_to_both():
    a = np.arange(20.0)
    stw, dtw = encode_pair(*_pair(a, a.copy()))
    assert stw.bits.sum() == dtw.bits.sum() == 0


@pytest.mark.parametrize(
    "transform", [np.exp, lambda v: 3 * v, lambda v: v + 7], ids=["exp", "scale", "shift"]
)
@given(a=arrays(np.float64, 20, elements=st.floats(-20, 20)), b=arrays(np.float64, 20, elements=st.floats(-20, 20)),
       k=st.integers(0, 19))
@settings(max_examples=100, deadline=None)
def test_monotone_transform_invariance(transform, a, b, k):
    before = encode_pair(*_pair(a, b))
    a2, b2 = a.copy(), b.copy()
    a2[k], b2[k] = transform(a[k]), transform(b[k])
    assume(np.isfinite([a2[k], b2[k]]).all() and (a[k] == b[k]) == (a2[k] == b2[k]))
    after = encode_pair(*_pair(a2, b2))
    for x, y in zip(before, after):
        np.testing.assert_array_equal(x.bits, y.bits)


def test_subject_mismatch_rejected():
    with pytest.raises(DataError):
        encode_pair(CondFeatures("a", "STW", np.zeros(20)), CondFeatures("b", "DTW", np.zeros(20)))


def test_condition_order_enforced():
    with pytest.raises(DataError):
        encode_pair(CondFeatures("a", "DTW", np.zeros(20)), CondFeatures("a", "STW", np.zeros(20)))


# --- vector assembly and masks --------------------------------------------------


def test_mask_dimensions():
    assert FULL_MASK.sum() == 22
    assert FNIRS_MASK.sum() == 20
    assert ABLATION_MASKS["all"].sum() == 20
    assert ABLATION_MASKS["kurt+skew"].sum() == 8
    assert ABLATION_MASKS["hbo2 max+min+mean"].sum() == 6
    assert make_mask(stats=("max", "min", "mean")).sum() == 14


def test_ablation_masks_exclude_demographics():
    assert len(ABLATION_MASKS) == 7
    for m in ABLATION_MASKS.values():
        assert not m[:2].any()


def test_assemble_vector_layout_and_label():
    subject = SubjectMeta("a", 70, "F", 88)
    enc = encode_pair(*_pair(np.zeros(20), np.arange(20.0) + 1))
    x, y = assemble_vector(enc[1], subject)
    assert y == 1 and x[0] == 1 and x[1] == 88 and x[2:].sum() == 20
    x, y = assemble_vector(enc[0], subject, FNIRS_MASK)
    assert y == 0 and len(x) == 20 and x.sum() == 0


def test_empty_mask_rejected():
    enc = encode_pair(*_pair(np.zeros(20), np.ones(20)))
    with pytest.raises(ConfigError):
        assemble_vector(enc[0], SubjectMeta("a", 70, "F", 88), np.zeros(22, bool))


def test_table_round_trip_and_exclusions(tmp_path):
    rng = np.random.default_rng(0)
    subjects = [SubjectMeta(f"s{i}", 70, "M", 90 + i) for i in range(3)]
    epochs = {}
    for s in subjects:
        epochs[s.subject_id] = tuple(
            _epoch(t, rng.normal(size=(16, 50)), rng.normal(size=(16, 50)), s.subject_id) for t in ("STW", "DTW")
        )
    bad = np.ones(16, bool)
    bad[:8] = False
    epochs["s1"] = (_epoch("STW", np.zeros((16, 50)), np.zeros((16, 50)), "s1", bad), epochs["s1"][1])
    table, excluded = build_table(subjects, epochs)
    assert len(table) == 4 and [e[0] for e in excluded] == ["s1"]
    assert list(table.tasks) == [Task.STW, Task.DTW] * 2
    write_features(tmp_path / "f.csv", table)
    back = read_features(tmp_path / "f.csv")
    np.testing.assert_array_equal(back.X, table.X)
    assert back.subject_ids == table.subject_ids
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "subject_id,task," + ",".join(FEATURE_COLUMNS)
