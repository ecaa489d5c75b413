import numpy as np
import pytest
from scipy.stats import binom

from gaitnirs.core import Task
from gaitnirs.errors import ConfigError, EmptyCohort
from gaitnirs.synthgen import (
    FEMALE_FRACTION,
    EffectConfig,
    duration_histogram,
    generate_cohort,
    generate_session,
    sample_subject,
    task_durations,
    task_order,
    trapezoid,
)


@pytest.fixture(scope="module")
def big_cohort():
    return generate_cohort(451, 7)


def test_cohort_size_and_markers(big_cohort):
    subjects, recs, _ = big_cohort
    assert len(subjects) == len(recs) == 451
    assert all(r.marker(Task.STW) and r.marker(Task.DTW) and r.marker(Task.ALPHA) for r in recs)


def test_female_count_within_binomial_band(big_cohort):
    females = sum(s.gender == "F" for s in big_cohort.subjects)
    lo, hi = binom.interval(0.999, 451, FEMALE_FRACTION)
    assert lo <= females <= hi


def test_demographic_ranges(big_cohort):
    ages = np.array([s.age for s in big_cohort.subjects])
    assert ages.min() >= 65 and ages.max() <= 95
    assert abs(ages.mean() - 76.16) < 1.5
    assert all(40 <= s.rbans <= 160 for s in big_cohort.subjects)


def test_durations_mostly_in_configured_ranges(big_cohort):
    stw = task_durations(big_cohort.recordings, Task.STW)
    dtw = task_durations(big_cohort.recordings, Task.DTW)
    assert np.mean((stw >= 30) & (stw <= 40)) > 0.9
    assert np.mean((dtw >= 35) & (dtw <= 50)) > 0.9
    assert dtw.mean() > stw.mean()


def test_histogram_modes_inside_ranges(big_cohort):
    for task, (lo, hi) in ((Task.STW, (30, 40)), (Task.DTW, (35, 50))):
        edges, counts = duration_histogram(big_cohort.recordings, task)
        mode = np.argmax(counts)
        assert lo <= edges[mode] and edges[mode + 1] <= hi


def test_same_seed_same_bytes(tmp_path):
    from gaitnirs.io import write_cohort

    for name in ("a", "b"):
        subjects, recs, truths = generate_cohort(10, 7)
        write_cohort(tmp_path / name, subjects, recs, truths)
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.csv"))
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_subjects_independent_of_cohort_size():
    small = generate_cohort(3, 21)
    large = generate_cohort(8, 21)
    assert small.subjects == large.subjects[:3]
    assert small.recordings == large.recordings[:3]


def test_empty_cohort_rejected():
    with pytest.raises(EmptyCohort):
        generate_cohort(0, 1)


def test_quiet_session_is_the_template():
    cfg = EffectConfig(subject_offset_sd=0.0, channel_scale_sd=0.0).quiet()
    subject = sample_subject(0, np.random.default_rng(0))
    session = generate_session(subject, cfg, np.random.default_rng(1), task_order(0))
    t = np.arange(session.recording.n_samples) / 2.0
    expected = np.zeros_like(t)
    amps = {Task.STW: cfg.stw_hbo2_amp, Task.ALPHA: cfg.alpha_hbo2_amp, Task.DTW: cfg.dtw_hbo2_amp}
    for ev in session.recording.events:
        expected += amps[ev.task] * trapezoid(t, ev.task_start, ev.task_end)
    np.testing.assert_array_equal(session.hbo2, np.broadcast_to(expected, session.hbo2.shape))
    np.testing.assert_array_equal(session.hb, cfg.hb_amp_ratio * session.hbo2)


def test_trapezoid_shape():
    t = np.arange(0, 30, 0.5)
    y = trapezoid(t, 5, 15)
    assert y[t == 7.5][0] == 0.5 and y[t == 12][0] == 1.0 and y[t == 20][0] == 0.0 and y[t == 17.5][0] == 0.5


def test_dtw_truth_exceeds_stw_across_subjects():
    subjects, recs, truths = generate_cohort(100, 3)
    diffs = []
    for s, r in zip(subjects, recs):
        hbo2 = truths[s.subject_id][0]
        means = {}
        for task in (Task.STW, Task.DTW):
            m = r.marker(task)
            means[task] = hbo2[:, int(m.task_start * 2) : int(m.task_end * 2)].mean()
        diffs.append(means[Task.DTW] - means[Task.STW])
    assert np.mean(diffs) > 0


def test_counterbalanced_orders():
    assert {task_order(i) for i in range(3)} == {task_order(i) for i in range(3, 6)}
    assert len({task_order(i) for i in range(3)}) == 3
    for i in range(3):
        assert sorted(t.value for t in task_order(i)) == ["ALPHA", "DTW", "STW"]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dtw_hbo2_amp": 0.5},
        {"noise_sd": -1.0},
        {"spike_rate": -0.1},
        {"stw_duration_range": (40.0, 30.0)},
        {"mayer_amp": float("inf")},
    ],
)
def test_invalid_effect_config(kwargs):
    with pytest.raises(ConfigError):
        EffectConfig(**kwargs)


def test_weaker_dtw_allowed_without_planted_effect():
    assert EffectConfig(dtw_hbo2_amp=0.5, planted_effect=False).dtw_hbo2_amp == 0.5
