"""Deterministic synthetic cohort: hemodynamics -> forward MBLL -> raw intensities.

Each subject draws everything (demographics included) from its own child of
the master ``SeedSequence``, so a subject's data does not depend on how many
others are generated or in which order.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    BASELINE_S,
    N_CHANNELS,
    RBANS_RANGE,
    SAMPLING_RATE,
    EventMarker,
    RawRecording,
    SubjectMeta,
    Task,
)
from .errors import ConfigError, EmptyCohort
from .preprocess.mbll import MbllParams, forward_mbll

AGE_MEAN, AGE_SD, AGE_RANGE = 76.16, 6.67, (65.0, 95.0)
RBANS_MEAN, RBANS_SD = 91.77, 11.71
FEMALE_FRACTION = 223 / 451

LEAD_IN_S = 10.0
REST_AFTER_S = 20.0
RAMP_S = 5.0
ALPHA_DURATION_S = 30.0
TAIL_RANGE = (20.0, 100.0)

LATIN_SQUARE = (
    (Task.STW, Task.ALPHA, Task.DTW),
    (Task.ALPHA, Task.DTW, Task.STW),
    (Task.DTW, Task.STW, Task.ALPHA),
)

# Reference intensities (device units) per channel.
I0_730 = 1500.0 + 40.0 * np.arange(N_CHANNELS)
I0_850 = 2200.0 + 40.0 * np.arange(N_CHANNELS)


@dataclass(frozen=True)
class EffectConfig:
    stw_hbo2_amp: float = 1.0
    dtw_hbo2_amp: float = 1.35
    alpha_hbo2_amp: float = 0.6
    hb_amp_ratio: float = -0.5
    noise_sd: float = 0.3
    mayer_amp: float = 0.1
    mayer_freq: float = 0.1
    resp_amp: float = 0.6
    resp_freq: float = 0.3
    drift_slope: float = 0.05  # µM/min, sign drawn per channel
    spike_rate: float = 0.5  # events/min per channel
    spike_amp: float = 10.0  # multiples of noise_sd
    stw_duration_range: tuple[float, float] = (30.0, 40.0)
    dtw_duration_range: tuple[float, float] = (35.0, 50.0)
    duration_tail_prob: float = 0.03
    subject_offset_sd: float = 0.2
    condition_sd: float = 0.1  # per-condition amplitude jitter within a subject
    channel_scale_sd: float = 0.2
    planted_effect: bool = True

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                object.__setattr__(self, f.name, tuple(float(x) for x in v))
        amps = (self.stw_hbo2_amp, self.dtw_hbo2_amp, self.alpha_hbo2_amp, self.hb_amp_ratio, self.noise_sd,
                self.mayer_amp, self.resp_amp, self.drift_slope, self.spike_amp)
        if not all(np.isfinite(amps)):
            raise ConfigError("effect amplitudes must be finite", stage="synth")
        if self.planted_effect and self.dtw_hbo2_amp < self.stw_hbo2_amp:
            raise ConfigError("dtw_hbo2_amp must be >= stw_hbo2_amp when the planted effect is enabled", stage="synth")
        nonneg = ("noise_sd", "mayer_amp", "mayer_freq", "resp_amp", "resp_freq", "spike_rate", "spike_amp",
                  "subject_offset_sd", "condition_sd", "channel_scale_sd")
        for name in nonneg:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0", stage="synth")
        for name in ("stw_duration_range", "dtw_duration_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name} must be a non-empty positive range", stage="synth")
        if not 0 <= self.duration_tail_prob <= 1:
            raise ConfigError("duration_tail_prob must lie in [0, 1]", stage="synth")

    def quiet(self) -> EffectConfig:
        """Same responses, with every stochastic and artifact term switched off."""
        return dataclasses.replace(
            self,
            noise_sd=0.0, mayer_amp=0.0, resp_amp=0.0, drift_slope=0.0, spike_rate=0.0,
            condition_sd=0.0, duration_tail_prob=0.0,
        )


class SyntheticSession(NamedTuple):
    recording: RawRecording
    hbo2: np.ndarray  # ground truth, (16, n) µM
    hb: np.ndarray


class SyntheticCohort(NamedTuple):
    subjects: list[SubjectMeta]
    recordings: list[RawRecording]
    truths: dict[str, tuple[np.ndarray, np.ndarray]]


def trapezoid(t: np.ndarray, start: float, end: float, ramp: float = RAMP_S) -> np.ndarray:
    """Unit response: linear rise over ``ramp`` from ``start``, plateau, linear fall from ``end``."""
    rise = np.clip((t - start) / ramp, 0.0, 1.0)
    fall = np.clip((t - end) / ramp, 0.0, 1.0)
    return rise - fall


def _half_grid(x: float) -> float:
    return round(x * SAMPLING_RATE) / SAMPLING_RATE


def sample_duration(task: Task, cfg: EffectConfig, rng: np.random.Generator) -> float:
    if task is Task.ALPHA:
        return ALPHA_DURATION_S
    lo, hi = cfg.stw_duration_range if task is Task.STW else cfg.dtw_duration_range
    if rng.random() < cfg.duration_tail_prob:
        lo, hi = TAIL_RANGE
    return max(_half_grid(rng.uniform(lo, hi)), 1.0 / SAMPLING_RATE)


def task_order(index: int) -> tuple[Task, Task, Task]:
    return LATIN_SQUARE[index % 3]


def sample_subject(index: int, rng: np.random.Generator) -> SubjectMeta:
    age = float(np.clip(rng.normal(AGE_MEAN, AGE_SD), *AGE_RANGE))
    gender = "F" if rng.random() < FEMALE_FRACTION else "M"
    rbans = int(np.clip(np.rint(rng.normal(RBANS_MEAN, RBANS_SD)), *RBANS_RANGE))
    return SubjectMeta(f"S{index + 1:04d}", round(age, 2), gender, rbans)


def generate_session(
    subject: SubjectMeta,
    cfg: EffectConfig | None = None,
    rng: np.random.Generator | None = None,
    order: tuple[Task, Task, Task] = LATIN_SQUARE[0],
    mbll: MbllParams | None = None,
) -> SyntheticSession:
    """One recording with baseline+task blocks in ``order`` and its ground truth."""
    cfg = cfg or EffectConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    mbll = mbll or MbllParams()

    durations = {task: sample_duration(task, cfg, rng) for task in order}
    events = []
    t = LEAD_IN_S
    for task in order:
        events.append(EventMarker(task, t, t + BASELINE_S, t + BASELINE_S + durations[task]))
        t += BASELINE_S + durations[task] + REST_AFTER_S
    n = int(round(t * SAMPLING_RATE))
    time = np.arange(n) / SAMPLING_RATE

    base_amp = {Task.STW: cfg.stw_hbo2_amp, Task.ALPHA: cfg.alpha_hbo2_amp, Task.DTW: cfg.dtw_hbo2_amp}
    if not cfg.planted_effect:
        base_amp[Task.DTW] = cfg.stw_hbo2_amp
    offset = rng.normal(0.0, cfg.subject_offset_sd) if cfg.subject_offset_sd > 0 else 0.0
    template = np.zeros(n)
    for ev in events:
        jitter = rng.normal(0.0, cfg.condition_sd) if cfg.condition_sd > 0 else 0.0
        template += (base_amp[ev.task] + offset + jitter) * trapezoid(time, ev.task_start, ev.task_end)
    scale = np.ones(N_CHANNELS)
    if cfg.channel_scale_sd > 0:
        scale = np.exp(rng.normal(0.0, cfg.channel_scale_sd, N_CHANNELS))
    hbo2 = scale[:, None] * template[None, :]
    hb = cfg.hb_amp_ratio * hbo2
    hbo2 = hbo2 + _physiology(time, cfg, rng)
    hb = hb + _physiology(time, cfg, rng)

    i730, i850 = forward_mbll(hbo2, hb, subject.age, mbll, i0=(I0_730, I0_850))
    rec = RawRecording(subject.subject_id, i730, i850, tuple(events))
    return SyntheticSession(rec, hbo2, hb)


def _physiology(time: np.ndarray, cfg: EffectConfig, rng: np.random.Generator) -> np.ndarray:
    """Additive nuisance terms per channel: noise, Mayer, respiration, drift, spikes."""
    n = len(time)
    out = np.zeros((N_CHANNELS, n))
    if cfg.noise_sd > 0:
        out += rng.normal(0.0, cfg.noise_sd, (N_CHANNELS, n))
    for amp, freq in ((cfg.mayer_amp, cfg.mayer_freq), (cfg.resp_amp, cfg.resp_freq)):
        if amp > 0:
            phase = rng.uniform(0.0, 2 * np.pi, N_CHANNELS)
            out += amp * np.sin(2 * np.pi * freq * time[None, :] + phase[:, None])
    if cfg.drift_slope > 0:
        sign = rng.choice([-1.0, 1.0], N_CHANNELS)
        out += sign[:, None] * cfg.drift_slope * time[None, :] / 60.0
    if cfg.spike_rate > 0 and cfg.spike_amp > 0:
        counts = rng.poisson(cfg.spike_rate * time[-1] / 60.0, N_CHANNELS)
        height = cfg.spike_amp * max(cfg.noise_sd, 1e-3)
        for c in range(N_CHANNELS):
            where = rng.integers(0, n, counts[c])
            out[c, where] += height * rng.choice([-1.0, 1.0], counts[c])
    return out


def _subject_streams(n: int, seed: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def generate_subject(index: int, rng: np.random.Generator, cfg: EffectConfig, mbll: MbllParams | None = None):
    subject = sample_subject(index, rng)
    session = generate_session(subject, cfg, rng, task_order(index), mbll)
    return subject, session


def generate_cohort(
    n: int, seed: int, cfg: EffectConfig | None = None, mbll: MbllParams | None = None
) -> SyntheticCohort:
    """``n`` subjects with one three-condition recording each.

    Unpacks as ``(subjects, recordings, truths)``.
    """
    if n < 1:
        raise EmptyCohort("cohort size must be >= 1", stage="synth")
    cfg = cfg or EffectConfig()
    subjects, recordings, truths = [], [], {}
    for i, rng in enumerate(_subject_streams(n, seed)):
        subject, session = generate_subject(i, rng, cfg, mbll)
        subjects.append(subject)
        recordings.append(session.recording)
        truths[subject.subject_id] = (session.hbo2, session.hb)
    return SyntheticCohort(subjects, recordings, truths)


def task_durations(recordings, task: Task) -> np.ndarray:
    return np.array([r.marker(task).duration for r in recordings if r.marker(task) is not None])


def duration_histogram(recordings, task: Task, bin_width: float = 5.0, span=TAIL_RANGE):
    """Counts of task durations in ``bin_width`` bins over ``span``; returns (edges, counts)."""
    edges = np.arange(span[0], span[1] + bin_width, bin_width)
    counts, _ = np.histogram(task_durations(recordings, task), bins=edges)
    return edges, counts
