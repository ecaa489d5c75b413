"""Per-condition statistics and the within-subject binary encoding.

A subject's STW and DTW epochs are each summarised by 20 numbers
(chromophore x hemisphere x statistic). Comparing the two summaries index by
index yields one bit per index and condition; the absolute level of a subject
drops out, only the direction of the change survives.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LEFT_CHANNELS, RIGHT_CHANNELS, SAMPLING_RATE, SubjectMeta, Task, TaskEpoch, label_value
from .errors import ConfigError, DataError, HemisphereEmpty

STATS = ("max", "min", "mean", "skew", "kurt")
BLOCKS = ("hb_l", "hb_r", "hbo2_l", "hbo2_r")
FNIRS_COLUMNS = tuple(f"{b}_{s}" for b in BLOCKS for s in STATS)
FEATURE_COLUMNS = ("g", "s") + FNIRS_COLUMNS
N_FEATURES = len(FEATURE_COLUMNS)
DEFAULT_HORIZON = 60.0
MIN_STAT_SAMPLES = 4


@dataclass(frozen=True)
class ChannelStats:
    max: float
    min: float
    mean: float
    skewness: float
    kurtosis: float
    degenerate: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.max, self.min, self.mean, self.skewness, self.kurtosis])


@dataclass(frozen=True)
class CondFeatures:
    subject_id: str
    task: Task
    values: np.ndarray  # 20, ordered as FNIRS_COLUMNS

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(FNIRS_COLUMNS),):
            raise DataError(f"condition features must have {len(FNIRS_COLUMNS)} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "task", Task.parse(self.task))


@dataclass(frozen=True)
class EncodedFeatures:
    subject_id: str
    task: Task
    bits: np.ndarray  # 20 values in {0, 1}

    def __post_init__(self):
        b = np.array(self.bits, dtype=np.int8)
        if b.shape != (len(FNIRS_COLUMNS),) or not np.isin(b, (0, 1)).all():
            raise DataError("encoded features must be 20 values in {0, 1}")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)


def truncate_epoch(epoch: TaskEpoch, horizon: float = DEFAULT_HORIZON) -> TaskEpoch:
    if not horizon > 0:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    if epoch.n_samples == 0:
        raise DataError(f"{epoch.subject_id}: empty {epoch.task.value} epoch")
    keep = min(epoch.n_samples, int(math.floor(horizon * SAMPLING_RATE + 1e-9)))
    return TaskEpoch(
        epoch.subject_id, epoch.task, epoch.hbo2[:, :keep], epoch.hb[:, :keep], epoch.channel_valid, epoch.marker
    )


def channel_stats(samples) -> ChannelStats:
    """Max, min, mean and population skewness / excess kurtosis.

    A constant input has undefined shape statistics; both are reported as 0
    and ``degenerate`` is set.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < MIN_STAT_SAMPLES:
        raise DataError(f"need at least {MIN_STAT_SAMPLES} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DataError("samples must be finite")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d**2))
    # relative cutoff: float residue of a constant series is not variance
    if m2 <= (1e-12 * max(1.0, abs(mean))) ** 2:
        return ChannelStats(float(x.max()), float(x.min()), mean, 0.0, 0.0, degenerate=True)
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    return ChannelStats(float(x.max()), float(x.min()), mean, m3 / m2**1.5, m4 / m2**2 - 3.0)


def stats_matrix(signals: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """(16, 5) statistics; rows of invalid channels are NaN."""
    out = np.full((signals.shape[0], len(STATS)), np.nan)
    for c in np.flatnonzero(valid):
        out[c] = channel_stats(signals[c]).as_array()
    return out


def hemisphere_mean(stats: np.ndarray, valid) -> tuple[np.ndarray, np.ndarray]:
    """Statistic-wise mean over valid channels 1-8 (left) and 9-16 (right)."""
    stats = np.asarray(stats, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    out = []
    for side, channels in (("left", LEFT_CHANNELS), ("right", RIGHT_CHANNELS)):
        idx = [c - 1 for c in channels if valid[c - 1]]
        if not idx:
            raise HemisphereEmpty(f"no valid channel in the {side} hemisphere", stage="features")
        out.append(stats[idx].mean(axis=0))
    return out[0], out[1]


def condition_features(epoch: TaskEpoch, horizon: float = DEFAULT_HORIZON) -> CondFeatures:
    ep = truncate_epoch(epoch, horizon)
    blocks = []
    for signals in (ep.hb, ep.hbo2):
        left, right = hemisphere_mean(stats_matrix(signals, ep.channel_valid), ep.channel_valid)
        blocks += [left, right]
    return CondFeatures(ep.subject_id, ep.task, np.concatenate(blocks))


def encode_pair(stw: CondFeatures, dtw: CondFeatures) -> tuple[EncodedFeatures, EncodedFeatures]:
    """Per index, the condition with the larger value gets 1; ties give 0 to both."""
    if stw.subject_id != dtw.subject_id:
        raise DataError(f"cannot encode {stw.subject_id} against {dtw.subject_id}")
    if stw.task is not Task.STW or dtw.task is not Task.DTW:
        raise DataError("encode_pair expects (STW, DTW) features")
    a, b = stw.values, dtw.values
    return (
        EncodedFeatures(stw.subject_id, Task.STW, (a > b).astype(np.int8)),
        EncodedFeatures(dtw.subject_id, Task.DTW, (b > a).astype(np.int8)),
    )


# --- masks -----------------------------------------------------------------

def make_mask(*, demographics: bool = True, blocks=BLOCKS, stats=STATS) -> np.ndarray:
    """Boolean mask over FEATURE_COLUMNS selecting blocks x stats (+ g, s)."""
    unknown = (set(blocks) - set(BLOCKS)) | (set(stats) - set(STATS))
    if unknown:
        raise ConfigError(f"unknown mask entries {sorted(unknown)}")
    mask = np.zeros(N_FEATURES, dtype=bool)
    mask[:2] = demographics
    for i, col in enumerate(FNIRS_COLUMNS):
        block, stat = col.rsplit("_", 1)
        mask[i + 2] = block in blocks and stat in stats
    return mask


FULL_MASK = make_mask()
FNIRS_MASK = make_mask(demographics=False)

ABLATION_MASKS: dict[str, np.ndarray] = {
    "all": FNIRS_MASK,
    "kurt+skew": make_mask(demographics=False, stats=("skew", "kurt")),
    "max+min+mean": make_mask(demographics=False, stats=("max", "min", "mean")),
    "hbo2": make_mask(demographics=False, blocks=("hbo2_l", "hbo2_r")),
    "hb": make_mask(demographics=False, blocks=("hb_l", "hb_r")),
    "hbo2 max+min+mean": make_mask(demographics=False, blocks=("hbo2_l", "hbo2_r"), stats=("max", "min", "mean")),
    "hb max+min+mean": make_mask(demographics=False, blocks=("hb_l", "hb_r"), stats=("max", "min", "mean")),
}


def full_row(enc: EncodedFeatures, subject: SubjectMeta) -> np.ndarray:
    if enc.subject_id != subject.subject_id:
        raise DataError(f"features of {enc.subject_id} paired with subject {subject.subject_id}")
    return np.concatenate([[subject.gender_bit, subject.rbans], enc.bits]).astype(float)


def assemble_vector(enc: EncodedFeatures, subject: SubjectMeta, mask=None) -> tuple[np.ndarray, int]:
    """``[g, s, hb_l, hb_r, hbo2_l, hbo2_r]`` restricted to ``mask``; label 0 = STW, 1 = DTW."""
    mask = FULL_MASK if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != (N_FEATURES,):
        raise ConfigError(f"feature mask must have {N_FEATURES} entries")
    if not mask.any():
        raise ConfigError("feature mask selects nothing")
    return full_row(enc, subject)[mask], label_value(enc.task)


# --- tables ----------------------------------------------------------------

@dataclass(frozen=True)
class FeatureTable:
    """Rows of the full 22-column vector; two rows (STW, DTW) per subject."""

    subject_ids: tuple[str, ...]
    tasks: tuple[Task, ...]
    X: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    def select(self, mask) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise ConfigError("feature mask selects nothing")
        return self.X[:, mask]

    def subset(self, subject_ids) -> FeatureTable:
        keep = set(subject_ids)
        idx = [i for i, s in enumerate(self.subject_ids) if s in keep]
        return FeatureTable(
            tuple(self.subject_ids[i] for i in idx), tuple(self.tasks[i] for i in idx), self.X[idx], self.y[idx]
        )

    def unique_subjects(self) -> list[str]:
        return list(dict.fromkeys(self.subject_ids))


def subject_rows(
    subject: SubjectMeta, stw: TaskEpoch, dtw: TaskEpoch, horizon: float = DEFAULT_HORIZON
) -> tuple[np.ndarray, np.ndarray]:
    """Both full rows for one subject, STW first."""
    enc = encode_pair(condition_features(stw, horizon), condition_features(dtw, horizon))
    return full_row(enc[0], subject), full_row(enc[1], subject)


def build_table(subjects, epochs: dict, horizon: float = DEFAULT_HORIZON) -> tuple[FeatureTable, list]:
    """Feature table over subjects with epochs; ``epochs[id] = (stw, dtw)``.

    Subjects whose features cannot be computed are skipped and returned as
    ``(subject_id, stage, reason)`` exclusions.
    """
    ids, tasks, rows, exclusions = [], [], [], []
    for subject in subjects:
        if subject.subject_id not in epochs:
            continue
        stw, dtw = epochs[subject.subject_id]
        try:
            r_stw, r_dtw = subject_rows(subject, stw, dtw, horizon)
        except DataError as exc:
            exclusions.append((subject.subject_id, exc.stage or "features", exc.message))
            continue
        ids += [subject.subject_id] * 2
        tasks += [Task.STW, Task.DTW]
        rows += [r_stw, r_dtw]
    X = np.array(rows, dtype=float).reshape(-1, N_FEATURES)
    y = np.array([label_value(t) for t in tasks], dtype=np.int64)
    return FeatureTable(tuple(ids), tuple(tasks), X, y), exclusions


def write_features(path, table: FeatureTable) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("subject_id", "task") + FEATURE_COLUMNS)
        for sid, task, row in zip(table.subject_ids, table.tasks, table.X):
            w.writerow([sid, task.value] + [str(int(v)) for v in row])


def read_features(path) -> FeatureTable:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path} not found")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != ("subject_id", "task") + FEATURE_COLUMNS:
            raise DataError(f"{path}: unexpected header")
        ids, tasks, rows = [], [], []
        for n, rec in enumerate(reader, start=2):
            if len(rec) != N_FEATURES + 2:
                raise DataError(f"{path}:{n}: expected {N_FEATURES + 2} fields")
            try:
                ids.append(rec[0])
                tasks.append(Task.parse(rec[1]))
                rows.append([float(v) for v in rec[2:]])
            except (ValueError, DataError) as exc:
                raise DataError(f"{path}:{n}: {exc}") from None
    X = np.array(rows, dtype=float).reshape(-1, N_FEATURES)
    return FeatureTable(tuple(ids), tuple(tasks), X, np.array([label_value(t) for t in tasks], dtype=np.int64))
