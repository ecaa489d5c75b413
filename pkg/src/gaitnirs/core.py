"""Domain data model shared by every stage, plus cohort validation.

All types are frozen dataclasses; array fields are made read-only on
construction so instances can be shared between workers.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

SAMPLING_RATE = 2.0
N_CHANNELS = 16
LEFT_CHANNELS = tuple(range(1, 9))
RIGHT_CHANNELS = tuple(range(9, 17))
BASELINE_S = 10.0
BASELINE_SAMPLES = int(BASELINE_S * SAMPLING_RATE)
WAVELENGTHS_NM = (730, 850)
# present on the device, never ingested
UNUSED_WAVELENGTHS_NM = (805,)
RBANS_RANGE = (40, 160)
MIN_COHORT_AGE = 65.0


class Task(str, enum.Enum):
    STW = "STW"
    ALPHA = "ALPHA"
    DTW = "DTW"

    @classmethod
    def parse(cls, value: str | Task) -> Task:
        if isinstance(value, Task):
            return value
        try:
            return cls(value.strip().upper())
        except ValueError:
            raise DataError(f"unknown task {value!r}") from None


# Classification label: STW -> 0, DTW -> 1.
LABELS = (Task.STW, Task.DTW)


def label_value(task: Task) -> int:
    if task is Task.STW:
        return 0
    if task is Task.DTW:
        return 1
    raise DataError(f"{task.value} is not a classification label")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SubjectMeta:
    subject_id: str
    age: float
    gender: str  # "M" or "F"
    rbans: int

    def __post_init__(self):
        g = str(self.gender).strip().upper()
        if g not in ("M", "F"):
            raise DataError(f"subject {self.subject_id}: gender must be M or F, got {self.gender!r}")
        object.__setattr__(self, "gender", g)
        if not np.isfinite(self.age) or self.age < 0:
            raise DataError(f"subject {self.subject_id}: invalid age {self.age!r}")
        if int(self.rbans) != self.rbans:
            raise DataError(f"subject {self.subject_id}: RBANS must be an integer")
        lo, hi = RBANS_RANGE
        if not lo <= self.rbans <= hi:
            raise DataError(f"subject {self.subject_id}: RBANS {self.rbans} outside [{lo}, {hi}]")
        object.__setattr__(self, "rbans", int(self.rbans))
        object.__setattr__(self, "age", float(self.age))

    @property
    def gender_bit(self) -> int:
        # female=1, male=0
        return 1 if self.gender == "F" else 0


@dataclass(frozen=True)
class EventMarker:
    task: Task
    baseline_start: float
    task_start: float
    task_end: float

    def __post_init__(self):
        object.__setattr__(self, "task", Task.parse(self.task))
        if not self.baseline_start < self.task_start < self.task_end:
            raise DataError(
                f"{self.task.value} marker needs baseline_start < task_start < task_end, got "
                f"({self.baseline_start}, {self.task_start}, {self.task_end})"
            )

    @property
    def duration(self) -> float:
        return self.task_end - self.task_start


@dataclass(frozen=True, eq=False)
class RawRecording:
    """Two-wavelength intensities, shape (16, n_samples) each; row i is channel i+1."""

    subject_id: str
    i730: np.ndarray
    i850: np.ndarray
    events: tuple[EventMarker, ...]
    sampling_rate: float = SAMPLING_RATE

    def __post_init__(self):
        if self.sampling_rate != SAMPLING_RATE:
            raise DataError(f"{self.subject_id}: sampling rate must be {SAMPLING_RATE} Hz, got {self.sampling_rate}")
        a, b = _frozen(self.i730), _frozen(self.i850)
        if a.ndim != 2 or a.shape[0] != N_CHANNELS or a.shape != b.shape:
            raise DataError(
                f"{self.subject_id}: expected two ({N_CHANNELS}, n) intensity arrays, got {a.shape} and {b.shape}"
            )
        object.__setattr__(self, "i730", a)
        object.__setattr__(self, "i850", b)
        object.__setattr__(self, "events", tuple(self.events))
        for ev in self.events:
            if ev.task_end > self.duration + 1e-9 or ev.baseline_start < 0:
                raise DataError(f"{self.subject_id}: {ev.task.value} window outside recording")

    @property
    def n_samples(self) -> int:
        return self.i730.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sampling_rate

    def marker(self, task: Task) -> EventMarker | None:
        for ev in self.events:
            if ev.task is task:
                return ev
        return None

    def __eq__(self, other):
        if not isinstance(other, RawRecording):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.events == other.events
            and self.sampling_rate == other.sampling_rate
            and np.array_equal(self.i730, other.i730)
            and np.array_equal(self.i850, other.i850)
        )


@dataclass(frozen=True, eq=False)
class HemoSeries:
    """Concentration changes in µM, shape (16, n). Invalid channel rows are NaN."""

    subject_id: str
    hbo2: np.ndarray
    hb: np.ndarray
    channel_valid: np.ndarray

    def __post_init__(self):
        valid = _frozen(self.channel_valid, dtype=bool)
        hbo2, hb = np.array(self.hbo2, dtype=float), np.array(self.hb, dtype=float)
        if valid.shape != (N_CHANNELS,) or hbo2.shape != hb.shape or hbo2.shape[0] != N_CHANNELS:
            raise DataError(f"{self.subject_id}: malformed HemoSeries shapes")
        hbo2[~valid] = np.nan
        hb[~valid] = np.nan
        if not (np.isfinite(hbo2[valid]).all() and np.isfinite(hb[valid]).all()):
            raise DataError(f"{self.subject_id}: non-finite values in a valid channel")
        object.__setattr__(self, "hbo2", _frozen(hbo2))
        object.__setattr__(self, "hb", _frozen(hb))
        object.__setattr__(self, "channel_valid", valid)

    @property
    def n_samples(self) -> int:
        return self.hbo2.shape[1]


@dataclass(frozen=True, eq=False)
class TaskEpoch:
    subject_id: str
    task: Task
    hbo2: np.ndarray
    hb: np.ndarray
    channel_valid: np.ndarray
    marker: EventMarker | None = None

    def __post_init__(self):
        task = Task.parse(self.task)
        if task is Task.ALPHA:
            raise DataError("Alpha epochs are not used for classification")
        object.__setattr__(self, "task", task)
        valid = _frozen(self.channel_valid, dtype=bool)
        hbo2, hb = np.array(self.hbo2, dtype=float), np.array(self.hb, dtype=float)
        if hbo2.shape != hb.shape or hbo2.ndim != 2 or hbo2.shape[0] != N_CHANNELS or valid.shape != (N_CHANNELS,):
            raise DataError(f"{self.subject_id}: malformed epoch shapes")
        hbo2[~valid] = np.nan
        hb[~valid] = np.nan
        hbo2, hb = _frozen(hbo2), _frozen(hb)
        object.__setattr__(self, "hbo2", hbo2)
        object.__setattr__(self, "hb", hb)
        object.__setattr__(self, "channel_valid", valid)

    @property
    def n_samples(self) -> int:
        return self.hbo2.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TaskEpoch):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.task is other.task
            and np.array_equal(self.channel_valid, other.channel_valid)
            and np.array_equal(self.hbo2, other.hbo2, equal_nan=True)
            and np.array_equal(self.hb, other.hb, equal_nan=True)
        )


@dataclass
class SubjectCheck:
    subject_id: str
    status: str  # "pass" | "warn" | "fail"
    reasons: list[str] = field(default_factory=list)


@dataclass
class ValidationReport:
    subjects: list[SubjectCheck]

    @property
    def passed(self) -> bool:
        return all(s.status != "fail" for s in self.subjects)

    def failures(self) -> list[SubjectCheck]:
        return [s for s in self.subjects if s.status == "fail"]

    def by_id(self, subject_id: str) -> SubjectCheck:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise KeyError(subject_id)


def validate_cohort(subjects: list[SubjectMeta], recordings: list[RawRecording]) -> ValidationReport:
    """Check that every subject has exactly one recording with STW and DTW markers.

    Age below 65 only warns. The cohort passes iff no subject fails.
    """
    subj_counts = Counter(s.subject_id for s in subjects)
    rec_counts = Counter(r.subject_id for r in recordings)
    recs = {r.subject_id: r for r in recordings}

    checks: list[SubjectCheck] = []
    seen = set()
    ids = [s.subject_id for s in subjects] + [r.subject_id for r in recordings if r.subject_id not in subj_counts]
    metas = {s.subject_id: s for s in subjects}
    for sid in ids:
        if sid in seen:
            continue
        seen.add(sid)
        fail, warn = [], []
        if subj_counts[sid] > 1:
            fail.append("duplicate subject_id in subject list")
        if sid not in metas:
            fail.append("recording without subject metadata")
        if rec_counts[sid] == 0:
            fail.append("missing recording")
        elif rec_counts[sid] > 1:
            fail.append("duplicate recording for subject_id")
        if sid in recs:
            rec = recs[sid]
            for task in (Task.STW, Task.DTW):
                n = sum(1 for ev in rec.events if ev.task is task)
                if n == 0:
                    fail.append(f"missing {task.value}")
                elif n > 1:
                    fail.append(f"multiple {task.value} markers")
        meta = metas.get(sid)
        if meta is not None and meta.age < MIN_COHORT_AGE:
            warn.append(f"age {meta.age:g} below {MIN_COHORT_AGE:g}")
        status = "fail" if fail else ("warn" if warn else "pass")
        checks.append(SubjectCheck(sid, status, fail + warn))
    return ValidationReport(checks)
