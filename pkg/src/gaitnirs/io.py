"""Readers and writers for the on-disk cohort formats.

* ``subjects.csv``            subject_id,age,gender,rbans
* ``<id>_raw.csv``            t_s,channel,i730,i850   (rows sorted by t_s, channel)
* ``<id>_events.csv``         task,baseline_start_s,task_start_s,task_end_s
* ``ground_truth/<id>.csv``   t_s,channel,hbo2_um,hb_um
* ``<id>_epochs.csv``         task,channel,chromophore,t_idx,value_um
* ``exclusions.csv``          subject_id,stage,reason

Floats are written with ``repr`` so a write/read cycle is lossless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .core import (
    N_CHANNELS,
    SAMPLING_RATE,
    EventMarker,
    RawRecording,
    SubjectMeta,
    Task,
    TaskEpoch,
)
from .errors import DataError

SUBJECTS_HEADER = ["subject_id", "age", "gender", "rbans"]
RAW_HEADER = ["t_s", "channel", "i730", "i850"]
EVENTS_HEADER = ["task", "baseline_start_s", "task_start_s", "task_end_s"]
TRUTH_HEADER = ["t_s", "channel", "hbo2_um", "hb_um"]
EPOCHS_HEADER = ["task", "channel", "chromophore", "t_idx", "value_um"]
EXCLUSIONS_HEADER = ["subject_id", "stage", "reason"]


def _read_rows(path: Path, header: list[str]) -> list[dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != header:
            raise DataError(f"{path.name}: expected header {','.join(header)}, got {reader.fieldnames}")
        return list(reader)


def _write_lines(path: Path, header: list[str], lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for line in lines:
            fh.write(line + "\n")


def write_subjects(path, subjects: list[SubjectMeta]) -> None:
    _write_lines(
        Path(path),
        SUBJECTS_HEADER,
        (f"{s.subject_id},{s.age!r},{s.gender},{s.rbans}" for s in subjects),
    )


def read_subjects(path) -> list[SubjectMeta]:
    out = []
    for row in _read_rows(Path(path), SUBJECTS_HEADER):
        try:
            rbans = int(row["rbans"])
            age = float(row["age"])
        except ValueError as exc:
            raise DataError(f"subjects.csv: bad row {row}: {exc}") from None
        out.append(SubjectMeta(row["subject_id"], age, row["gender"], rbans))
    return out


def _channel_table(path: Path, header: list[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse a (t_s, channel, a, b) long table into two (16, n) arrays."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataError(f"{path.name}: {exc}") from None
    with open(path) as fh:
        first = fh.readline().strip().split(",")
    if first != header:
        raise DataError(f"{path.name}: expected header {','.join(header)}, got {first}")
    if data.shape[0] % N_CHANNELS:
        raise DataError(f"{path.name}: row count {data.shape[0]} not a multiple of {N_CHANNELS}")
    n = data.shape[0] // N_CHANNELS
    t = data[:, 0].reshape(n, N_CHANNELS)
    ch = data[:, 1].reshape(n, N_CHANNELS)
    if not np.array_equal(ch, np.tile(np.arange(1, N_CHANNELS + 1), (n, 1))):
        raise DataError(f"{path.name}: rows must be sorted by (t_s, channel) with channels 1..16")
    if not np.all(t == t[:, :1]):
        raise DataError(f"{path.name}: channels do not share a time base")
    times = t[:, 0]
    expected = np.arange(n) / SAMPLING_RATE
    if not np.allclose(times - times[0], expected, atol=1e-6):
        dt = np.diff(times)
        rate = 1.0 / np.median(dt) if dt.size else float("nan")
        raise DataError(f"{path.name}: t_s not on a uniform 0.5 s grid (rate {rate:g} Hz)")
    return times, data[:, 2].reshape(n, N_CHANNELS).T.copy(), data[:, 3].reshape(n, N_CHANNELS).T.copy()


def _long_lines(a: np.ndarray, b: np.ndarray):
    n = a.shape[1]
    for k in range(n):
        t = k / SAMPLING_RATE
        for c in range(N_CHANNELS):
            yield f"{t!r},{c + 1},{float(a[c, k])!r},{float(b[c, k])!r}"


def write_events(path, events) -> None:
    _write_lines(
        Path(path),
        EVENTS_HEADER,
        (f"{e.task.value},{e.baseline_start!r},{e.task_start!r},{e.task_end!r}" for e in events),
    )


def read_events(path) -> tuple[EventMarker, ...]:
    out = []
    for row in _read_rows(Path(path), EVENTS_HEADER):
        try:
            out.append(
                EventMarker(
                    Task.parse(row["task"]),
                    float(row["baseline_start_s"]),
                    float(row["task_start_s"]),
                    float(row["task_end_s"]),
                )
            )
        except ValueError as exc:
            raise DataError(f"{Path(path).name}: bad row {row}: {exc}") from None
    return tuple(out)


def write_recording(cohort_dir, rec: RawRecording) -> None:
    cohort_dir = Path(cohort_dir)
    _write_lines(cohort_dir / f"{rec.subject_id}_raw.csv", RAW_HEADER, _long_lines(rec.i730, rec.i850))
    write_events(cohort_dir / f"{rec.subject_id}_events.csv", rec.events)


def read_recording(cohort_dir, subject_id: str) -> RawRecording:
    cohort_dir = Path(cohort_dir)
    path = cohort_dir / f"{subject_id}_raw.csv"
    if not path.exists():
        raise DataError(f"missing raw file for {subject_id}")
    _, i730, i850 = _channel_table(path, RAW_HEADER)
    events = read_events(cohort_dir / f"{subject_id}_events.csv")
    return RawRecording(subject_id, i730, i850, events)


def write_ground_truth(path, hbo2: np.ndarray, hb: np.ndarray) -> None:
    _write_lines(Path(path), TRUTH_HEADER, _long_lines(hbo2, hb))


def read_ground_truth(path) -> tuple[np.ndarray, np.ndarray]:
    _, hbo2, hb = _channel_table(Path(path), TRUTH_HEADER)
    return hbo2, hb


def write_cohort(cohort_dir, subjects, recordings, truths=None) -> None:
    """Write subjects.csv plus per-subject raw/events files (and ground truth if given)."""
    cohort_dir = Path(cohort_dir)
    cohort_dir.mkdir(parents=True, exist_ok=True)
    write_subjects(cohort_dir / "subjects.csv", subjects)
    for rec in recordings:
        write_recording(cohort_dir, rec)
    if truths:
        for sid, (hbo2, hb) in truths.items():
            write_ground_truth(cohort_dir / "ground_truth" / f"{sid}.csv", hbo2, hb)


def read_cohort(cohort_dir) -> tuple[list[SubjectMeta], list[RawRecording]]:
    cohort_dir = Path(cohort_dir)
    if not cohort_dir.is_dir():
        raise DataError(f"cohort directory {cohort_dir} does not exist")
    subjects = read_subjects(cohort_dir / "subjects.csv")
    recordings = [read_recording(cohort_dir, s.subject_id) for s in subjects]
    return subjects, recordings


def write_epochs(path, epochs: list[TaskEpoch]) -> None:
    def lines():
        for ep in epochs:
            for c in np.flatnonzero(ep.channel_valid):
                for chrom, arr in (("hbo2", ep.hbo2), ("hb", ep.hb)):
                    for k, v in enumerate(arr[c]):
                        yield f"{ep.task.value},{c + 1},{chrom},{k},{float(v)!r}"

    _write_lines(Path(path), EPOCHS_HEADER, lines())


def read_epochs(path, subject_id: str) -> dict[Task, TaskEpoch]:
    rows = _read_rows(Path(path), EPOCHS_HEADER)
    collected: dict[Task, dict[str, dict[int, list]]] = {}
    for row in rows:
        task = Task.parse(row["task"])
        chrom = row["chromophore"]
        if chrom not in ("hbo2", "hb"):
            raise DataError(f"{Path(path).name}: unknown chromophore {chrom!r}")
        by_chrom = collected.setdefault(task, {"hbo2": {}, "hb": {}})
        by_chrom[chrom].setdefault(int(row["channel"]), []).append((int(row["t_idx"]), float(row["value_um"])))
    out = {}
    for task, by_chrom in collected.items():
        chans = sorted(by_chrom["hbo2"])
        if chans != sorted(by_chrom["hb"]) or not chans:
            raise DataError(f"{Path(path).name}: {task.value} channels differ between chromophores")
        lengths = {len(v) for d in by_chrom.values() for v in d.values()}
        if len(lengths) != 1:
            raise DataError(f"{Path(path).name}: {task.value} channels have unequal sample counts")
        n = lengths.pop()
        valid = np.zeros(N_CHANNELS, dtype=bool)
        arrays = {}
        for chrom in ("hbo2", "hb"):
            a = np.full((N_CHANNELS, n), np.nan)
            for c, vals in by_chrom[chrom].items():
                vals.sort()
                a[c - 1] = [v for _, v in vals]
                valid[c - 1] = True
            arrays[chrom] = a
        out[task] = TaskEpoch(subject_id, task, arrays["hbo2"], arrays["hb"], valid)
    return out


def write_exclusions(path, exclusions: list[tuple[str, str, str]]) -> None:
    def clean(s):
        return str(s).replace(",", ";").replace("\n", " ")

    _write_lines(Path(path), EXCLUSIONS_HEADER, (",".join(clean(x) for x in row) for row in exclusions))


def read_exclusions(path) -> list[tuple[str, str, str]]:
    return [(r["subject_id"], r["stage"], r["reason"]) for r in _read_rows(Path(path), EXCLUSIONS_HEADER)]
