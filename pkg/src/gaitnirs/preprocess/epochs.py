"""Task epoch slicing and proximal-baseline correction."""

from __future__ import annotations

import math

import numpy as np

from ..core import BASELINE_S, SAMPLING_RATE, EventMarker, HemoSeries, TaskEpoch
from ..errors import DataError, OutOfBounds


def _index(t: float, fs: float = SAMPLING_RATE) -> int:
    return int(round(t * fs))


def extract_epoch(series: HemoSeries, marker: EventMarker) -> TaskEpoch:
    """Slice [task_start, task_end) from every channel; floor(duration * fs) samples."""
    start = _index(marker.task_start)
    n = int(math.floor((marker.task_end - marker.task_start) * SAMPLING_RATE + 1e-9))
    if start < 0 or start + n > series.n_samples:
        raise OutOfBounds(
            f"{series.subject_id}: {marker.task.value} window [{marker.task_start}, {marker.task_end}) s "
            f"outside recording of {series.n_samples / SAMPLING_RATE} s",
            stage="extract_epoch",
        )
    return TaskEpoch(
        series.subject_id,
        marker.task,
        series.hbo2[:, start : start + n],
        series.hb[:, start : start + n],
        series.channel_valid,
        marker,
    )


def baseline_window(series: HemoSeries, marker: EventMarker) -> slice:
    start = _index(marker.baseline_start)
    n = _index(BASELINE_S)
    if start < 0 or start + n > series.n_samples:
        raise DataError(
            f"{series.subject_id}: {marker.task.value} baseline window outside recording", stage="baseline_correct"
        )
    return slice(start, start + n)


def baseline_correct(epoch: TaskEpoch, series: HemoSeries, marker: EventMarker) -> TaskEpoch:
    """Subtract, per channel and chromophore, the mean of the 10 s baseline before the task."""
    if marker.task is not epoch.task:
        raise DataError(f"marker {marker.task.value} does not match epoch {epoch.task.value}", stage="baseline_correct")
    if marker.baseline_start + BASELINE_S > marker.task_start + 1e-9:
        raise DataError(
            f"{series.subject_id}: {marker.task.value} baseline overlaps the task", stage="baseline_correct"
        )
    win = baseline_window(series, marker)
    hbo2_ref = np.mean(series.hbo2[:, win], axis=1, keepdims=True)
    hb_ref = np.mean(series.hb[:, win], axis=1, keepdims=True)
    return TaskEpoch(
        epoch.subject_id,
        epoch.task,
        epoch.hbo2 - hbo2_ref,
        epoch.hb - hb_ref,
        epoch.channel_valid,
        marker,
    )
