import numpy as np
import pytest

from gaitnirs.core import N_CHANNELS, EventMarker, RawRecording, SubjectMeta


@pytest.fixture
def subject():
    return SubjectMeta("S0001", 74.0, "F", 95)


def flat_recording(subject_id="S0001", seconds=200.0, events=None, level=(1800.0, 2500.0)):
    n = int(seconds * 2)
    rng = np.random.default_rng(0)
    i730 = level[0] * np.exp(rng.normal(0, 1e-3, (N_CHANNELS, n)))
    i850 = level[1] * np.exp(rng.normal(0, 1e-3, (N_CHANNELS, n)))
    if events is None:
        events = (EventMarker("STW", 10, 20, 55), EventMarker("DTW", 80, 90, 130))
    return RawRecording(subject_id, i730, i850, events)


@pytest.fixture
def recording():
    return flat_recording()
