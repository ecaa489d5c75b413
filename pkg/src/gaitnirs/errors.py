"""Exception hierarchy. Each family maps to one CLI exit code."""

from __future__ import annotations


class GaitNirsError(Exception):
    """Base class. ``stage`` names the pipeline stage that raised, if known."""

    exit_code = 1

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigError(GaitNirsError):
    exit_code = 2


class DataError(GaitNirsError):
    exit_code = 3


class TrainingError(GaitNirsError):
    exit_code = 4


class EmptyCohort(ConfigError):
    pass


class TooShort(DataError):
    pass


class OutOfBounds(DataError):
    pass


class AllChannelsRejected(DataError):
    pass


class HemisphereEmpty(DataError):
    pass


class TooSmall(DataError):
    pass


class DegenerateLabels(TrainingError):
    pass
