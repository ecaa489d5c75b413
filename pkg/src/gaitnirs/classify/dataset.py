from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray  # 0 = STW, 1 = DTW
    subject_ids: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],) or len(self.subject_ids) != X.shape[0]:
            raise DataError(f"inconsistent dataset shapes X{X.shape} y{y.shape} ids({len(self.subject_ids)})")
        if not np.isin(y, (0, 1)).all():
            raise DataError("labels must be 0 (STW) or 1 (DTW)")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "subject_ids", tuple(self.subject_ids))

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], tuple(self.subject_ids[i] for i in idx))

    def check_paired(self) -> None:
        """Raise unless every subject has exactly one row of each label."""
        seen: dict[str, list[int]] = {}
        for sid, label in zip(self.subject_ids, self.y):
            seen.setdefault(sid, []).append(int(label))
        bad = [sid for sid, labels in seen.items() if sorted(labels) != [0, 1]]
        if bad:
            raise DataError(f"subjects without exactly one STW and one DTW row: {bad[:5]}")

    @classmethod
    def from_table(cls, table, mask) -> Dataset:
        ds = cls(table.select(mask), table.y, table.subject_ids)
        ds.check_paired()
        return ds


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_dataset(ds: Dataset, test_fraction: float = 0.2, seed: int = 0, mode: str = "row") -> tuple[Dataset, Dataset]:
    """Random train/test partition; ``row`` shuffles rows, ``subject`` keeps each subject's rows together."""
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if len(ds) == 0:
        raise DataError("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    if mode == "row":
        perm = rng.permutation(len(ds))
        n_test = round_half_up(len(ds) * test_fraction)
        test = np.sort(perm[:n_test])
    elif mode == "subject":
        subjects = list(dict.fromkeys(ds.subject_ids))
        perm = rng.permutation(len(subjects))
        chosen = {subjects[i] for i in perm[: round_half_up(len(subjects) * test_fraction)]}
        test = np.array([i for i, s in enumerate(ds.subject_ids) if s in chosen], dtype=np.int64)
    else:
        raise ConfigError(f"split mode must be 'row' or 'subject', got {mode!r}")
    in_test = np.zeros(len(ds), dtype=bool)
    in_test[test] = True
    return ds.take(np.flatnonzero(~in_test)), ds.take(np.flatnonzero(in_test))
