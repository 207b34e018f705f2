from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..blobs import FeatureVector
from ..errors import InputError

CLASSES = (1, 2, 3, 4)
N_FEATURES = 4


@dataclass(frozen=True)
class Dataset:
    """Feature rows ``X`` (n x 4) with people-count labels ``y``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64).reshape(-1, N_FEATURES)
        y = np.array(self.y, dtype=np.int64).ravel()
        if len(X) != len(y):
            raise InputError(f"{len(X)} feature rows but {len(y)} labels")
        bad = set(np.unique(y).tolist()) - set(CLASSES)
        if bad:
            raise InputError(f"labels outside {CLASSES}: {sorted(bad)}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return len(self.y)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[FeatureVector, int]]) -> "Dataset":
        rows = list(rows)
        X = np.array([fv.as_array() for fv, _ in rows]).reshape(-1, N_FEATURES)
        return cls(X, [lab for _, lab in rows])

    @property
    def rows(self) -> list[tuple[FeatureVector, int]]:
        return [
            (FeatureVector(*(int(v) for v in x)), int(lab)) for x, lab in zip(self.X, self.y)
        ]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx])


def split_per_class(data: Dataset, n_train_per_class: int) -> tuple[Dataset, Dataset]:
    """First ``n_train_per_class`` rows of each class train, the rest test."""
    train, test = [], []
    for lab in np.unique(data.y):
        idx = np.flatnonzero(data.y == lab)
        train.extend(idx[:n_train_per_class])
        test.extend(idx[n_train_per_class:])
    return data.subset(np.sort(train)), data.subset(np.sort(test))
