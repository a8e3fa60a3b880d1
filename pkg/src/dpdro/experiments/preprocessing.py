from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..losses import Dataset, InputError


@dataclass(frozen=True)
class StandardizationStats:
    x_mean: np.ndarray | None
    x_sd: np.ndarray | None
    y_mean: float
    y_sd: float

    def apply(self, data: Dataset) -> Dataset:
        X = None if data.X is None else (data.X - self.x_mean) / self.x_sd
        return Dataset(X, (data.y - self.y_mean) / self.y_sd)


def standardize(data: Dataset, stats: StandardizationStats | None = None, response: bool = True,
                names=None):
    """z-score features (and the response unless ``response=False``).

    With ``stats`` given, those (training) statistics are reused as-is, which is
    how held-out data is transformed. Returns ``(dataset, stats)``.
    """
    if stats is not None:
        return stats.apply(data), stats
    if len(data) == 0:
        raise InputError("cannot standardize an empty dataset")
    x_mean = x_sd = None
    if data.X is not None:
        x_mean = data.X.mean(axis=0)
        x_sd = data.X.std(axis=0)
        bad = np.flatnonzero(~(x_sd > 0))
        if bad.size:
            j = int(bad[0])
            label = names[j] if names is not None else f"feature {j}"
            raise InputError(f"zero-variance column: {label}")
    if response:
        y_mean, y_sd = float(data.y.mean()), float(data.y.std())
        if not y_sd > 0:
            raise InputError("zero-variance column: target")
    else:
        y_mean, y_sd = 0.0, 1.0
    stats = StandardizationStats(x_mean, x_sd, y_mean, y_sd)
    return stats.apply(data), stats
