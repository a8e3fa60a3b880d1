from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from ..losses import Dataset, InputError, LossKind, LossSpec, mean_loss
from ..sampling import RngStream
from .methods import RobustSettings, fit_method, fit_robust

TIE_TOL = 1e-10


@dataclass(frozen=True)
class CvResult:
    best: float
    grid: tuple
    risks: tuple  # mean out-of-fold risk per grid entry
    fold_risks: tuple  # per grid entry, per fold

    def table(self):
        return [{"value": v, "risk": r} for v, r in zip(self.grid, self.risks)]


def fold_indices(n: int, folds: int, stream: RngStream):
    if folds < 2:
        raise InputError(f"need at least 2 folds, got {folds}")
    if folds > n:
        raise InputError(f"{folds} folds over {n} rows leaves empty folds")
    perm = stream.generator().permutation(n)
    return np.array_split(perm, folds)


def select(grid, risks) -> int:
    """Index of the smallest grid value among risks within TIE_TOL of the minimum.

    Equal grid values resolve to their first occurrence.
    """
    risks = np.asarray(risks, dtype=float)
    tied = np.flatnonzero(risks <= risks.min() + TIE_TOL)
    return int(min(tied, key=lambda i: (grid[i], i)))


def kfold_cv(data: Dataset, folds: int, grid, fit, evaluate, stream: RngStream, workers: int = 1) -> CvResult:
    """Generic k-fold search.

    ``fit(train, value, fold_stream) -> theta`` and ``evaluate(theta, heldout) -> risk``.
    Fold k uses the same ``fold_stream`` for every grid value.
    """
    grid = tuple(grid)
    if not grid:
        raise InputError("empty grid")
    parts = fold_indices(len(data), folds, stream.child(0))

    def task(args):
        gi, k = args
        held = parts[k]
        train = np.concatenate([p for j, p in enumerate(parts) if j != k])
        theta = fit(data.subset(train), grid[gi], stream.child(1, k))
        return evaluate(theta, data.subset(held))

    jobs = [(gi, k) for gi in range(len(grid)) for k in range(folds)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(task, jobs))
    else:
        out = [task(j) for j in jobs]
    fold_risks = np.asarray(out).reshape(len(grid), folds)
    risks = fold_risks.mean(axis=1)
    best = select(grid, risks)
    return CvResult(grid[best], grid, tuple(float(r) for r in risks),
                    tuple(tuple(float(v) for v in row) for row in fold_risks))


def cv_alpha(data: Dataset, folds: int, alpha_grid, kind, settings: RobustSettings, stream: RngStream,
             workers: int = 1) -> CvResult:
    """Select the DP concentration by out-of-fold mean loss of the robust fit."""
    loss = settings.loss(kind)

    def fit(train, alpha, s):
        return fit_robust(train, kind, replace(settings, alpha=float(alpha)), s)[0]

    return kfold_cv(data, folds, alpha_grid, fit, lambda th, d: mean_loss(loss, th, d), stream, workers)


def cv_l1(data: Dataset, folds: int, lam_grid, kind, stream: RngStream, loss_scale: float = 1.0,
          workers: int = 1) -> CvResult:
    loss = LossSpec(LossKind(kind), loss_scale)

    def fit(train, lam, s):
        return fit_method("l1", train, kind, None, s, lam=float(lam))

    return kfold_cv(data, folds, lam_grid, fit, lambda th, d: mean_loss(loss, th, d), stream, workers)
