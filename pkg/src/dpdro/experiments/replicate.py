"""Batch replication: fit several methods on many independent training batches."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..losses import Dataset, InputError, LossKind, LossSpec
from ..sampling import RngStream
from .dgp import DgpSpec, generate, generate_test, true_coef
from .methods import RobustSettings, fit_method
from .metrics import MetricRow, compute_metrics, summarize


@dataclass(frozen=True)
class ReplicationReport:
    per_batch_metrics: tuple[MetricRow, ...]
    mean: MetricRow
    std: MetricRow

    @classmethod
    def from_rows(cls, rows) -> "ReplicationReport":
        rows = tuple(rows)
        mean, std = summarize(rows)
        return cls(rows, mean, std)

    def to_dict(self) -> dict:
        return {
            "per_batch": [r.to_dict() for r in self.per_batch_metrics],
            "mean": self.mean.to_dict(),
            "std": self.std.to_dict(),
        }


@dataclass(frozen=True)
class MethodSpec:
    """A named method with its settings; ``label`` keys the report."""

    label: str
    method: str
    settings: RobustSettings | None = None
    lam: float | None = None


def batch_replicate(source, batches: int, batch_size: int | None, methods, kind, stream: RngStream, *,
                    test: Dataset | None = None, n_test: int = 2000, loss_scale: float = 1e-3,
                    risk: str | None = None, workers: int = 1) -> dict[str, ReplicationReport]:
    """Train every method on each batch and score it on held-out data.

    ``source`` is either a training :class:`Dataset`, split without overlap into
    ``batches`` batches of ``batch_size`` rows and scored on ``test``, or a
    :class:`DgpSpec`, in which case each batch is a fresh simulated sample with
    its own fresh test set of ``n_test`` rows. All methods see the same batch.
    """
    kind = LossKind(kind)
    methods = list(methods)
    if batches < 1:
        raise InputError("need at least one batch")
    loss = LossSpec(kind, loss_scale)
    if isinstance(source, DgpSpec):
        coef = true_coef(source)

        def batch_data(b):
            return generate(source, stream.child(b, 0)), generate_test(source, n_test, stream.child(b, 1))
    else:
        if test is None:
            raise InputError("real-data replication needs a test set")
        if batch_size is None or batch_size < 1:
            raise InputError("batch_size must be positive")
        if batches * batch_size > len(source):
            raise InputError(f"{batches} batches of {batch_size} need {batches * batch_size} rows, "
                             f"only {len(source)} available")
        perm = stream.child(0).generator().permutation(len(source))
        coef = None

        def batch_data(b):
            return source.subset(perm[b * batch_size:(b + 1) * batch_size]), test

    def task(b):
        train, held = batch_data(b)
        rows = {}
        for m in methods:
            theta = fit_method(m.method, train, kind, m.settings, stream.child(b, 2), lam=m.lam)
            rows[m.label] = compute_metrics(theta, held, loss, coef, risk)
        return rows

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, range(batches)))
    else:
        results = [task(b) for b in range(batches)]
    return {m.label: ReplicationReport.from_rows(r[m.label] for r in results) for m in methods}


def as_array(report: ReplicationReport, field: str = "test_risk") -> np.ndarray:
    return np.array([getattr(r, field) for r in report.per_batch_metrics])
