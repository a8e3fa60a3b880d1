from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..losses import Dataset, LossKind, LossSpec, ShapeError, loss_values


@dataclass(frozen=True)
class MetricRow:
    test_risk: float
    coef_l2_dist: float | None = None
    coef_l2_norm: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "MetricRow":
        return cls(**d)


def compute_metrics(theta, test: Dataset, loss: LossSpec, true_coef=None, risk: str | None = None) -> MetricRow:
    """Held-out performance of ``theta``.

    ``risk`` is ``"rmse"`` (root mean squared residual, unscaled) or
    ``"mean_loss"`` (average of the scaled loss). The default is RMSE for the
    squared loss and the mean loss otherwise, which for the location model is
    the average negative log-likelihood up to constants.
    """
    theta = np.asarray(theta, dtype=float)
    if risk is None:
        risk = "rmse" if loss.kind is LossKind.SQUARED else "mean_loss"
    if risk == "rmse":
        if loss.kind is LossKind.LOCATION:
            resid = test.y - theta[0]
        else:
            if test.X is None or test.X.shape[1] != theta.shape[0]:
                raise ShapeError("theta and test features disagree in dimension")
            resid = test.y - test.X @ theta
        value = float(np.sqrt(np.mean(resid * resid)))
    elif risk == "mean_loss":
        value = float(np.mean(loss_values(loss, theta, test.X, test.y)))
    else:
        raise ValueError(f"unknown risk {risk!r}")
    dist = None
    if true_coef is not None:
        true_coef = np.asarray(true_coef, dtype=float)
        if true_coef.shape != theta.shape:
            raise ShapeError(f"true coefficients {true_coef.shape} vs theta {theta.shape}")
        dist = float(np.linalg.norm(theta - true_coef))
    return MetricRow(value, dist, float(np.linalg.norm(theta)))


def summarize(rows):
    """Column-wise mean and (population) standard deviation of metric rows."""
    out = []
    for fn in (np.mean, np.std):
        vals = {}
        for name in ("test_risk", "coef_l2_dist", "coef_l2_norm"):
            col = [getattr(r, name) for r in rows]
            vals[name] = None if any(v is None for v in col) else float(fn(col))
        out.append(MetricRow(**vals))
    return tuple(out)
