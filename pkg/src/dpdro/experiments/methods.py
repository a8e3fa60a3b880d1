"""Fitting procedures compared in the experiments.

* ``robust``: DP ensemble + SGD on the smooth-ambiguity criterion
* ``neutral``: the same pipeline with the identity transform (beta = inf)
* ``l1``: LASSO or L1-penalized logistic regression
* ``unregularized``: OLS, plain logistic regression, or the sample mean
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..ambiguity import beta_label, make_phi
from ..criterion import CriterionContext
from ..ensemble import CenteringSpec, DpPrior, build_ensemble
from ..losses import Dataset, InputError, LossKind, LossSpec, param_dim
from ..optimizer import SgdConfig, sgd_minimize
from ..sampling import RngStream
from . import baselines

METHODS = ("robust", "neutral", "l1", "unregularized")


@dataclass(frozen=True)
class RobustSettings:
    alpha: float
    beta: float = 1.0
    centering: CenteringSpec = field(default_factory=CenteringSpec)
    scheme: str = "mdmc"
    mc_samples: int = 100
    trunc: int = 50
    passes: int = 50
    step_a: float = 50.0
    step_b: float = 100.0
    loss_scale: float = 1e-3
    workers: int = 1

    def loss(self, kind) -> LossSpec:
        return LossSpec(LossKind(kind), self.loss_scale)

    def neutral(self) -> "RobustSettings":
        return replace(self, beta=math.inf)

    def describe(self) -> dict:
        d = asdict(self)
        d["beta"] = beta_label(make_phi(self.beta))
        d["centering"] = self.centering.describe()
        d.pop("workers")
        return d


def _derived_seed(stream: RngStream, key: int) -> int:
    return int(stream.child(key).generator().integers(2**63))


def fit_robust(data: Dataset, kind, settings: RobustSettings, stream: RngStream, theta0=None):
    """Build the ensemble from ``stream.child(0)`` and run SGD; returns (theta, trace)."""
    loss = settings.loss(kind)
    prior = DpPrior(settings.alpha, settings.centering)
    ens = build_ensemble(settings.scheme, prior, data, settings.mc_samples, settings.trunc,
                         stream.child(0), settings.workers)
    ctx = CriterionContext(ens, loss, make_phi(settings.beta))
    if theta0 is None:
        theta0 = np.zeros(param_dim(loss, data))
    cfg = SgdConfig(settings.step_a, settings.step_b, settings.passes, theta0, _derived_seed(stream, 1))
    trace = sgd_minimize(ctx, cfg)
    return trace.final_theta, trace


def fit_method(method: str, data: Dataset, kind, settings: RobustSettings | None, stream: RngStream,
               lam: float | None = None) -> np.ndarray:
    kind = LossKind(kind)
    if method == "robust":
        return fit_robust(data, kind, settings, stream)[0]
    if method == "neutral":
        return fit_robust(data, kind, settings.neutral(), stream)[0]
    if method == "unregularized":
        if kind is LossKind.SQUARED:
            return baselines.ols(data)
        if kind is LossKind.LOGISTIC:
            return baselines.logistic_unregularized(data)
        return np.array([data.y.mean()])
    if method == "l1":
        if lam is None:
            raise InputError("the l1 method needs a penalty lam")
        if kind is LossKind.SQUARED:
            return baselines.lasso_oracle(data, lam)
        if kind is LossKind.LOGISTIC:
            return baselines.logistic_l1(data, lam)
        raise InputError("no l1 baseline for the location model")
    raise InputError(f"unknown method {method!r}; expected one of {METHODS}")
