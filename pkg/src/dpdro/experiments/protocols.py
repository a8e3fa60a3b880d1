"""Preset simulation studies and the real-data replication protocol.

Each simulation compares the ambiguity-averse fit (beta = 1), the
ambiguity-neutral fit (beta = inf) and the plain estimator over a grid of
concentrations. Desk-scale presets run in CI time; ``paper_scale=True``
switches to the full replication counts and Monte Carlo sizes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from ..ensemble import CenteringSpec
from ..losses import InputError, LossKind
from ..sampling import RngStream
from .cv import cv_alpha, cv_l1
from .datasets import REGISTRY, DataError, RealDataProtocol, load_protocol_data
from .dgp import DgpSpec
from .methods import RobustSettings
from .preprocessing import standardize
from .replicate import MethodSpec, ReplicationReport, batch_replicate

LOSS_SCALE = 1e-3
PLAIN = "plain"


@dataclass(frozen=True)
class SimulationPreset:
    name: str
    dgp: DgpSpec
    kind: LossKind
    alpha_factors: tuple  # multiplied by alpha_unit
    alpha_unit: float
    settings: RobustSettings  # alpha is filled in per grid value
    replications: int
    full_replications: int
    full_mc_samples: int
    n_test: int = 2000
    full_n_test: int = 5000

    def alphas(self) -> tuple:
        return tuple(a * self.alpha_unit for a in self.alpha_factors)

    def scaled(self, paper_scale: bool) -> "SimulationPreset":
        if not paper_scale:
            return self
        return replace(self, replications=self.full_replications, n_test=self.full_n_test,
                       settings=replace(self.settings, mc_samples=self.full_mc_samples))


def _preset(name, dgp, kind, unit, centering, step_a, reps, mc):
    settings = RobustSettings(alpha=unit, beta=1.0, centering=centering, scheme="mdmc", mc_samples=100,
                              trunc=50, passes=50, step_a=step_a, step_b=100.0, loss_scale=LOSS_SCALE)
    return SimulationPreset(name, dgp, kind, (1, 2, 5, 10), unit, settings, 20, reps, mc)


_outliers = DgpSpec("gaussian-outliers")
PRESETS = {
    "linreg": _preset("linreg", DgpSpec("sparse-linreg"), LossKind.SQUARED, 1 / 100,
                      CenteringSpec("standard_normal"), 50.0, 200, 300),
    "gauss-outlier": _preset("gauss-outlier", _outliers, LossKind.LOCATION, 1.0,
                             CenteringSpec("standard_normal", loc=_outliers.outlier_mean * _outliers.n_out
                                           / _outliers.size), 20.0, 100, 300),
    "logit": _preset("logit", DgpSpec("sparse-logit"), LossKind.LOGISTIC, 1 / 100,
                     CenteringSpec("binary_normal"), 1000.0, 200, 200),
}


def get_preset(name: str) -> SimulationPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise InputError(f"unknown simulation {name!r}; expected one of {sorted(PRESETS)}") from None


def simulation_methods(preset: SimulationPreset) -> list[MethodSpec]:
    out = [MethodSpec(PLAIN, "unregularized")]
    for a in preset.alphas():
        s = replace(preset.settings, alpha=a)
        out.append(MethodSpec(f"robust[alpha={a:g}]", "robust", s))
        out.append(MethodSpec(f"neutral[alpha={a:g}]", "neutral", s))
    return out


def run_simulation(preset: SimulationPreset, stream: RngStream, workers: int = 1) -> dict[str, ReplicationReport]:
    return batch_replicate(preset.dgp, preset.replications, None, simulation_methods(preset), preset.kind,
                           stream, n_test=preset.n_test, loss_scale=preset.settings.loss_scale, workers=workers)


def figure_rows(reports: dict[str, ReplicationReport]) -> list[dict]:
    """Bar-chart values: one row per method and metric with its mean and std."""
    rows = []
    for label, rep in reports.items():
        m, s = rep.mean.to_dict(), rep.std.to_dict()
        for metric in ("test_risk", "coef_l2_dist", "coef_l2_norm"):
            if m[metric] is not None:
                rows.append({"method": label, "metric": metric, "mean": m[metric], "std": s[metric]})
    return rows


# real data

TABLE_COLUMNS = ("Unregularized", "L1 Regularized", "DP Robust")
DEFAULT_ALPHA_FACTORS = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)  # times the batch size
DEFAULT_LAMBDAS = (1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3)


def real_data_settings(protocol: RealDataProtocol) -> RobustSettings:
    if protocol.kind is LossKind.LOGISTIC:
        return RobustSettings(alpha=1.0, centering=CenteringSpec("binary_normal"), step_a=1000.0,
                              loss_scale=LOSS_SCALE)
    return RobustSettings(alpha=1.0, centering=CenteringSpec("standard_normal"), step_a=50.0,
                          loss_scale=LOSS_SCALE)


@dataclass(frozen=True)
class RealDataResult:
    protocol: str
    alpha_cv: dict
    lambda_cv: dict
    reports: dict  # table column -> ReplicationReport

    def table(self) -> dict:
        return {c: {"Average": self.reports[c].mean.test_risk, "Standard Deviation": self.reports[c].std.test_risk}
                for c in TABLE_COLUMNS}

    def to_dict(self) -> dict:
        return {"protocol": self.protocol, "alpha_cv": self.alpha_cv, "lambda_cv": self.lambda_cv,
                "table": self.table(), "reports": {k: v.to_dict() for k, v in self.reports.items()}}


def table_csv(table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(TABLE_COLUMNS))
    for row in ("Average", "Standard Deviation"):
        w.writerow([row] + [repr(float(table[c][row])) for c in TABLE_COLUMNS])
    return buf.getvalue()


def _cv_dict(res) -> dict:
    return {"best": res.best, "table": res.table()}


def get_protocol(protocol) -> RealDataProtocol:
    if isinstance(protocol, RealDataProtocol):
        return protocol
    if protocol not in REGISTRY:
        raise InputError(f"unknown dataset {protocol!r}; expected one of {sorted(REGISTRY)}")
    return REGISTRY[protocol]


def default_alpha_grid(protocol: RealDataProtocol) -> tuple:
    return tuple(f * protocol.fold_size for f in DEFAULT_ALPHA_FACTORS)


def protocol_split(protocol: RealDataProtocol, data_dir, stream: RngStream):
    """Random train/test split of the full file, standardized with training statistics."""
    data, names = load_protocol_data(protocol, data_dir)
    perm = stream.generator().permutation(len(data))
    train, test = data.subset(perm[:protocol.n_train]), data.subset(perm[protocol.n_train:])
    response = protocol.kind is not LossKind.LOGISTIC
    try:
        train, stats = standardize(train, response=response, names=names)
    except InputError as exc:
        raise DataError(f"{protocol.name}: {exc}") from exc
    test, _ = standardize(test, stats, response=response, names=names)
    return train, test


def run_real_data(protocol: RealDataProtocol | str, data_dir, stream: RngStream, settings: RobustSettings | None = None,
                  alpha_grid=None, lam_grid=DEFAULT_LAMBDAS, workers: int = 1) -> RealDataResult:
    """Split, standardize on the training sample, cross-validate alpha and the L1 penalty over
    ``folds`` folds, then refit all three methods on a fresh split into batches and score each
    on the held-out rows by mean scaled loss."""
    protocol = get_protocol(protocol)
    train, test = protocol_split(protocol, data_dir, stream.child(0))
    settings = settings or real_data_settings(protocol)
    if alpha_grid is None:
        alpha_grid = default_alpha_grid(protocol)

    a_cv = cv_alpha(train, protocol.folds, alpha_grid, protocol.kind, settings, stream.child(1), workers)
    l_cv = cv_l1(train, protocol.folds, lam_grid, protocol.kind, stream.child(2), settings.loss_scale, workers)
    methods = [
        MethodSpec("Unregularized", "unregularized"),
        MethodSpec("L1 Regularized", "l1", lam=l_cv.best),
        MethodSpec("DP Robust", "robust", replace(settings, alpha=a_cv.best)),
    ]
    reports = batch_replicate(train, protocol.folds, protocol.fold_size, methods, protocol.kind, stream.child(3),
                              test=test, loss_scale=settings.loss_scale, risk="mean_loss", workers=workers)
    return RealDataResult(protocol.name, _cv_dict(a_cv), _cv_dict(l_cv), reports)


def within_factor(value: float, target: float, factor: float = 3.0) -> bool:
    return target / factor <= value <= target * factor and math.isfinite(value)


def ordering_holds(table: dict) -> bool:
    sd = [table[c]["Standard Deviation"] for c in ("DP Robust", "L1 Regularized", "Unregularized")]
    return bool(np.all(np.diff(sd) >= 0))
