"""Loss families h(theta, xi) with analytic gradients.

Three kinds are supported:

* ``squared``: c * (y - theta'x)**2
* ``logistic``: c * log(1 + exp(-y theta'x)), labels in {-1, +1}
* ``location``: c * (xi - theta)**2, a scalar Gaussian location model

The batched helpers (:func:`loss_values`, :func:`loss_grads`) work on arrays
of any leading shape, which is how the criterion evaluates whole ensembles at
once. :func:`loss_eval` and :func:`loss_grad` are the single-observation
forms.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit


class ShapeError(ValueError):
    pass


class InputError(ValueError):
    pass


class LossKind(str, Enum):
    SQUARED = "squared"
    LOGISTIC = "logistic"
    LOCATION = "location"


@dataclass(frozen=True)
class LossSpec:
    kind: LossKind
    scale: float = 1.0
    bound_k: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind(self.kind))
        if not self.scale > 0:
            raise InputError(f"loss scale must be positive, got {self.scale}")
        if self.bound_k is not None and not self.bound_k > 0:
            raise InputError(f"bound_k must be positive, got {self.bound_k}")

    @property
    def has_features(self) -> bool:
        return self.kind is not LossKind.LOCATION

    def with_scale(self, scale: float) -> "LossSpec":
        return LossSpec(self.kind, scale, self.bound_k)


@dataclass(frozen=True)
class Observation:
    features: np.ndarray | None
    response: float


@dataclass(frozen=True)
class Dataset:
    """n observations: features ``X`` of shape (n, d) (None for location data) and responses ``y``."""

    X: np.ndarray | None
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).reshape(-1)
        object.__setattr__(self, "y", y)
        if self.X is not None:
            X = np.asarray(self.X, dtype=float)
            if X.ndim != 2 or X.shape[0] != y.shape[0]:
                raise ShapeError(f"X shape {X.shape} incompatible with {y.shape[0]} responses")
            object.__setattr__(self, "X", X)

    def __len__(self):
        return self.y.shape[0]

    def __getitem__(self, i) -> Observation:
        return Observation(None if self.X is None else self.X[i], float(self.y[i]))

    @property
    def dim(self) -> int:
        return 1 if self.X is None else self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(None if self.X is None else self.X[idx], self.y[idx])

    @classmethod
    def concat(cls, parts) -> "Dataset":
        parts = list(parts)
        X = None if parts[0].X is None else np.concatenate([p.X for p in parts])
        return cls(X, np.concatenate([p.y for p in parts]))


def param_dim(spec: LossSpec, data: Dataset) -> int:
    return data.dim if spec.has_features else 1


def _check(spec, theta, X, y):
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ShapeError(f"theta must be a vector, got shape {theta.shape}")
    if spec.has_features:
        if X is None:
            raise ShapeError(f"{spec.kind.value} loss needs features")
        if X.shape[-1] != theta.shape[0]:
            raise ShapeError(f"theta has {theta.shape[0]} entries, features have {X.shape[-1]}")
    elif theta.shape[0] != 1:
        raise ShapeError(f"location loss takes a 1-vector theta, got {theta.shape[0]}")
    if not np.all(np.isfinite(theta)):
        raise InputError("non-finite theta")
    return theta


def _margin(theta, X, y):
    return y * (X @ theta)


def loss_values(spec: LossSpec, theta, X, y) -> np.ndarray:
    """Loss at every observation; ``X`` has shape (..., d), ``y`` shape (...)."""
    theta = _check(spec, theta, X, y)
    c = spec.scale
    if spec.kind is LossKind.SQUARED:
        r = y - X @ theta
        return c * r * r
    if spec.kind is LossKind.LOGISTIC:
        z = _margin(theta, X, y)
        return c * (np.maximum(0.0, -z) + np.log1p(np.exp(-np.abs(z))))
    r = y - theta[0]
    return c * r * r


def loss_grads(spec: LossSpec, theta, X, y) -> np.ndarray:
    """Per-observation gradients, shape (..., p)."""
    theta = _check(spec, theta, X, y)
    c = spec.scale
    if spec.kind is LossKind.SQUARED:
        r = y - X @ theta
        return (-2.0 * c * r)[..., None] * X
    if spec.kind is LossKind.LOGISTIC:
        z = _margin(theta, X, y)
        return (-c * y * expit(-z))[..., None] * X
    return (-2.0 * c * (y - theta[0]))[..., None]


def weighted_value_grad(spec: LossSpec, theta, X, y, w):
    """(sum_j w_j h_j, sum_j w_j grad h_j) for one weighted atom set, without input checks.

    Inner loop of the per-sample SGD; callers validate shapes once up front.
    """
    c = spec.scale
    if spec.kind is LossKind.SQUARED:
        r = y - X @ theta
        wr = w * r
        return c * float(wr @ r), (-2.0 * c) * (wr @ X)
    if spec.kind is LossKind.LOGISTIC:
        z = y * (X @ theta)
        h = np.maximum(0.0, -z) + np.log1p(np.exp(-np.abs(z)))
        return c * float(w @ h), (-c) * ((w * y * expit(-z)) @ X)
    r = y - theta[0]
    wr = w * r
    return c * float(wr @ r), np.array([-2.0 * c * wr.sum()])


def _obs_arrays(obs: Observation):
    if not np.isfinite(obs.response) or (
        obs.features is not None and not np.all(np.isfinite(obs.features))
    ):
        raise InputError("non-finite observation")
    X = None if obs.features is None else np.asarray(obs.features, dtype=float)
    return X, float(obs.response)


def loss_eval(spec: LossSpec, theta, obs: Observation) -> float:
    X, y = _obs_arrays(obs)
    return float(loss_values(spec, theta, X, y))


def loss_grad(spec: LossSpec, theta, obs: Observation) -> np.ndarray:
    X, y = _obs_arrays(obs)
    return loss_grads(spec, theta, X, y)


def check_bound(spec: LossSpec, values) -> bool:
    """Soft check of the theoretical bound K on observed losses; warns, never clips."""
    if spec.bound_k is None:
        return True
    worst = float(np.max(values))
    if worst > spec.bound_k:
        warnings.warn(f"observed loss {worst:.4g} exceeds bound K={spec.bound_k:.4g}", stacklevel=2)
        return False
    return True


def mean_loss(spec: LossSpec, theta, data: Dataset) -> float:
    return float(np.mean(loss_values(spec, theta, data.X, data.y)))
