"""Gradient-based minimization of the robust criterion.

:func:`sgd_minimize` is the per-sample scheme used for all experiments: each
pass visits the N ensemble members once in a fresh random order and steps
along phi'(H_i) grad H_i. :func:`minibatch_sgd` samples flattened (i, j)
terms uniformly with replacement instead, matching the setting of the
convergence bound. :func:`full_gradient_descent` is the deterministic
baseline and also accepts any objective exposing ``value``/``grad``.

Step sizes follow eta_t = a / (b + sqrt(t)) with t counted from 0 and
incremented once per update.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ambiguity import NumericError
from .criterion import CriterionContext
from .losses import InputError
from .sampling import RngStream

DIVERGENCE_NORM = 1e6


@dataclass(frozen=True)
class StepSchedule:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise InputError(f"step schedule needs a, b > 0, got a={self.a}, b={self.b}")

    def __call__(self, t):
        return self.a / (self.b + np.sqrt(t))


@dataclass(frozen=True)
class SgdConfig:
    step_a: float
    step_b: float
    passes: int
    theta0: np.ndarray
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self):
        StepSchedule(self.step_a, self.step_b)
        if self.passes < 1:
            raise InputError(f"passes must be at least 1, got {self.passes}")
        object.__setattr__(self, "theta0", np.array(self.theta0, dtype=float).reshape(-1))

    @property
    def schedule(self) -> StepSchedule:
        return StepSchedule(self.step_a, self.step_b)


@dataclass
class RunTrace:
    criterion_values: list[float]
    final_theta: np.ndarray
    averaged_theta: np.ndarray
    iterates: list[np.ndarray] | None = None
    steps: int = 0
    theta_norms: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "criterion_values": [float(v) for v in self.criterion_values],
            "theta_norms": [float(v) for v in self.theta_norms],
            "final_theta": self.final_theta.tolist(),
            "averaged_theta": self.averaged_theta.tolist(),
            "steps": self.steps,
        }


class DivergenceError(NumericError):
    def __init__(self, msg, trace: RunTrace):
        super().__init__(msg)
        self.trace = trace


class _Recorder:
    """Tracks iterates, the eta-weighted running average and pass-boundary values."""

    def __init__(self, objective, theta0, schedule, keep_iterates):
        self.objective = objective
        self.schedule = schedule
        self.theta = theta0.copy()
        self.t = 0
        self.wsum = 0.0
        self.acc = np.zeros_like(theta0)
        self.iterates = [theta0.copy()] if keep_iterates else None
        self.values = [objective.value(theta0)]
        self.norms = [float(np.linalg.norm(theta0))]

    def eta(self):
        return float(self.schedule(self.t))

    def step(self, direction):
        eta = self.eta()
        self.acc += eta * self.theta
        self.wsum += eta
        new = self.theta - eta * direction
        self.t += 1
        if not np.all(np.isfinite(new)) or np.linalg.norm(new) > DIVERGENCE_NORM:
            raise DivergenceError(
                f"iterate diverged at update {self.t} (norm {np.linalg.norm(new):.3g})", self.trace()
            )
        self.theta = new
        if self.iterates is not None:
            self.iterates.append(new.copy())

    def end_pass(self):
        self.values.append(self.objective.value(self.theta))
        self.norms.append(float(np.linalg.norm(self.theta)))

    def trace(self) -> RunTrace:
        # the average runs over theta^0..theta^t with weights eta_0..eta_t
        eta = self.eta()
        avg = (self.acc + eta * self.theta) / (self.wsum + eta)
        return RunTrace(self.values, self.theta.copy(), avg, self.iterates, self.t, self.norms)


def _guarded(rec, fn):
    try:
        fn()
    except NumericError as exc:
        if isinstance(exc, DivergenceError):
            raise
        raise DivergenceError(f"numeric failure at update {rec.t}: {exc}", rec.trace()) from exc
    return rec.trace()


def sgd_minimize(ctx: CriterionContext, config: SgdConfig) -> RunTrace:
    """Per-sample SGD, sampling ensemble members without replacement within each pass."""
    if ctx.N < 1:
        raise InputError("empty ensemble")
    theta0 = _theta0(ctx, config)
    rec = _Recorder(ctx, theta0, config.schedule, config.record_trace)
    g = RngStream(config.seed).child(1).generator()

    def run():
        for _ in range(config.passes):
            for i in g.permutation(ctx.N):
                rec.step(ctx.sample_direction(int(i), rec.theta))
            rec.end_pass()

    return _guarded(rec, run)


def minibatch_direction(ctx: CriterionContext, theta, batch_indices) -> np.ndarray:
    """Mean of L p_ij phi'(H_i) grad h(theta, xi_ij) over flattened indices m = i * L + j."""
    m = np.asarray(batch_indices, dtype=int).reshape(-1)
    if m.size == 0:
        raise InputError("empty mini-batch")
    L = ctx.ensemble.L
    if np.any(m < 0) or np.any(m >= ctx.N * L):
        raise IndexError("term index out of range")
    rows, cols = np.divmod(m, L)
    uniq, inv = np.unique(rows, return_inverse=True)
    w = ctx.ensemble.weights[uniq]
    H = np.sum(w * ctx.atom_losses(theta, uniq), axis=-1)
    phi_p = ctx.phi.prime(H)[inv]
    grads = ctx.atom_grads(theta, uniq)[inv, cols]
    ell = L * ctx.ensemble.weights[rows, cols]
    return np.mean((ell * phi_p)[:, None] * grads, axis=0)


def minibatch_sgd_step(ctx: CriterionContext, theta, batch_indices, eta: float) -> np.ndarray:
    """One mini-batch update; L is the number of atoms per ensemble member."""
    return np.asarray(theta, dtype=float) - eta * minibatch_direction(ctx, theta, batch_indices)


def minibatch_sgd(ctx: CriterionContext, config: SgdConfig, batch_size: int = 1) -> RunTrace:
    """Mini-batch SGD over flattened terms drawn uniformly with replacement.

    One pass is N*L updates, so ``config.passes`` passes give passes*N*L steps.
    """
    if batch_size < 1:
        raise InputError("batch size must be positive")
    M = ctx.N * ctx.ensemble.L
    theta0 = _theta0(ctx, config)
    rec = _Recorder(ctx, theta0, config.schedule, config.record_trace)
    g = RngStream(config.seed).child(2).generator()

    def run():
        for _ in range(config.passes):
            for _ in range(M):
                rec.step(minibatch_direction(ctx, rec.theta, g.integers(M, size=batch_size)))
            rec.end_pass()

    return _guarded(rec, run)


def full_gradient_descent(objective, config: SgdConfig) -> RunTrace:
    """Deterministic descent along ``objective.grad``; one step per pass."""
    theta0 = _theta0(objective, config)
    rec = _Recorder(objective, theta0, config.schedule, config.record_trace)

    def run():
        for _ in range(config.passes):
            rec.step(objective.grad(rec.theta))
            rec.end_pass()

    return _guarded(rec, run)


def averaged_iterate(trace: RunTrace, schedule) -> np.ndarray:
    """sum_t nu_t theta^t with nu_t proportional to eta_t.

    ``schedule`` is a callable of t or an explicit sequence of step sizes.
    """
    if not trace.iterates:
        raise InputError("trace has no recorded iterates")
    K = len(trace.iterates)
    eta = np.asarray(schedule(np.arange(K)) if callable(schedule) else schedule, dtype=float)[:K]
    if eta.shape[0] != K:
        raise InputError(f"need {K} step sizes, got {eta.shape[0]}")
    nu = eta / eta.sum()
    return np.tensordot(nu, np.asarray(trace.iterates), axes=1)


def _theta0(objective, config):
    theta0 = config.theta0
    dim = getattr(objective, "dim", None)
    if dim is not None and theta0.shape[0] != dim:
        raise InputError(f"theta0 has {theta0.shape[0]} entries, criterion expects {dim}")
    return theta0


def export_trace(trace: RunTrace, path) -> Path:
    """CSV with one row per pass boundary: pass, criterion, theta_norm."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pass", "criterion", "theta_norm"])
        for k, (v, nrm) in enumerate(zip(trace.criterion_values, trace.theta_norms)):
            w.writerow([k, repr(float(v)), repr(float(nrm))])
    return path


def suboptimality_bound(dist0_sq: float, sigma_sq: float, etas) -> float:
    """(||theta0 - theta*||^2 + sigma^2 sum eta_t^2) / (2 sum eta_t)."""
    etas = np.asarray(etas, dtype=float)
    return (dist0_sq + sigma_sq * float(np.sum(etas**2))) / (2.0 * float(np.sum(etas)))


def step_sizes(schedule, steps: int) -> np.ndarray:
    return np.asarray(schedule(np.arange(steps)), dtype=float)

