"""The robust criterion over a weighted ensemble and the ambiguity-neutral criterion.

For an ensemble of N measures with weights p_ij on atoms xi_ij,

    H_i(theta) = sum_j p_ij h(theta, xi_ij)
    V(theta)   = (1/N) sum_i phi(H_i(theta))
    grad V     = (1/N) sum_i phi'(H_i) sum_j p_ij grad h(theta, xi_ij)

The ambiguity-neutral criterion replaces the posterior average by the
predictive: n/(alpha+n) * empirical risk + alpha/(alpha+n) * E_p0[h].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambiguity import NumericError, Phi, make_phi
from .ensemble import CenteringKind, DpPrior, WeightedEnsemble, sample_centering
from .losses import Dataset, InputError, LossKind, LossSpec, loss_grads, loss_values, weighted_value_grad
from .sampling import RngStream

MC_PRIOR_DRAWS = 10_000


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class CriterionContext:
    ensemble: WeightedEnsemble
    loss: LossSpec
    phi: Phi

    def __post_init__(self):
        object.__setattr__(self, "phi", make_phi(self.phi))
        if self.loss.has_features and self.ensemble.atoms_X is None:
            raise InputError(f"{self.loss.kind.value} loss needs feature atoms")

    @property
    def dim(self) -> int:
        return self.ensemble.atoms_X.shape[-1] if self.loss.has_features else 1

    @property
    def N(self) -> int:
        return self.ensemble.N

    # per-atom quantities, shapes (N, L) and (N, L, p)
    def atom_losses(self, theta, rows=slice(None)):
        e = self.ensemble
        X = None if e.atoms_X is None else e.atoms_X[rows]
        return loss_values(self.loss, theta, X, e.atoms_y[rows])

    def atom_grads(self, theta, rows=slice(None)):
        e = self.ensemble
        X = None if e.atoms_X is None else e.atoms_X[rows]
        return loss_grads(self.loss, theta, X, e.atoms_y[rows])

    def inner_risks(self, theta) -> np.ndarray:
        return np.sum(self.ensemble.weights * self.atom_losses(theta), axis=-1)

    def value(self, theta) -> float:
        return robust_value(self, theta)

    def grad(self, theta) -> np.ndarray:
        return robust_grad(self, theta)

    def sample_directions(self, theta) -> np.ndarray:
        """phi'(H_i) grad H_i for every sample i, shape (N, p); their mean is grad V."""
        w = self.ensemble.weights
        H = np.sum(w * self.atom_losses(theta), axis=-1)
        gH = np.einsum("nl,nlp->np", w, self.atom_grads(theta))
        return _phi_prime(self.phi, H)[:, None] * gH

    def sample_direction(self, i: int, theta) -> np.ndarray:
        e = self.ensemble
        X = None if e.atoms_X is None else e.atoms_X[i]
        H, gH = weighted_value_grad(self.loss, theta, X, e.atoms_y[i], e.weights[i])
        return _phi_prime(self.phi, H) * gH

    def term_directions(self, theta) -> np.ndarray:
        """The M = N*L per-atom terms L p_ij phi'(H_i) grad h(theta, xi_ij), shape (N*L, p)."""
        w = self.ensemble.weights
        H = np.sum(w * self.atom_losses(theta), axis=-1)
        scale = self.ensemble.L * w * _phi_prime(self.phi, H)[:, None]
        terms = scale[..., None] * self.atom_grads(theta)
        return terms.reshape(-1, terms.shape[-1])


def _finite(x, what):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite {what}")
    return x


def _phi_prime(phi: Phi, H):
    return _finite(phi.prime(H), "phi'(H)")


def inner_risk(ctx: CriterionContext, sample_index: int, theta) -> float:
    if not 0 <= sample_index < ctx.N:
        raise IndexError(f"sample index {sample_index} outside [0, {ctx.N})")
    w = ctx.ensemble.weights[sample_index]
    return float(w @ ctx.atom_losses(theta, sample_index))


def robust_value(ctx: CriterionContext, theta) -> float:
    H = ctx.inner_risks(theta)
    return float(np.mean(_finite(ctx.phi.value(H), "criterion value")))


def robust_grad(ctx: CriterionContext, theta) -> np.ndarray:
    return _finite(ctx.sample_directions(theta).mean(axis=0), "criterion gradient")


@dataclass
class NeutralCriterion:
    """Ambiguity-neutral criterion as an objective with ``value``/``grad``.

    The prior term uses an analytic rule when one exists for the centering and
    loss; otherwise it is a Monte Carlo average over ``mc_draws`` fixed draws
    from p0 taken from ``stream`` (common draws, so value and gradient agree).
    """

    data: Dataset
    prior: DpPrior
    loss: LossSpec
    mc_draws: int | None = MC_PRIOR_DRAWS
    stream: RngStream | None = None

    def __post_init__(self):
        self.n = len(self.data)
        a = self.prior.alpha
        if self.n == 0 and a == 0:
            raise InputError("neutral criterion undefined: no data and alpha = 0")
        self.w_emp = self.n / (a + self.n)
        self.w_prior = a / (a + self.n)
        self.rule = _analytic_rule(self.prior.centering, self.loss)
        self._draws = None
        if self.rule is None and self.w_prior > 0:
            if not self.mc_draws:
                raise ConfigurationError(
                    f"no analytic prior risk for {self.prior.centering.kind.value} centering with "
                    f"{self.loss.kind.value} loss and no Monte Carlo budget"
                )
            stream = self.stream if self.stream is not None else RngStream(0, 0)
            self._draws = sample_centering(self.prior.centering, self.data, self.mc_draws, stream)

    def empirical_risk(self, theta) -> float:
        if self.n == 0:
            return 0.0
        return float(np.mean(loss_values(self.loss, theta, self.data.X, self.data.y)))

    def prior_risk(self, theta) -> float:
        if self.rule is not None:
            return self.rule[0](np.asarray(theta, dtype=float))
        return float(np.mean(loss_values(self.loss, theta, self._draws.X, self._draws.y)))

    def _prior_grad(self, theta):
        if self.rule is not None:
            return self.rule[1](np.asarray(theta, dtype=float))
        return loss_grads(self.loss, theta, self._draws.X, self._draws.y).mean(axis=0)

    def value(self, theta) -> float:
        out = self.w_emp * self.empirical_risk(theta)
        if self.w_prior > 0:
            out += self.w_prior * self.prior_risk(theta)
        return out

    def grad(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        g = np.zeros_like(theta)
        if self.n:
            g += self.w_emp * loss_grads(self.loss, theta, self.data.X, self.data.y).mean(axis=0)
        if self.w_prior > 0:
            g += self.w_prior * self._prior_grad(theta)
        return g


def _analytic_rule(centering, loss: LossSpec):
    """(value, grad) of E_p0[h] in closed form, or None."""
    c = loss.scale
    kind = centering.kind
    if loss.kind is LossKind.SQUARED and kind is CenteringKind.STANDARD_NORMAL and centering.loc == 0:
        # y - theta'x ~ N(0, 1 + ||theta||^2)
        return (lambda t: c * (1.0 + t @ t), lambda t: 2.0 * c * t)
    if loss.kind is LossKind.SQUARED and kind is CenteringKind.L1_VARIANCE:
        return (lambda t: c * (1.0 + np.abs(t).sum()), lambda t: c * np.sign(t))
    if loss.kind is LossKind.LOCATION and kind is CenteringKind.STANDARD_NORMAL:
        m = centering.loc
        return (lambda t: c * (1.0 + (m - t[0]) ** 2), lambda t: np.array([-2.0 * c * (m - t[0])]))
    if kind is CenteringKind.L1_VARIANCE:
        raise ConfigurationError("l1_variance centering is defined for the squared loss only")
    return None


def neutral_value(data: Dataset, prior: DpPrior, loss: LossSpec, theta, mc_draws=MC_PRIOR_DRAWS, stream=None) -> float:
    return NeutralCriterion(data, prior, loss, mc_draws, stream).value(theta)


def ridge_lambda(alpha: float, n: int) -> float:
    if n < 1:
        raise InputError("ridge_lambda needs n >= 1")
    return alpha / n
