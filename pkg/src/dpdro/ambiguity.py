"""Smooth ambiguity transforms.

The exponential family phi_beta(t) = beta * (exp(t / beta) - 1) is convex and
strictly increasing with constant Arrow-Pratt coefficient 1/beta. ``beta=inf``
is the identity transform (ambiguity neutrality) and is handled exactly rather
than as a large float.

Other convex transforms can be plugged in by subclassing :class:`Phi` and
implementing the three derivatives; none ship besides the two below.
"""
from __future__ import annotations

import math

import numpy as np

# exp overflows just above 709; keep a margin.
EXP_CAP = 700.0


class DomainError(ValueError):
    pass


class NumericError(ArithmeticError):
    """A computation left the finite range (e.g. phi saturating at tiny beta)."""


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("phi is defined on nonnegative arguments only")
    return t


class Phi:
    beta = math.inf

    def value(self, t):
        raise NotImplementedError

    def prime(self, t):
        raise NotImplementedError

    def second(self, t):
        raise NotImplementedError

    def arrow_pratt(self, t):
        return self.second(t) / self.prime(t)

    def m_phi(self, k_bound: float) -> float:
        """sup of phi' over [0, K]; phi' is nondecreasing for convex phi."""
        return float(self.prime(k_bound))


class IdentityPhi(Phi):
    def value(self, t):
        return _check_t(t) * 1.0

    def prime(self, t):
        return np.ones_like(_check_t(t))

    def second(self, t):
        return np.zeros_like(_check_t(t))

    def __repr__(self):
        return "IdentityPhi()"

    def __eq__(self, other):
        return isinstance(other, IdentityPhi)

    def __hash__(self):
        return hash("identity")


class ExponentialPhi(Phi):
    def __init__(self, beta: float):
        if not (beta > 0) or math.isinf(beta):
            raise DomainError(f"beta must be finite and positive, got {beta}")
        self.beta = float(beta)

    def _scaled(self, t):
        s = _check_t(t) / self.beta
        if np.any(s > EXP_CAP):
            raise NumericError(
                f"phi argument t/beta={float(np.max(s)):.4g} exceeds {EXP_CAP}; "
                "reduce the loss scale or increase beta"
            )
        return s

    def value(self, t):
        return self.beta * np.expm1(self._scaled(t))

    def prime(self, t):
        return np.exp(self._scaled(t))

    def second(self, t):
        return np.exp(self._scaled(t)) / self.beta

    def arrow_pratt(self, t):
        return np.full_like(_check_t(t), 1.0 / self.beta)

    def __repr__(self):
        return f"ExponentialPhi(beta={self.beta!r})"

    def __eq__(self, other):
        return isinstance(other, ExponentialPhi) and other.beta == self.beta

    def __hash__(self):
        return hash(("exp", self.beta))


def make_phi(beta) -> Phi:
    """Build a transform from beta; ``inf`` or the string ``"inf"`` gives the identity."""
    if isinstance(beta, Phi):
        return beta
    if isinstance(beta, str):
        if beta.strip().lower() in ("inf", "infinity", "+inf"):
            return IdentityPhi()
        beta = float(beta)
    if beta is None or math.isinf(beta):
        return IdentityPhi()
    return ExponentialPhi(beta)


def beta_label(phi: Phi) -> str:
    return "inf" if isinstance(phi, IdentityPhi) else repr(phi.beta)


# Functional aliases.

def phi(spec: Phi, t):
    return spec.value(t)


def phi_prime(spec: Phi, t):
    return spec.prime(t)


def phi_second(spec: Phi, t):
    return spec.second(t)


def arrow_pratt(spec: Phi, t):
    return spec.arrow_pratt(t)


def m_phi(spec: Phi, k_bound: float) -> float:
    if not k_bound > 0:
        raise DomainError(f"K must be positive, got {k_bound}")
    return spec.m_phi(k_bound)
