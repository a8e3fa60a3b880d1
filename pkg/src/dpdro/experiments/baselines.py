"""Comparison estimators: OLS, ridge, LASSO and (L1-penalized) logistic regression.

The regression penalties use the (1/n) sum (y - theta'x)^2 + lambda * pen(theta)
convention, so ridge with lambda = alpha/n matches the ambiguity-neutral
criterion under a standard normal centering.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from ..losses import Dataset, InputError


class SingularSystemError(np.linalg.LinAlgError):
    pass


def _xy(data: Dataset):
    if data.X is None:
        raise InputError("regression baselines need features")
    return data.X, data.y


def ridge_oracle(data: Dataset, lam: float) -> np.ndarray:
    """Closed form (X'X/n + lam I)^-1 X'y/n."""
    X, y = _xy(data)
    n, d = X.shape
    A = X.T @ X / n + lam * np.eye(d)
    if lam == 0 and np.linalg.matrix_rank(X) < d:
        raise SingularSystemError("rank-deficient design with lambda = 0")
    try:
        return np.linalg.solve(A, X.T @ y / n)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


def ols(data: Dataset) -> np.ndarray:
    X, y = _xy(data)
    return np.linalg.lstsq(X, y, rcond=None)[0]


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lasso_oracle(data: Dataset, lam: float, tol: float = 1e-8, max_sweeps: int = 100_000) -> np.ndarray:
    """Cyclic coordinate descent until no coordinate moves by more than ``tol``."""
    X, y = _xy(data)
    n, d = X.shape
    col_sq = (X * X).sum(axis=0) / n
    theta = np.zeros(d)
    r = y.copy()
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(d):
            if col_sq[j] == 0:
                continue
            old = theta[j]
            rho = X[:, j] @ r / n + col_sq[j] * old
            new = soft_threshold(rho, lam / 2.0) / col_sq[j]
            if new != old:
                r -= X[:, j] * (new - old)
                theta[j] = new
                delta = max(delta, abs(new - old))
        if delta <= tol:
            return theta
    raise RuntimeError(f"coordinate descent did not settle within {max_sweeps} sweeps")


def _logistic_obj(theta, X, y):
    z = y * (X @ theta)
    val = np.mean(np.maximum(0.0, -z) + np.log1p(np.exp(-np.abs(z))))
    grad = -(X * (y * expit(-z))[:, None]).mean(axis=0)
    return val, grad


def logistic_unregularized(data: Dataset, max_iter: int = 100) -> np.ndarray:
    """Mean logistic loss minimized by L-BFGS with an iteration cap.

    On separable samples the MLE does not exist; the cap returns the finite
    iterate reached, as common solvers do.
    """
    X, y = _xy(data)
    res = minimize(_logistic_obj, np.zeros(X.shape[1]), args=(X, y), jac=True,
                   method="L-BFGS-B", options={"maxiter": max_iter})
    return res.x


def logistic_l1(data: Dataset, lam: float, tol: float = 1e-8, max_iter: int = 20_000) -> np.ndarray:
    """Mean logistic loss + lam * ||theta||_1 by accelerated proximal gradient."""
    X, y = _xy(data)
    n, d = X.shape
    # the mean logistic loss has gradient Lipschitz constant ||X||_2^2 / (4n)
    step = 4.0 * n / max(np.linalg.norm(X, 2) ** 2, 1e-12)
    theta = np.zeros(d)
    z = theta.copy()
    t = 1.0
    for _ in range(max_iter):
        _, g = _logistic_obj(z, X, y)
        new = soft_threshold(z - step * g, step * lam)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = new + ((t - 1.0) / t_next) * (new - theta)
        if np.max(np.abs(new - theta)) <= tol:
            return new
        theta, t = new, t_next
    return theta
