"""Simulation data-generating processes."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from ..losses import Dataset, InputError
from ..sampling import as_generator, sample_mvn_compound_symmetry


class DgpKind(str, Enum):
    SPARSE_LINREG = "sparse-linreg"
    GAUSSIAN_OUTLIERS = "gaussian-outliers"
    SPARSE_LOGIT = "sparse-logit"


@dataclass(frozen=True)
class DgpSpec:
    kind: DgpKind
    n: int = 100
    d: int = 90
    s: int = 5
    rho: float = 0.3
    sigma: float = 0.5
    n_clean: int = 10
    n_out: int = 3
    outlier_mean: float = 5.0
    outlier_sd: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DgpKind(self.kind))
        if self.kind is DgpKind.GAUSSIAN_OUTLIERS:
            if self.n_clean < 0 or self.n_out < 0 or self.n_clean + self.n_out < 1:
                raise InputError(f"invalid outlier counts {self.n_clean}, {self.n_out}")
            if not self.outlier_sd >= 0:
                raise InputError("outlier_sd must be nonnegative")
            return
        if self.n < 1 or self.d < 1:
            raise InputError(f"n and d must be positive, got n={self.n}, d={self.d}")
        if not 0 <= self.s <= self.d:
            raise InputError(f"need 0 <= s <= d, got s={self.s}, d={self.d}")
        if not 0 <= self.rho < 1:
            raise InputError(f"rho must lie in [0, 1), got {self.rho}")
        if self.kind is DgpKind.SPARSE_LINREG and not self.sigma >= 0:
            raise InputError(f"sigma must be nonnegative, got {self.sigma}")

    @property
    def size(self) -> int:
        if self.kind is DgpKind.GAUSSIAN_OUTLIERS:
            return self.n_clean + self.n_out
        return self.n

    def with_n(self, n: int) -> "DgpSpec":
        d = asdict(self)
        if self.kind is DgpKind.GAUSSIAN_OUTLIERS:
            d.update(n_clean=n, n_out=0)
        else:
            d["n"] = n
        return DgpSpec(**d)

    def describe(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def true_coef(spec: DgpSpec) -> np.ndarray:
    """(1, ..., 1, 0, ..., 0) with s ones; the location model's truth is 0."""
    if spec.kind is DgpKind.GAUSSIAN_OUTLIERS:
        return np.zeros(1)
    a = np.zeros(spec.d)
    a[: spec.s] = 1.0
    return a


def gen_sparse_linreg(spec: DgpSpec, rng, n: int | None = None) -> Dataset:
    if spec.kind is not DgpKind.SPARSE_LINREG:
        raise InputError(f"expected a sparse-linreg spec, got {spec.kind.value}")
    g = as_generator(rng)
    n = spec.n if n is None else n
    X = sample_mvn_compound_symmetry(g, spec.d, spec.rho, n)
    y = X @ true_coef(spec) + spec.sigma * g.standard_normal(n)
    return Dataset(X, y)


def gen_gaussian_outliers(spec: DgpSpec, rng) -> Dataset:
    """n_clean N(0, 1) draws followed by n_out N(outlier_mean, outlier_sd^2) draws."""
    if spec.kind is not DgpKind.GAUSSIAN_OUTLIERS:
        raise InputError(f"expected a gaussian-outliers spec, got {spec.kind.value}")
    g = as_generator(rng)
    clean = g.standard_normal(spec.n_clean)
    out = spec.outlier_mean + spec.outlier_sd * g.standard_normal(spec.n_out)
    return Dataset(None, np.concatenate([clean, out]))


def gen_gaussian_clean(n: int, rng) -> Dataset:
    """Test draws from the uncontaminated N(0, 1) process."""
    return Dataset(None, as_generator(rng).standard_normal(n))


def gen_sparse_logit(spec: DgpSpec, rng, n: int | None = None) -> Dataset:
    if spec.kind is not DgpKind.SPARSE_LOGIT:
        raise InputError(f"expected a sparse-logit spec, got {spec.kind.value}")
    g = as_generator(rng)
    n = spec.n if n is None else n
    X = sample_mvn_compound_symmetry(g, spec.d, spec.rho, n)
    p = expit(X @ true_coef(spec))
    y = np.where(g.random(n) < p, 1.0, -1.0)
    return Dataset(X, y)


def generate(spec: DgpSpec, rng) -> Dataset:
    if spec.kind is DgpKind.SPARSE_LINREG:
        return gen_sparse_linreg(spec, rng)
    if spec.kind is DgpKind.SPARSE_LOGIT:
        return gen_sparse_logit(spec, rng)
    return gen_gaussian_outliers(spec, rng)


def generate_test(spec: DgpSpec, n_test: int, rng) -> Dataset:
    """Held-out draws from the target process (outlier-free for the location model)."""
    if spec.kind is DgpKind.SPARSE_LINREG:
        return gen_sparse_linreg(spec, rng, n_test)
    if spec.kind is DgpKind.SPARSE_LOGIT:
        return gen_sparse_logit(spec, rng, n_test)
    return gen_gaussian_clean(n_test, rng)
