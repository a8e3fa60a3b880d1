"""Monte Carlo approximations of the Dirichlet-process posterior.

Given data xi_1..xi_n and a prior DP(alpha, p0), the posterior is
DP(alpha + n, predictive) with predictive = alpha/(alpha+n) p0 + n/(alpha+n)
empirical. Each builder returns a :class:`WeightedEnsemble` of N discrete
measures with an equal number of atoms L:

* ``sbmc``: stick-breaking truncated after T sticks, remainder mass on one
  extra predictive atom (L = T + 1)
* ``mdmc``: symmetric Dirichlet((alpha+n)/T) weights on T predictive atoms
  (L = T)
* ``bbmc``: Bayesian bootstrap, flat Dirichlet weights on the n data points
  (L = n)
* ``empirical``: one measure, the empirical distribution itself (N = 1)

Sample i is drawn from ``stream.child(i)``, so an ensemble does not depend on
how the N samples are scheduled across workers.
"""
from __future__ import annotations

import json
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .losses import Dataset, InputError
from .sampling import (
    ParameterError,
    RngStream,
    as_generator,
    sample_beta_1_eta,
    sample_dirichlet_symmetric,
    sample_gamma,
    sample_mvn_compound_symmetry,
)

CACHE_FORMAT = "dpdro-ensemble/1"


class CenteringKind(str, Enum):
    STANDARD_NORMAL = "standard_normal"
    COMPOUND_SYMMETRY = "compound_symmetry"
    BINARY_NORMAL = "binary_normal"
    POINT_MASSES = "point_masses"
    EMPIRICAL = "empirical"
    L1_VARIANCE = "l1_variance"


@dataclass(frozen=True)
class CenteringSpec:
    """Named centering measure p0.

    ``standard_normal``: response and every feature iid N(0, 1); for location
    data the response is N(loc, 1).
    ``compound_symmetry``: features as ``sample_mvn_compound_symmetry(rho)``,
    response N(0, 1).
    ``binary_normal``: fair +-1 label, features N(0, I).
    ``point_masses``: uniform over the rows of ``points``.
    ``empirical``: p0 is the empirical distribution of the data.
    ``l1_variance``: the theta-dependent Gaussian under which the squared
    loss has prior risk 1 + ||theta||_1; analytic only, cannot be sampled.
    """

    kind: CenteringKind = CenteringKind.STANDARD_NORMAL
    loc: float = 0.0
    rho: float = 0.0
    points: Dataset | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", CenteringKind(self.kind))
        if self.kind is CenteringKind.POINT_MASSES and (self.points is None or len(self.points) == 0):
            raise InputError("point_masses centering needs a nonempty point list")
        if not 0 <= self.rho < 1:
            raise ParameterError(f"rho must lie in [0, 1), got {self.rho}")

    def describe(self) -> dict:
        out = {"kind": self.kind.value}
        if self.loc:
            out["loc"] = self.loc
        if self.rho:
            out["rho"] = self.rho
        return out


@dataclass(frozen=True)
class DpPrior:
    alpha: float
    centering: CenteringSpec = CenteringSpec()

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ParameterError(f"alpha must be nonnegative, got {self.alpha}")


def sample_centering(spec: CenteringSpec, data: Dataset, size: int, rng) -> Dataset:
    """``size`` iid draws from p0, shaped like ``data``."""
    g = as_generator(rng)
    has_x = data.X is not None
    d = data.X.shape[1] if has_x else 0
    kind = spec.kind
    if kind is CenteringKind.STANDARD_NORMAL:
        y = spec.loc + g.standard_normal(size)
        X = g.standard_normal((size, d)) if has_x else None
    elif kind is CenteringKind.COMPOUND_SYMMETRY:
        y = g.standard_normal(size)
        X = sample_mvn_compound_symmetry(g, d, spec.rho, size) if has_x else None
    elif kind is CenteringKind.BINARY_NORMAL:
        y = np.where(g.random(size) < 0.5, 1.0, -1.0)
        X = g.standard_normal((size, d)) if has_x else None
    elif kind is CenteringKind.POINT_MASSES:
        return spec.points.subset(g.integers(len(spec.points), size=size))
    elif kind is CenteringKind.EMPIRICAL:
        if len(data) == 0:
            raise InputError("empirical centering with no data")
        return data.subset(g.integers(len(data), size=size))
    else:
        raise InputError(f"centering {kind.value} has no sampler (analytic rule only)")
    return Dataset(X, y)


def _predictive(prior: DpPrior, data: Dataset, size: int, g: np.random.Generator) -> Dataset:
    n = len(data)
    if n == 0 and prior.alpha == 0:
        raise InputError("predictive undefined: no data and alpha = 0")
    p_prior = prior.alpha / (prior.alpha + n)
    from_prior = g.random(size) < p_prior
    idx = g.integers(n, size=size) if n else np.zeros(size, dtype=int)
    k = int(from_prior.sum())
    fresh = sample_centering(prior.centering, data, k, g) if k else None
    y = np.empty(size)
    X = None if data.X is None else np.empty((size, data.X.shape[1]))
    keep = ~from_prior
    if n:
        y[keep] = data.y[idx[keep]]
        if X is not None:
            X[keep] = data.X[idx[keep]]
    if k:
        y[from_prior] = fresh.y
        if X is not None:
            X[from_prior] = fresh.X
    return Dataset(X, y)


def predictive_draw(prior: DpPrior, data: Dataset, rng):
    """One draw from alpha/(alpha+n) p0 + n/(alpha+n) empirical."""
    return _predictive(prior, data, 1, as_generator(rng))[0]


@dataclass(frozen=True)
class WeightedSample:
    weights: np.ndarray
    atoms: Dataset


@dataclass(frozen=True)
class EnsembleMeta:
    scheme: str
    alpha: float
    n: int
    T: int
    N: int
    seed: int
    substream: int = 0


@dataclass(frozen=True)
class WeightedEnsemble:
    """N weighted discrete measures stored column-wise.

    ``weights`` (N, L); ``atoms_y`` (N, L); ``atoms_X`` (N, L, d) or None.
    """

    weights: np.ndarray
    atoms_y: np.ndarray
    atoms_X: np.ndarray | None
    meta: EnsembleMeta

    @property
    def N(self) -> int:
        return self.weights.shape[0]

    @property
    def L(self) -> int:
        return self.weights.shape[1]

    def __len__(self):
        return self.N

    def sample(self, i: int) -> WeightedSample:
        X = None if self.atoms_X is None else self.atoms_X[i]
        return WeightedSample(self.weights[i], Dataset(X, self.atoms_y[i]))

    @property
    def samples(self) -> list[WeightedSample]:
        return [self.sample(i) for i in range(self.N)]

    def subset(self, idx) -> "WeightedEnsemble":
        idx = np.atleast_1d(idx)
        X = None if self.atoms_X is None else self.atoms_X[idx]
        return WeightedEnsemble(self.weights[idx], self.atoms_y[idx], X, self.meta)


def _assemble(parts, meta: EnsembleMeta) -> WeightedEnsemble:
    weights = np.stack([w for w, _ in parts])
    atoms_y = np.stack([a.y for _, a in parts])
    atoms_X = None if parts[0][1].X is None else np.stack([a.X for _, a in parts])
    return WeightedEnsemble(weights, atoms_y, atoms_X, meta)


def _run(fn, N: int, workers: int):
    if workers <= 1:
        return [fn(i) for i in range(N)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(N)))


def _check_sizes(N, T):
    if N < 1 or T < 1:
        raise ParameterError(f"N and T must be positive, got N={N}, T={T}")


def stick_weights(g, eta: float, T: int) -> np.ndarray:
    """T stick-breaking weights from Beta(1, eta) sticks plus the leftover mass in slot 0."""
    b = sample_beta_1_eta(g, eta, T)
    left = np.concatenate([[1.0], np.cumprod(1.0 - b)])
    w = np.empty(T + 1)
    w[1:] = b * left[:-1]
    w[0] = left[-1]
    return w


def sbmc_ensemble(prior: DpPrior, data: Dataset, N: int, T: int, stream: RngStream, workers: int = 1):
    _check_sizes(N, T)
    eta = prior.alpha + len(data)

    def one(i):
        g = stream.child(i).generator()
        w = stick_weights(g, eta, T)
        return w, _predictive(prior, data, T + 1, g)

    meta = EnsembleMeta("sbmc", prior.alpha, len(data), T, N, stream.seed, stream.substream_id)
    return _assemble(_run(one, N, workers), meta)


def mdmc_ensemble(prior: DpPrior, data: Dataset, N: int, T: int, stream: RngStream, workers: int = 1):
    _check_sizes(N, T)
    conc = (prior.alpha + len(data)) / T

    def one(i):
        g = stream.child(i).generator()
        w = sample_dirichlet_symmetric(g, T, conc)
        return w, _predictive(prior, data, T, g)

    meta = EnsembleMeta("mdmc", prior.alpha, len(data), T, N, stream.seed, stream.substream_id)
    return _assemble(_run(one, N, workers), meta)


def bbmc_ensemble(data: Dataset, N: int, stream: RngStream, workers: int = 1):
    n = len(data)
    if n < 1:
        raise InputError("Bayesian bootstrap needs at least one observation")
    _check_sizes(N, 1)

    def one(i):
        g = stream.child(i).generator()
        w = sample_gamma(g, 1.0, n)
        return w / w.sum(), data

    meta = EnsembleMeta("bbmc", 0.0, n, n, N, stream.seed, stream.substream_id)
    return _assemble(_run(one, N, workers), meta)


def empirical_ensemble(data: Dataset) -> WeightedEnsemble:
    """The empirical measure as a single-sample ensemble with weights 1/n."""
    n = len(data)
    if n < 1:
        raise InputError("empirical measure of an empty dataset")
    meta = EnsembleMeta("empirical", 0.0, n, n, 1, 0)
    return _assemble([(np.full(n, 1.0 / n), data)], meta)


SCHEMES = ("sbmc", "mdmc", "bbmc", "empirical")


def build_ensemble(scheme: str, prior: DpPrior, data: Dataset, N: int, T: int, stream: RngStream, workers: int = 1):
    scheme = scheme.lower()
    if scheme == "sbmc":
        return sbmc_ensemble(prior, data, N, T, stream, workers)
    if scheme == "mdmc":
        return mdmc_ensemble(prior, data, N, T, stream, workers)
    if scheme == "bbmc":
        return bbmc_ensemble(data, N, stream, workers)
    if scheme == "empirical":
        return empirical_ensemble(data)
    raise ParameterError(f"unknown approximation scheme {scheme!r}; expected one of {SCHEMES}")


def save_ensemble(ens: WeightedEnsemble, path) -> Path:
    """Write the ensemble cache: an ``.npz`` archive with a JSON ``header``
    (format, scheme, alpha, n, T, N, seed, substream) and the arrays
    ``weights`` (N, L), ``atoms_y`` (N, L) and, for feature data,
    ``atoms_X`` (N, L, d)."""
    path = Path(path)
    m = ens.meta
    header = {
        "format": CACHE_FORMAT,
        "scheme": m.scheme,
        "alpha": m.alpha,
        "n": m.n,
        "T": m.T,
        "N": m.N,
        "seed": m.seed,
        "substream": m.substream,
    }
    arrays = {"header": np.array(json.dumps(header, sort_keys=True)), "weights": ens.weights, "atoms_y": ens.atoms_y}
    if ens.atoms_X is not None:
        arrays["atoms_X"] = ens.atoms_X
    # Fixed member timestamps keep the file byte-identical across runs.
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w") as fh:
                np.lib.format.write_array(fh, np.asarray(arr), allow_pickle=False)
    return path


def load_ensemble(path) -> WeightedEnsemble:
    with np.load(Path(path), allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        if header.get("format") != CACHE_FORMAT:
            raise InputError(f"{path}: not an ensemble cache (format {header.get('format')!r})")
        X = z["atoms_X"] if "atoms_X" in z.files else None
        meta = EnsembleMeta(
            header["scheme"], header["alpha"], header["n"], header["T"], header["N"],
            header["seed"], header.get("substream", 0),
        )
        return WeightedEnsemble(z["weights"], z["atoms_y"], X, meta)
