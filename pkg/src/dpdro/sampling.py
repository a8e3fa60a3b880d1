"""Seeded random-variate generation.

Every random quantity in the package is drawn from an :class:`RngStream`, a
value-like handle naming a (seed, substream) pair. Streams are turned into
NumPy generators backed by the counter-based Philox bit generator, so the
same stream yields the same variates on every platform and under any thread
schedule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1


class ParameterError(ValueError):
    """Raised for distribution parameters outside their domain."""


@dataclass(frozen=True)
class RngStream:
    seed: int
    substream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for v in (self.seed, self.substream_id, *self.path):
            if not 0 <= int(v) <= _MASK64:
                raise ParameterError(f"stream keys must be 64-bit unsigned, got {v}")

    def child(self, *keys: int) -> "RngStream":
        """Nested stream, independent of the parent and of its siblings."""
        return RngStream(self.seed, self.substream_id, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        # The path length is mixed in so that (s, i) and (s, i, 0) differ.
        entropy = [self.seed, self.substream_id, len(self.path), *self.path]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_stream(seed: int, substream_id: int) -> RngStream:
    return RngStream(int(seed), int(substream_id))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream (fresh generator, value semantics) or a live Generator."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def sample_beta_1_eta(rng, eta: float, size=None):
    """Beta(1, eta) by inversion: 1 - (1 - U)**(1/eta)."""
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    g = as_generator(rng)
    u = g.random(size)
    return -np.expm1(np.log1p(-u) / eta)


def sample_gamma(rng, shape: float, size=None):
    """Unit-scale Gamma(shape, 1); valid for shape < 1."""
    if not shape > 0:
        raise ParameterError(f"gamma shape must be positive, got {shape}")
    return as_generator(rng).standard_gamma(shape, size)


def sample_dirichlet_symmetric(rng, T: int, conc: float) -> np.ndarray:
    """Symmetric Dirichlet with every component parameter equal to ``conc``.

    Built from normalized Gamma(conc, 1) draws. At very small ``conc`` all T
    draws can underflow to zero; the draw is repeated once before giving up.
    """
    if T < 1:
        raise ParameterError(f"T must be at least 1, got {T}")
    g = as_generator(rng)
    for _ in range(2):
        w = sample_gamma(g, conc, T)
        s = w.sum()
        if s > 0:
            return w / s
    raise FloatingPointError(f"all {T} gamma draws underflowed at shape {conc}")


def sample_mvn_compound_symmetry(rng, d: int, rho: float, size=None) -> np.ndarray:
    """Zero-mean normals with unit variances and pairwise covariance ``rho``.

    Shared-factor construction x_j = sqrt(rho) z_0 + sqrt(1 - rho) z_j.
    ``size`` prepends leading dimensions, so ``size=n`` gives an (n, d) array.
    """
    if not 0 <= rho < 1:
        raise ParameterError(f"rho must lie in [0, 1), got {rho}")
    if d < 1:
        raise ParameterError(f"d must be at least 1, got {d}")
    g = as_generator(rng)
    lead = () if size is None else tuple(np.atleast_1d(size))
    z0 = g.standard_normal(lead + (1,))
    z = g.standard_normal(lead + (d,))
    return np.sqrt(rho) * z0 + np.sqrt(1.0 - rho) * z
