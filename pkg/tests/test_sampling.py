import numpy as np
import pytest
from concurrent.futures import ThreadPoolExecutor
from hypothesis import given, settings, strategies as st

from dpdro.sampling import (ParameterError, RngStream, as_generator, derive_stream, sample_beta_1_eta,
                            sample_dirichlet_symmetric, sample_gamma, sample_mvn_compound_symmetry)
from conftest import se_bound


def _uniforms(stream, k=1000):
    return stream.generator().random(k)


def test_same_stream_repeats_bytes():
    a, b = _uniforms(derive_stream(42, 0)), _uniforms(derive_stream(42, 0))
    assert a.tobytes() == b.tobytes()


def test_substreams_differ():
    assert _uniforms(derive_stream(42, 0), 1)[0] != _uniforms(derive_stream(42, 1), 1)[0]


def test_stream_identical_across_threads():
    s = derive_stream(42, 5)
    ref = _uniforms(s)
    with ThreadPoolExecutor(8) as pool:
        outs = list(pool.map(lambda _: _uniforms(s), range(8)))
    assert all(np.array_equal(o, ref) for o in outs)


def test_child_paths_are_distinct():
    s = RngStream(1, 2)
    firsts = {float(_uniforms(x, 1)[0]) for x in (s, s.child(0), s.child(0, 0), s.child(1), s.child(0, 1))}
    assert len(firsts) == 5


def test_rejects_negative_keys():
    with pytest.raises(ParameterError):
        RngStream(-1)
    with pytest.raises(TypeError):
        as_generator(3)


def test_beta_uniform_case():
    x = sample_beta_1_eta(RngStream(1), 1.0, 100_000)
    assert se_bound(x, 0.5)


def test_beta_mean_eta9():
    x = sample_beta_1_eta(RngStream(2), 9.0, 100_000)
    assert se_bound(x, 0.1)


@given(st.floats(0.01, 1e4), st.integers(0, 2**32))
@settings(max_examples=50, deadline=None)
def test_beta_support(eta, seed):
    x = sample_beta_1_eta(RngStream(seed), eta, 200)
    assert np.all((x >= 0) & (x <= 1))


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan])
def test_beta_bad_eta(bad):
    with pytest.raises(ParameterError):
        sample_beta_1_eta(RngStream(0), bad)


def test_gamma_means():
    assert se_bound(sample_gamma(RngStream(3), 1.0, 100_000), 1.0)
    assert se_bound(sample_gamma(RngStream(4), 2.6, 100_000), 2.6)


def test_gamma_small_shape_positive():
    x = sample_gamma(RngStream(5), 0.05, 10_000)
    assert np.all(x > 0) and np.all(np.isfinite(x))


def test_gamma_bad_shape():
    with pytest.raises(ParameterError):
        sample_gamma(RngStream(0), 0.0)


def test_dirichlet_single_atom():
    assert np.array_equal(sample_dirichlet_symmetric(RngStream(0), 1, 0.3), [1.0])


def test_dirichlet_component_mean():
    g = RngStream(6).generator()
    w = np.array([sample_dirichlet_symmetric(g, 50, 2.0) for _ in range(10_000)])
    assert se_bound(w[:, 0], 0.02) and se_bound(w[:, 17], 0.02)


@given(st.integers(1, 200), st.floats(0.01, 50), st.integers(0, 2**32))
@settings(max_examples=60, deadline=None)
def test_dirichlet_on_simplex(T, conc, seed):
    w = sample_dirichlet_symmetric(RngStream(seed), T, conc)
    assert w.shape == (T,) and np.all(w >= 0) and abs(w.sum() - 1) <= 1e-12


def test_dirichlet_underflow_raises():
    class Zero:
        def standard_gamma(self, shape, size):
            return np.zeros(size)

    import dpdro.sampling as sm
    orig = sm.as_generator
    sm.as_generator = lambda r: r
    try:
        with pytest.raises(FloatingPointError):
            sample_dirichlet_symmetric(Zero(), 4, 1e-3)
    finally:
        sm.as_generator = orig


def test_mvn_independent_when_rho_zero():
    x = sample_mvn_compound_symmetry(RngStream(7), 3, 0.0, 100_000)
    assert se_bound(x[:, 0] * x[:, 1], 0.0)


def test_mvn_correlation_and_variance():
    x = sample_mvn_compound_symmetry(RngStream(8), 2, 0.3, 100_000)
    r = np.corrcoef(x.T)[0, 1]
    assert 0.27 <= r <= 0.33
    for j in range(2):
        assert se_bound(x[:, j] ** 2, 1.0)


@pytest.mark.parametrize("rho", [-0.1, 1.0])
def test_mvn_bad_rho(rho):
    with pytest.raises(ParameterError):
        sample_mvn_compound_symmetry(RngStream(0), 2, rho)
