import numpy as np
import pytest

from dpdro.ensemble import (CenteringSpec, DpPrior, bbmc_ensemble, build_ensemble, empirical_ensemble,
                            load_ensemble, mdmc_ensemble, predictive_draw, save_ensemble, sbmc_ensemble,
                            sample_centering, stick_weights)
from dpdro.losses import Dataset, InputError
from dpdro.sampling import ParameterError, RngStream
from conftest import location_data, regression_data, se_bound

MARK = 1e6  # sentinel centering far from the data


def _on_simplex(ens, tol=1e-10):
    return np.all(ens.weights >= 0) and np.max(np.abs(ens.weights.sum(axis=1) - 1)) <= tol


def test_predictive_draw_cases():
    data = Dataset(None, np.arange(5.0))
    prior0 = DpPrior(0.0, CenteringSpec("standard_normal", loc=MARK))
    g = RngStream(0).generator()
    assert all(predictive_draw(prior0, data, g).response in data.y for _ in range(200))
    empty = Dataset(None, np.zeros(0))
    prior = DpPrior(2.0, CenteringSpec("standard_normal", loc=MARK))
    assert all(predictive_draw(prior, empty, g).response > MARK - 10 for _ in range(200))
    with pytest.raises(InputError):
        predictive_draw(prior0, empty, g)


def test_predictive_mixture_weight():
    data = Dataset(None, np.arange(5.0))
    prior = DpPrior(5.0, CenteringSpec("standard_normal", loc=MARK))
    g = RngStream(1).generator()
    hits = np.array([predictive_draw(prior, data, g).response > MARK / 2 for _ in range(100_000)], dtype=float)
    assert se_bound(hits, 0.5)


def test_sbmc_structure():
    data = regression_data()
    ens = sbmc_ensemble(DpPrior(1.0), data, 20, 1, RngStream(2))
    assert ens.weights.shape == (20, 2) and ens.atoms_X.shape == (20, 2, 3)
    assert np.all(ens.weights.sum(axis=1) == 1.0)
    ens = sbmc_ensemble(DpPrior(1.0), data, 30, 7, RngStream(2))
    assert ens.L == 8 and _on_simplex(ens)


def test_sbmc_remainder_mean():
    g = RngStream(3).generator()
    rem = np.array([stick_weights(g, 100.0, 50)[0] for _ in range(10_000)])
    assert se_bound(rem, (100 / 101) ** 50)


def test_sbmc_remainder_geometric_slope():
    g = RngStream(4).generator()
    Ts = np.array([10, 25, 50, 100])
    means = [np.mean([stick_weights(g, 20.0, T)[0] for _ in range(20_000)]) for T in Ts]
    slope = np.polyfit(Ts, np.log(means), 1)[0]
    assert slope == pytest.approx(np.log(20 / 21), rel=0.05)


def test_mdmc_structure_and_mean():
    data = location_data(100)
    ens = mdmc_ensemble(DpPrior(0.0), data, 1, 1, RngStream(5))
    assert ens.weights.tolist() == [[1.0]]
    ens = mdmc_ensemble(DpPrior(0.0), data, 10_000, 50, RngStream(6))
    assert _on_simplex(ens) and se_bound(ens.weights[:, 0], 0.02)
    assert set(np.unique(ens.atoms_y)) <= set(data.y)


def test_mdmc_more_balanced_than_sbmc():
    data = location_data(100)
    m = mdmc_ensemble(DpPrior(0.0), data, 2000, 50, RngStream(7)).weights.max(axis=1).mean()
    s = sbmc_ensemble(DpPrior(0.0), data, 2000, 50, RngStream(7)).weights.max(axis=1).mean()
    assert m < s


def test_bbmc():
    one = Dataset(None, [3.0])
    assert bbmc_ensemble(one, 4, RngStream(0)).weights.tolist() == [[1.0]] * 4
    data = location_data(100)
    ens = bbmc_ensemble(data, 10_000, RngStream(8))
    assert _on_simplex(ens) and se_bound(ens.weights[:, 5], 0.01)
    assert np.array_equal(ens.atoms_y[123], data.y)
    with pytest.raises(InputError):
        bbmc_ensemble(Dataset(None, np.zeros(0)), 3, RngStream(0))


def test_empirical_ensemble():
    data = regression_data(n=4)
    ens = empirical_ensemble(data)
    assert ens.N == 1 and np.array_equal(ens.weights, [[0.25] * 4])


@pytest.mark.parametrize("scheme", ["sbmc", "mdmc", "bbmc"])
def test_parallel_determinism(scheme):
    data = regression_data()
    a = build_ensemble(scheme, DpPrior(2.0), data, 40, 6, RngStream(9), workers=1)
    b = build_ensemble(scheme, DpPrior(2.0), data, 40, 6, RngStream(9), workers=8)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.atoms_X, b.atoms_X)


def test_bad_sizes_and_scheme():
    with pytest.raises(ParameterError):
        mdmc_ensemble(DpPrior(1.0), location_data(), 0, 5, RngStream(0))
    with pytest.raises(ParameterError):
        build_ensemble("nope", DpPrior(1.0), location_data(), 2, 2, RngStream(0))
    with pytest.raises(ParameterError):
        DpPrior(-1.0)


def test_centering_samplers():
    data = regression_data(d=4)
    g = RngStream(10).generator()
    b = sample_centering(CenteringSpec("binary_normal"), data, 1000, g)
    assert set(np.unique(b.y)) == {-1.0, 1.0} and b.X.shape == (1000, 4)
    cs = sample_centering(CenteringSpec("compound_symmetry", rho=0.5), data, 20_000, g)
    assert abs(np.corrcoef(cs.X.T)[0, 1] - 0.5) < 0.03
    pts = Dataset(None, [7.0, 8.0])
    assert set(sample_centering(CenteringSpec("point_masses", points=pts), data, 50, g).y) <= {7.0, 8.0}
    with pytest.raises(InputError):
        sample_centering(CenteringSpec("l1_variance"), data, 5, g)


def test_cache_roundtrip_is_byte_stable(tmp_path):
    ens = sbmc_ensemble(DpPrior(1.5), regression_data(), 5, 4, RngStream(11))
    p1, p2 = save_ensemble(ens, tmp_path / "a.npz"), save_ensemble(ens, tmp_path / "b.npz")
    assert p1.read_bytes() == p2.read_bytes()
    back = load_ensemble(p1)
    assert np.array_equal(back.weights, ens.weights) and np.array_equal(back.atoms_X, ens.atoms_X)
    assert back.meta == ens.meta
    loc = mdmc_ensemble(DpPrior(1.0), location_data(), 3, 2, RngStream(1))
    assert load_ensemble(save_ensemble(loc, tmp_path / "c.npz")).atoms_X is None
