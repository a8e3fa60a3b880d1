"""Small random criterion contexts shared by the criterion, optimizer and acceptance tests."""
import numpy as np

from dpdro import CriterionContext, DpPrior, LossSpec, RngStream, build_ensemble, make_phi
from dpdro.ensemble import CenteringSpec, EnsembleMeta, WeightedEnsemble
from conftest import location_data, logistic_data, regression_data

KINDS = ("squared", "logistic", "location")
CENTER = {"squared": CenteringSpec("standard_normal"), "logistic": CenteringSpec("binary_normal"),
          "location": CenteringSpec("standard_normal")}


def data_for(kind, seed, n=10, d=3):
    if kind == "squared":
        return regression_data(n, d, seed)
    if kind == "logistic":
        return logistic_data(n, d, seed)
    return location_data(n, seed)


def random_context(kind, scheme, beta, seed, N=6, T=5, scale=0.5):
    data = data_for(kind, seed)
    ens = build_ensemble(scheme, DpPrior(1.5, CENTER[kind]), data, N, T, RngStream(seed, 1))
    return CriterionContext(ens, LossSpec(kind, scale), make_phi(beta))


def manual_ensemble(weights, atoms_y, atoms_X=None):
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    meta = EnsembleMeta("manual", 0.0, w.shape[1], w.shape[1], w.shape[0], 0)
    return WeightedEnsemble(w, np.atleast_2d(np.asarray(atoms_y, dtype=float)), atoms_X, meta)


def theta_for(ctx, g):
    return 0.5 * g.standard_normal(ctx.dim)
