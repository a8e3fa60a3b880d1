"""Dirichlet-process distributionally robust optimization with smooth ambiguity aversion."""
from .ambiguity import ExponentialPhi, IdentityPhi, make_phi
from .criterion import CriterionContext, NeutralCriterion, neutral_value, ridge_lambda, robust_grad, robust_value
from .ensemble import (
    CenteringSpec,
    DpPrior,
    WeightedEnsemble,
    bbmc_ensemble,
    build_ensemble,
    empirical_ensemble,
    mdmc_ensemble,
    sbmc_ensemble,
)
from .losses import Dataset, LossKind, LossSpec, Observation
from .optimizer import SgdConfig, full_gradient_descent, minibatch_sgd, sgd_minimize
from .sampling import RngStream, derive_stream

__version__ = "0.1.0"
