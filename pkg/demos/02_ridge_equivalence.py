"""With beta = inf and a standard normal centering, the criterion is ridge
regression with penalty alpha / n. Check it numerically.

Run: python demos/02_ridge_equivalence.py
"""
import numpy as np

from dpdro import DpPrior, LossSpec, NeutralCriterion, SgdConfig, full_gradient_descent, ridge_lambda
from dpdro.experiments.baselines import ridge_oracle
from dpdro.experiments.dgp import DgpSpec, generate
from dpdro.experiments.preprocessing import standardize
from dpdro.sampling import RngStream

data, _ = standardize(generate(DgpSpec("sparse-linreg", n=20, d=5, s=2), RngStream(1)))
for alpha in (1.0, 5.0, 20.0):
    nc = NeutralCriterion(data, DpPrior(alpha), LossSpec("squared"))
    gd = full_gradient_descent(nc, SgdConfig(0.25, 1.0, 20000, np.zeros(5))).final_theta
    ridge = ridge_oracle(data, ridge_lambda(alpha, len(data)))
    print(f"alpha={alpha:5}: max |gd - ridge| = {np.max(np.abs(gd - ridge)):.1e}   ridge = {np.round(ridge, 3)}")
