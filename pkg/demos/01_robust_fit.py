"""Fit the ambiguity-averse criterion on a small regression problem and
compare it with least squares on fresh data.

Run: python demos/01_robust_fit.py
"""
import numpy as np

from dpdro import CriterionContext, DpPrior, LossSpec, RngStream, SgdConfig, build_ensemble, make_phi, sgd_minimize
from dpdro.experiments.baselines import ols
from dpdro.experiments.dgp import DgpSpec, generate, generate_test
from dpdro.experiments.metrics import compute_metrics

spec = DgpSpec("sparse-linreg", n=100, d=90, s=5)
stream = RngStream(2024)
train = generate(spec, stream.child(0))
test = generate_test(spec, 2000, stream.child(1))
loss = LossSpec("squared", scale=1e-3)

# posterior ensemble: 100 weighted measures, 50 atoms each
ens = build_ensemble("mdmc", DpPrior(alpha=0.05), train, 100, 50, stream.child(2))
print("ensemble:", ens.N, "members x", ens.L, "atoms")

for beta in (1.0, np.inf):
    ctx = CriterionContext(ens, loss, make_phi(beta))
    tr = sgd_minimize(ctx, SgdConfig(step_a=50.0, step_b=100.0, passes=50, theta0=np.zeros(spec.d)))
    m = compute_metrics(tr.final_theta, test, loss)
    print(f"beta={beta:>4}: test RMSE {m.test_risk:.3f}  |theta|={m.coef_l2_norm:.3f}")

m = compute_metrics(ols(train), test, loss)
print(f"least squares: test RMSE {m.test_risk:.3f}  |theta|={m.coef_l2_norm:.3f}")
