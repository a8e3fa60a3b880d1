"""Outlier simulation at desk scale: the robust estimate of a zero mean is
pulled less by the outliers than the sample mean.

Run: python demos/03_simulation.py   (about a minute)
"""
from dpdro.experiments.protocols import figure_rows, get_preset, run_simulation
from dpdro.sampling import RngStream

reports = run_simulation(get_preset("gauss-outlier"), RngStream(3))
for row in figure_rows(reports):
    if row["metric"] == "coef_l2_norm":
        print(f"{row['method']:<22} |theta| mean {row['mean']:.3f}  std {row['std']:.3f}")
