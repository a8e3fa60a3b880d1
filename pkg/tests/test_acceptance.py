"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary.
"""
import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from dpdro import (CriterionContext, DpPrior, LossSpec, NeutralCriterion, RngStream, SgdConfig, build_ensemble,
                   full_gradient_descent, make_phi, minibatch_sgd, neutral_value, robust_grad, sbmc_ensemble)
from dpdro.cli import run
from dpdro.ensemble import CenteringSpec
from dpdro.experiments.baselines import ridge_oracle
from dpdro.experiments.datasets import REGISTRY, DataError, write_csv
from dpdro.experiments.preprocessing import standardize
from dpdro.experiments.protocols import PLAIN, get_preset, ordering_holds, run_real_data, run_simulation, within_factor
from dpdro.losses import Dataset
from dpdro.optimizer import step_sizes, suboptimality_bound
from conftest import ACCEPTANCE_LINES, location_data, regression_data
from helpers_ctx import KINDS, random_context, theta_for

PKG = Path(__file__).resolve().parents[1]


def record(k, ok, detail):
    line = f"CRITERION {k} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_ridge_equivalence():
    t0 = time.perf_counter()
    data, _ = standardize(regression_data(20, 5, seed=11))
    errs = {}
    for alpha in (1.0, 5.0):
        nc = NeutralCriterion(data, DpPrior(alpha), LossSpec("squared"))
        tr = full_gradient_descent(nc, SgdConfig(0.25, 1.0, 20_000, np.zeros(5)))
        errs[alpha] = float(np.max(np.abs(tr.final_theta - ridge_oracle(data, alpha / 20))))
    dt = time.perf_counter() - t0
    ok = max(errs.values()) < 1e-4 and dt < 5
    record(1, ok, f"max coordinate gap {errs} (< 1e-4), {dt:.2f}s (< 5s)")


def test_criterion_2_lasso_identity():
    t0 = time.perf_counter()
    data, _ = standardize(regression_data(25, 4, seed=12))
    n, g, worst = len(data), np.random.default_rng(12), 0.0
    for k in range(200):
        alpha = float(g.uniform(0.1, 50))
        theta = g.normal(scale=2.0, size=4)
        v = neutral_value(data, DpPrior(alpha, CenteringSpec("l1_variance")), LossSpec("squared"), theta)
        emp = np.mean((data.y - data.X @ theta) ** 2)
        target = n / (alpha + n) * emp + alpha / (alpha + n) * (1 + np.abs(theta).sum())
        worst = max(worst, abs(v - target) / max(1.0, abs(target)))
    dt = time.perf_counter() - t0
    record(2, worst <= 1e-12 and dt < 1, f"worst relative gap {worst:.2e} over 200 draws (<= 1e-12), {dt:.2f}s (< 1s)")


def test_criterion_3_sbmc_remainder():
    t0 = time.perf_counter()
    details, ok = [], True
    for alpha, n, T in ((0.0, 100, 50), (5.0, 100, 25)):
        data = Dataset(None, np.random.default_rng(n).normal(size=n))
        ens = sbmc_ensemble(DpPrior(alpha), data, 10_000, T, RngStream(3, int(alpha)))
        rem = ens.weights[:, 0]
        target = ((alpha + n) / (alpha + n + 1)) ** T
        se = rem.std(ddof=1) / np.sqrt(rem.size)
        z = abs(rem.mean() - target) / se
        ok &= z <= 3
        details.append(f"(a={alpha:g},n={n},T={T}) mean {rem.mean():.5f} vs {target:.5f}, {z:.2f} se")
    dt = time.perf_counter() - t0
    record(3, ok and dt < 10, "; ".join(details) + f"; {dt:.2f}s (< 10s)")


def _central_diff(ctx, theta, h=1e-6):
    g = np.zeros_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (ctx.value(theta + e) - ctx.value(theta - e)) / (2 * h)
    return g


def test_criterion_4_gradient_exactness():
    t0 = time.perf_counter()
    configs = [(k, s, b) for k in KINDS for s in ("sbmc", "mdmc") for b in (1.0, 10.0, np.inf)]
    worst, count = 0.0, 0
    g = np.random.default_rng(4)
    for i in range(100):
        kind, scheme, beta = configs[i % len(configs)]
        ctx = random_context(kind, scheme, beta, seed=400 + i)
        theta = theta_for(ctx, g)
        an, fd = robust_grad(ctx, theta), _central_diff(ctx, theta)
        worst = max(worst, np.linalg.norm(an - fd) / max(np.linalg.norm(fd), 1e-8))
        count += 1
    dt = time.perf_counter() - t0
    record(4, worst < 1e-5 and dt < 30, f"worst relative error {worst:.2e} over {count} configurations "
                                        f"(< 1e-5), {dt:.2f}s (< 30s)")


def test_criterion_5_unbiased_directions():
    t0 = time.perf_counter()
    g = np.random.default_rng(5)
    worst = 0.0
    for i in range(20):
        kind = KINDS[i % 3]
        ctx = random_context(kind, ("sbmc", "mdmc", "bbmc")[i % 3], (1.0, 5.0, np.inf)[i % 3], seed=500 + i)
        theta = theta_for(ctx, g)
        full = robust_grad(ctx, theta)
        per_sample = np.mean([ctx.sample_direction(j, theta) for j in range(ctx.N)], axis=0)
        per_term = ctx.term_directions(theta).mean(axis=0)
        scale = max(1.0, np.linalg.norm(full))
        worst = max(worst, np.max(np.abs(per_sample - full)) / scale, np.max(np.abs(per_term - full)) / scale)
    dt = time.perf_counter() - t0
    record(5, worst <= 1e-12 and dt < 5, f"max gap {worst:.2e} on 20 contexts (<= 1e-12), {dt:.2f}s (< 5s)")


def test_criterion_6_sgd_bound():
    t0 = time.perf_counter()
    data = location_data(8, seed=6)
    ens = build_ensemble("mdmc", DpPrior(2.0), data, 10, 10, RngStream(6))
    ctx = CriterionContext(ens, LossSpec("location"), make_phi(np.inf))
    # beta = inf: V is a weighted mean of squared deviations, minimized by the weighted atom mean
    w = ens.weights / ens.N
    theta_star = np.array([np.sum(w * ens.atoms_y)])
    cfg = SgdConfig(0.05, 1.0, 100, np.array([3.0]), seed=6, record_trace=True)
    tr = minibatch_sgd(ctx, cfg)
    steps = tr.steps
    sigma_sq = max(float(np.mean(np.sum(ctx.term_directions(th) ** 2, axis=1))) for th in tr.iterates)
    bound = suboptimality_bound(float(np.sum((cfg.theta0 - theta_star) ** 2)), sigma_sq,
                                step_sizes(cfg.schedule, steps))
    gap = ctx.value(tr.averaged_theta) - ctx.value(theta_star)
    dt = time.perf_counter() - t0
    record(6, steps == 10_000 and 0 <= gap < bound and dt < 30,
           f"suboptimality {gap:.4f} < bound {bound:.4f} after {steps} steps, {dt:.2f}s (< 30s)")


def test_criterion_7_pointwise_convergence():
    t0 = time.perf_counter()
    theta, beta, mu = np.array([0.5]), 5.0, 0.0
    phi = make_phi(beta)
    ref_draws = RngStream(7).generator().normal(mu, 1.0, size=1_000_000)
    reference = float(phi.value(np.mean((ref_draws - theta[0]) ** 2)))
    prior = DpPrior(50.0, CenteringSpec("standard_normal", loc=5.0))
    decreasing, table = 0, []
    for seed in range(5):
        s = RngStream(100 + seed)
        errs = []
        for k, n in enumerate((50, 200, 800, 3200)):
            data = Dataset(None, s.child(k, 0).generator().normal(mu, 1.0, size=n))
            ens = build_ensemble("mdmc", prior, data, 200, n, s.child(k, 1))
            errs.append(abs(CriterionContext(ens, LossSpec("location"), phi).value(theta) - reference))
        decreasing += bool(np.all(np.diff(errs) < 0))
        table.append("/".join(f"{e:.3g}" for e in errs))
    dt = time.perf_counter() - t0
    record(7, decreasing >= 4 and dt < 120,
           f"errors decrease in {decreasing}/5 seeds (>= 4) [{'; '.join(table)}], {dt:.1f}s (< 120s)")


def _robust_labels(reports):
    return [k for k in reports if k.startswith("robust[")]


@pytest.mark.parametrize("name", ["linreg", "gauss-outlier", "logit"])
def test_criterion_8_simulation_orderings(name):
    t0 = time.perf_counter()
    reports = run_simulation(get_preset(name), RngStream(8), workers=os.cpu_count() or 1)
    plain = reports[PLAIN]
    parts, ok = [], True
    for label in _robust_labels(reports):
        r = reports[label]
        if name == "linreg":
            good = r.std.test_risk < plain.std.test_risk and r.mean.test_risk <= plain.mean.test_risk
            parts.append(f"{label} rmse {r.mean.test_risk:.3f}+-{r.std.test_risk:.3f}")
        elif name == "gauss-outlier":
            good = r.mean.coef_l2_norm <= plain.mean.coef_l2_norm
            parts.append(f"{label} |theta| {r.mean.coef_l2_norm:.3f}")
        else:
            good = r.std.test_risk < plain.std.test_risk
            parts.append(f"{label} loss std {r.std.test_risk:.2e}")
        ok &= good
    base = {"linreg": f"OLS rmse {plain.mean.test_risk:.3f}+-{plain.std.test_risk:.3f}",
            "gauss-outlier": f"MLE |theta| {plain.mean.coef_l2_norm:.3f}",
            "logit": f"unregularized loss std {plain.std.test_risk:.2e}"}[name]
    dt = time.perf_counter() - t0
    record(8, ok and dt < 600, f"{name}: {base}; " + ", ".join(parts) + f"; {dt:.0f}s (< 600s)")


def _data_dir():
    return Path(os.environ.get("DPDRO_DATA_DIR") or PKG / "data")


@pytest.mark.parametrize("name", ["wine", "pima", "liver"])
def test_criterion_9_real_data(name):
    proto = REGISTRY[name]
    t0 = time.perf_counter()
    try:
        res = run_real_data(proto, _data_dir(), RngStream(9), workers=os.cpu_count() or 1)
    except DataError as exc:
        record(9, False, f"{name}: data unavailable ({exc})")
    table = res.table()
    avg, sd = proto.published_table["DP Robust"]
    dp = table["DP Robust"]
    ok = within_factor(dp["Average"], avg) and within_factor(dp["Standard Deviation"], sd) and ordering_holds(table)
    dt = time.perf_counter() - t0
    record(9, ok and dt < 900,
           f"{name}: DP avg {dp['Average']:.2e} (target {avg}), std {dp['Standard Deviation']:.2e} (target {sd}), "
           f"std order {[round(table[c]['Standard Deviation'], 7) for c in table]}, {dt:.0f}s (< 900s)")


def _cli_inputs(tmp):
    g = np.random.default_rng(10)
    X = g.normal(size=(40, 3))
    write_csv(Dataset(X, X @ np.ones(3) + g.normal(size=40)), tmp / "train.csv")
    X = g.normal(size=(345, 5))
    write_csv(Dataset(X, X @ np.ones(5) + g.normal(size=345)), tmp / "liver.csv")
    common = ["--mc-samples", "6", "--trunc", "5", "--passes", "2", "--loss-scale", "0.001", "--seed", "5"]
    return {
        "fit": ["fit", "--data", str(tmp / "train.csv"), *common],
        "simulate": ["simulate", "--dgp", "linreg", "--replications", "2", "--alpha-grid", "1",
                     "--n-test", "100", "--mc-samples", "6", "--trunc", "5", "--passes", "2", "--seed", "5"],
        "cv": ["cv", "--data", str(tmp / "train.csv"), "--alpha-grid", "1,10", "--folds", "4", *common],
        "replicate": ["replicate", "--dataset", "liver", "--data-dir", str(tmp), "--alpha-grid", "20",
                      "--lambda-grid", "0.01,0.1", "--mc-samples", "6", "--trunc", "5", "--passes", "2",
                      "--seed", "5"],
        "ensemble-cache": ["ensemble-cache", "--data", str(tmp / "train.csv"), *common],
    }


def test_criterion_10_cli_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    cmds = _cli_inputs(tmp_path)
    bad = []
    for name, argv in cmds.items():
        blobs = []
        for rep, workers in enumerate((1, 1, 8)):
            d = tmp_path / f"{name}-{rep}"
            d.mkdir()
            ext = ".npz" if name == "ensemble-cache" else ".json"
            code = run(argv + ["--workers", str(workers), "--out", str(d / f"report{ext}")])
            out = capsys.readouterr().out
            if code != 0:
                bad.append(f"{name} exit {code}")
                continue
            files = sorted(p.name for p in d.iterdir())
            blob = b"".join((d / f).read_bytes() for f in files)
            if name == "ensemble-cache":
                summary = json.loads(out)
                summary.pop("path")
                blob += json.dumps(summary).encode()
            blobs.append((files, blob))
        if len(blobs) == 3 and any(b != blobs[0] for b in blobs[1:]):
            bad.append(f"{name} differs")
    dt = time.perf_counter() - t0
    record(10, not bad and dt < 300,
           (f"{len(cmds)} commands byte-identical at 1 and 8 workers" if not bad else f"mismatch: {bad}")
           + f"; {dt:.1f}s (< 300s)")
