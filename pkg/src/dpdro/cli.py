"""Command-line front end.

    dpdro fit --data train.csv --alpha 1 --beta 1 --out fit.json
    dpdro simulate --dgp linreg --out sim.json
    dpdro cv --data train.csv --alpha-grid 0.5,1,5 --folds 5 --out cv.json
    dpdro replicate --dataset wine --data-dir data --out wine.json
    dpdro ensemble-cache --data train.csv --out ens.npz

Settings come from built-in defaults, then ``--config`` (YAML, sections may
nest), then flags; flags win. Every report echoes the effective configuration
and carries no timestamps, so equal inputs give byte-identical files.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure. On
failure a single line ``dpdro: error=<kind> code=<n> message=<json string>``
goes to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .ambiguity import DomainError, NumericError, beta_label, make_phi
from .criterion import ConfigurationError, CriterionContext
from .ensemble import SCHEMES, CenteringKind, CenteringSpec, DpPrior, build_ensemble, load_ensemble, save_ensemble
from .experiments.cv import cv_alpha
from .experiments.datasets import DataError, load_csv
from .experiments.methods import RobustSettings
from .experiments.metrics import compute_metrics
from .experiments.protocols import (DEFAULT_LAMBDAS, PRESETS, figure_rows, get_preset, get_protocol,
                                    default_alpha_grid, protocol_split, real_data_settings, run_real_data,
                                    run_simulation, table_csv)
from .losses import InputError, LossKind, LossSpec, ShapeError, param_dim
from .optimizer import SgdConfig, export_trace, sgd_minimize
from .sampling import ParameterError, RngStream

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4
DATA_ENV = "DPDRO_DATA_DIR"
TASK_LOSS = {"regression": LossKind.SQUARED, "classification": LossKind.LOGISTIC, "location": LossKind.LOCATION}

DEFAULTS = {
    "alpha": 1.0, "beta": 1.0, "approx": "mdmc", "mc_samples": 100, "trunc": 50, "passes": 50,
    "step_a": 50.0, "step_b": 100.0, "seed": 0, "workers": 1, "paper_scale": False,
    "loss_scale": 1.0, "task": "regression", "centering": "standard_normal", "centering_loc": 0.0,
    "folds": 5,
}
# per-command keys that are not shared
COMMAND_KEYS = {
    "fit": {"data", "test", "trace", "ensemble"},
    "simulate": {"dgp", "replications", "alpha_grid", "figure", "n_test"},
    "cv": {"data", "dataset", "data_dir", "alpha_grid", "table"},
    "replicate": {"dataset", "data_dir", "alpha_grid", "lambda_grid", "table"},
    "ensemble-cache": {"data"},
}
_MODEL = ("alpha", "beta", "approx", "mc_samples", "trunc", "seed", "task", "centering", "centering_loc")
_SGD = ("passes", "step_a", "step_b", "loss_scale")
# shared keys each command reads; the presets of simulate and replicate are echoed in their reports
RELEVANT = {
    "fit": set(_MODEL + _SGD),
    "simulate": {"seed", "paper_scale"},
    "cv": set(_MODEL + _SGD) | {"folds"},
    "replicate": {"seed"},
    "ensemble-cache": set(_MODEL),
}
# keys that never change results and are left out of the config echo
NOT_ECHOED = {"_explicit", "workers", "out", "config", "command", "trace", "figure", "table", "data_dir"}


class ConfigError(ValueError):
    pass


class _Fail(Exception):
    def __init__(self, kind, code, message):
        super().__init__(message)
        self.kind, self.code = kind, code


# configuration

def _flatten(d, out=None):
    out = {} if out is None else out
    for k, v in d.items():
        if isinstance(v, dict):
            _flatten(v, out)
        else:
            out[str(k).replace("-", "_")] = v
    return out


def _read_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {p} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {p} must hold a mapping")
    return _flatten(raw)


def parse_beta(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        b = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"beta must be positive or 'inf', got {v!r}") from None
    if not b > 0:
        raise ConfigError(f"beta must be positive or 'inf', got {v!r}")
    return b


def _grid(v, name):
    if v is None:
        return None
    items = v if isinstance(v, (list, tuple)) else str(v).split(",")
    try:
        out = tuple(float(x) for x in items)
    except ValueError:
        raise ConfigError(f"{name} must be a comma-separated list of numbers, got {v!r}") from None
    if not out:
        raise ConfigError(f"{name} is empty")
    return out


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _as(cfg, key, typ):
    try:
        cfg[key] = typ(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be {typ.__name__}, got {cfg[key]!r}") from None


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags, then validate ranges before any work."""
    cmd = args.command
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    cfg = dict(DEFAULTS)
    explicit = set(flags)
    allowed = set(DEFAULTS) | COMMAND_KEYS[cmd] | {"out"}
    if args.config:
        fromfile = _read_config(args.config)
        unknown = sorted(set(fromfile) - allowed)
        _require(not unknown, f"unknown config keys for {cmd}: {unknown}")
        cfg.update(fromfile)
        explicit |= set(fromfile)
    if flags.get("paper_scale") is False:
        flags.pop("paper_scale")
    cfg.update(flags)

    cfg["beta"] = parse_beta(cfg["beta"])
    for k in ("alpha", "step_a", "step_b", "loss_scale", "centering_loc"):
        _as(cfg, k, float)
    for k in ("mc_samples", "trunc", "passes", "seed", "workers", "folds"):
        _as(cfg, k, int)
    _require(cfg["alpha"] >= 0 and math.isfinite(cfg["alpha"]), f"alpha must be finite and >= 0, got {cfg['alpha']}")
    _require(cfg["approx"] in SCHEMES, f"approx must be one of {SCHEMES}, got {cfg['approx']!r}")
    for k in ("mc_samples", "trunc", "passes", "workers"):
        _require(cfg[k] >= 1, f"{k} must be >= 1, got {cfg[k]}")
    _require(cfg["folds"] >= 2, f"folds must be >= 2, got {cfg['folds']}")
    _require(0 <= cfg["seed"] < 2**63, f"seed must lie in [0, 2^63), got {cfg['seed']}")
    _require(cfg["step_a"] > 0 and cfg["step_b"] > 0, "step_a and step_b must be positive")
    _require(cfg["loss_scale"] > 0, f"loss_scale must be positive, got {cfg['loss_scale']}")
    _require(cfg["task"] in TASK_LOSS, f"task must be one of {sorted(TASK_LOSS)}, got {cfg['task']!r}")
    kinds = [k.value for k in CenteringKind]
    _require(cfg["centering"] in kinds, f"centering must be one of {kinds}, got {cfg['centering']!r}")
    cfg["paper_scale"] = bool(cfg["paper_scale"])
    for k in ("alpha_grid", "lambda_grid"):
        if k in cfg:
            cfg[k] = _grid(cfg[k], k)
    if "replications" in cfg:
        _as(cfg, "replications", int)
        _require(cfg["replications"] >= 1, "replications must be >= 1")
    if "n_test" in cfg:
        _as(cfg, "n_test", int)
        _require(cfg["n_test"] >= 1, "n_test must be >= 1")
    if cmd in ("fit", "ensemble-cache") or (cmd == "cv" and "dataset" not in cfg):
        _require("data" in cfg, f"{cmd} needs --data")
    if cmd == "ensemble-cache":
        _require(cfg.get("out"), "ensemble-cache needs --out for the cache file")
    if cmd == "cv":
        _require(("data" in cfg) != ("dataset" in cfg), "cv takes exactly one of --data or --dataset")
    if cmd == "simulate":
        _require(cfg.get("dgp") in PRESETS, f"unknown dgp {cfg.get('dgp')!r}; expected one of {sorted(PRESETS)}")
    if cmd in ("replicate", "cv") and "dataset" in cfg:
        try:
            get_protocol(cfg["dataset"])
        except InputError as exc:
            raise ConfigError(str(exc)) from None
    cfg["command"] = cmd
    cfg["_explicit"] = explicit
    return cfg


def echo(cfg: dict) -> dict:
    out = {}
    cmd = cfg["command"]
    keep = RELEVANT[cmd] | COMMAND_KEYS[cmd] | cfg["_explicit"]
    for k in sorted(cfg):
        if k in NOT_ECHOED or k not in keep:
            continue
        v = cfg[k]
        if k == "beta":
            v = beta_label(make_phi(v))
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


# emission

def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _emit(cfg, report):
    text = _dumps(report)
    out = cfg.get("out")
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _sibling(cfg, key, suffix):
    """Explicit path for a side output, else one derived from --out."""
    if cfg.get(key):
        return Path(cfg[key])
    if cfg.get("out"):
        out = Path(cfg["out"])
        return out.with_name(out.stem + suffix)
    return None


def _write_rows(path, rows, header):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(r[h]) if isinstance(r[h], float) else r[h] for h in header])


# data

def _data_dir(cfg) -> Path:
    return Path(cfg.get("data_dir") or os.environ.get(DATA_ENV) or "data")


def _load(path, task):
    try:
        return load_csv(path, task)[0]
    except DataError:
        raise
    except (InputError, ShapeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def _settings(cfg) -> RobustSettings:
    return RobustSettings(alpha=cfg["alpha"], beta=cfg["beta"],
                          centering=CenteringSpec(cfg["centering"], loc=cfg["centering_loc"]),
                          scheme=cfg["approx"], mc_samples=cfg["mc_samples"], trunc=cfg["trunc"],
                          passes=cfg["passes"], step_a=cfg["step_a"], step_b=cfg["step_b"],
                          loss_scale=cfg["loss_scale"], workers=cfg["workers"])


def _ensemble(cfg, data, stream):
    prior = DpPrior(cfg["alpha"], CenteringSpec(cfg["centering"], loc=cfg["centering_loc"]))
    return build_ensemble(cfg["approx"], prior, data, cfg["mc_samples"], cfg["trunc"], stream, cfg["workers"])


# commands

def cmd_fit(cfg) -> dict:
    kind = TASK_LOSS[cfg["task"]]
    data = _load(cfg["data"], cfg["task"])
    test = _load(cfg["test"], cfg["task"]) if cfg.get("test") else None
    loss = LossSpec(kind, cfg["loss_scale"])
    stream = RngStream(cfg["seed"])
    if cfg.get("ensemble"):
        try:
            ens = load_ensemble(cfg["ensemble"])
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot read ensemble cache {cfg['ensemble']}: {exc}") from exc
    else:
        ens = _ensemble(cfg, data, stream.child(0))
    ctx = CriterionContext(ens, loss, make_phi(cfg["beta"]))
    p = param_dim(loss, data)
    if ctx.dim != p:
        raise DataError(f"ensemble dimension {ctx.dim} does not match data dimension {p}")
    trace = sgd_minimize(ctx, SgdConfig(cfg["step_a"], cfg["step_b"], cfg["passes"], np.zeros(p),
                                        int(stream.child(1).generator().integers(2**63))))
    tpath = _sibling(cfg, "trace", ".trace.csv")
    if tpath is not None:
        export_trace(trace, tpath)
    report = {"command": "fit", "config": echo(cfg), "n": len(data), "theta": trace.final_theta.tolist(),
              "trace": trace.to_dict()}
    if test is not None:
        report["metrics"] = compute_metrics(trace.final_theta, test, loss).to_dict()
    return report


def cmd_simulate(cfg) -> dict:
    preset = get_preset(cfg["dgp"]).scaled(cfg["paper_scale"])
    s = preset.settings
    # shared flags given explicitly override the preset
    explicit = cfg["_explicit"]
    over = {f: cfg[k] for k, f in (("beta", "beta"), ("approx", "scheme"), ("mc_samples", "mc_samples"),
                                   ("trunc", "trunc"), ("passes", "passes"), ("step_a", "step_a"),
                                   ("step_b", "step_b")) if k in explicit}
    preset = replace(preset, settings=replace(s, **over))
    if "replications" in cfg:
        preset = replace(preset, replications=cfg["replications"])
    if "n_test" in cfg:
        preset = replace(preset, n_test=cfg["n_test"])
    if "alpha_grid" in cfg:
        preset = replace(preset, alpha_factors=cfg["alpha_grid"], alpha_unit=1.0)
    elif "alpha" in explicit:
        preset = replace(preset, alpha_factors=(cfg["alpha"],), alpha_unit=1.0)
    reports = run_simulation(preset, RngStream(cfg["seed"]), cfg["workers"])
    fpath = _sibling(cfg, "figure", ".figure.csv")
    if fpath is not None:
        _write_rows(fpath, figure_rows(reports), ["method", "metric", "mean", "std"])
    effective = {"dgp": preset.dgp.describe(), "replications": preset.replications, "n_test": preset.n_test,
                 "alphas": list(preset.alphas()), "settings": preset.settings.describe()}
    return {"command": "simulate", "config": echo(cfg), "effective": effective,
            "reports": {k: v.to_dict() for k, v in reports.items()}}


def cmd_cv(cfg) -> dict:
    stream = RngStream(cfg["seed"])
    settings = _settings(cfg)
    if "dataset" in cfg:
        protocol = get_protocol(cfg["dataset"])
        train, _ = protocol_split(protocol, _data_dir(cfg), stream.child(0))
        kind, folds = protocol.kind, protocol.folds
        base = real_data_settings(protocol)
        explicit = cfg["_explicit"]
        settings = replace(base, **{f: getattr(settings, f) for f in
                                    ("beta", "scheme", "mc_samples", "trunc", "passes", "step_a", "step_b",
                                     "loss_scale") if _flag_for(f) in explicit}, workers=cfg["workers"])
        grid = cfg.get("alpha_grid") or default_alpha_grid(protocol)
        cv_stream = stream.child(1)
    else:
        kind = TASK_LOSS[cfg["task"]]
        train = _load(cfg["data"], cfg["task"])
        folds = cfg["folds"]
        grid = cfg.get("alpha_grid") or (cfg["alpha"],)
        cv_stream = stream
    if folds > len(train):
        raise ConfigError(f"{folds} folds over {len(train)} rows leaves empty folds")
    res = cv_alpha(train, folds, grid, kind, settings, cv_stream, cfg["workers"])
    tpath = _sibling(cfg, "table", ".table.csv")
    if tpath is not None:
        _write_rows(tpath, res.table(), ["value", "risk"])
    return {"command": "cv", "config": echo(cfg), "settings": settings.describe(), "best_alpha": res.best,
            "table": res.table(), "fold_risks": [list(r) for r in res.fold_risks]}


def _flag_for(field):
    return {"scheme": "approx"}.get(field, field)


def cmd_replicate(cfg) -> dict:
    protocol = get_protocol(cfg["dataset"])
    explicit = cfg["_explicit"]
    base = real_data_settings(protocol)
    mine = _settings(cfg)
    settings = replace(base, **{f: getattr(mine, f) for f in
                                ("beta", "scheme", "mc_samples", "trunc", "passes", "step_a", "step_b",
                                 "loss_scale") if _flag_for(f) in explicit}, workers=cfg["workers"])
    res = run_real_data(protocol, _data_dir(cfg), RngStream(cfg["seed"]), settings,
                        cfg.get("alpha_grid"), cfg.get("lambda_grid") or DEFAULT_LAMBDAS, cfg["workers"])
    tpath = _sibling(cfg, "table", ".table.csv")
    if tpath is not None:
        tpath.write_text(table_csv(res.table()))
    out = {"command": "replicate", "config": echo(cfg), "settings": settings.describe(),
           "batches": protocol.folds, "batch_size": protocol.fold_size, "n_train": protocol.n_train}
    out.update(res.to_dict())
    return out


def cmd_ensemble_cache(cfg) -> dict:
    data = _load(cfg["data"], cfg["task"])
    ens = _ensemble(cfg, data, RngStream(cfg["seed"]).child(0))
    save_ensemble(ens, cfg["out"])
    summary = {"command": "ensemble-cache", "config": echo(cfg), "N": ens.N, "L": ens.L, "path": str(cfg["out"])}
    sys.stdout.write(_dumps(summary))
    return None


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "cv": cmd_cv, "replicate": cmd_replicate,
            "ensemble-cache": cmd_ensemble_cache}


# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Fail("config", EXIT_CONFIG, message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("shared settings")
    g.add_argument("--config", help="YAML file of settings; flags override it")
    g.add_argument("--alpha", help="DP concentration")
    g.add_argument("--beta", help="ambiguity aversion, positive or 'inf'")
    g.add_argument("--approx", help=f"posterior approximation: {', '.join(SCHEMES)}")
    g.add_argument("--mc-samples", dest="mc_samples", help="Monte Carlo samples N")
    g.add_argument("--trunc", help="truncation T")
    g.add_argument("--passes", help="SGD passes")
    g.add_argument("--step-a", dest="step_a", help="step size a in a/(b+sqrt(t))")
    g.add_argument("--step-b", dest="step_b", help="step size b in a/(b+sqrt(t))")
    g.add_argument("--seed")
    g.add_argument("--out", help="report path (stdout if omitted)")
    g.add_argument("--paper-scale", dest="paper_scale", action="store_true", default=None,
                   help="full replication counts and Monte Carlo sizes")
    g.add_argument("--workers", help="worker threads for batches, folds and ensemble draws")
    g.add_argument("--loss-scale", dest="loss_scale", help="constant c multiplying the loss")
    g.add_argument("--task", help="regression, classification or location")
    g.add_argument("--centering", help="centering measure p0")
    g.add_argument("--centering-loc", dest="centering_loc", help="mean of a normal p0 for location data")

    p = _Parser(prog="dpdro", description="Distributionally robust learning with Dirichlet process ambiguity.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", parents=[common], help="fit the robust criterion on a CSV")
    f.add_argument("--data")
    f.add_argument("--test", help="held-out CSV for metrics")
    f.add_argument("--trace", help="per-pass trace CSV")
    f.add_argument("--ensemble", help="use a cached ensemble instead of drawing one")

    s = sub.add_parser("simulate", parents=[common], help="run a simulation study")
    s.add_argument("--dgp", help=f"one of {', '.join(sorted(PRESETS))}")
    s.add_argument("--replications")
    s.add_argument("--alpha-grid", dest="alpha_grid", help="absolute alpha values, comma-separated")
    s.add_argument("--n-test", dest="n_test")
    s.add_argument("--figure", help="figure-data CSV")

    c = sub.add_parser("cv", parents=[common], help="cross-validate alpha")
    c.add_argument("--data")
    c.add_argument("--dataset", help="use a real-data protocol's training sample")
    c.add_argument("--data-dir", dest="data_dir")
    c.add_argument("--folds")
    c.add_argument("--alpha-grid", dest="alpha_grid")
    c.add_argument("--table", help="per-alpha risk CSV")

    r = sub.add_parser("replicate", parents=[common], help="real-data batch replication")
    r.add_argument("--dataset", required=True)
    r.add_argument("--data-dir", dest="data_dir", help=f"directory holding the CSVs (default ${DATA_ENV} or ./data)")
    r.add_argument("--alpha-grid", dest="alpha_grid")
    r.add_argument("--lambda-grid", dest="lambda_grid")
    r.add_argument("--table", help="table CSV")

    e = sub.add_parser("ensemble-cache", parents=[common], help="draw and save an ensemble")
    e.add_argument("--data")
    return p


def _diagnostic(kind, code, message) -> str:
    return f"dpdro: error={kind} code={code} message={json.dumps(str(message))}"


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        try:
            cfg = resolve(args)
        except (ConfigError, ConfigurationError, DomainError, ParameterError, InputError) as exc:
            raise _Fail("config", EXIT_CONFIG, exc) from exc
        try:
            report = COMMANDS[cfg["command"]](cfg)
        except (DataError, FileNotFoundError, ShapeError) as exc:
            raise _Fail("data", EXIT_DATA, exc) from exc
        except (NumericError, FloatingPointError, OverflowError) as exc:
            raise _Fail("numeric", EXIT_NUMERIC, exc) from exc
        except (ConfigError, ConfigurationError, DomainError, ParameterError, InputError) as exc:
            raise _Fail("config", EXIT_CONFIG, exc) from exc
        if report is not None:
            _emit(cfg, report)
        return 0
    except _Fail as f:
        sys.stderr.write(_diagnostic(f.kind, f.code, f) + "\n")
        return f.code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
