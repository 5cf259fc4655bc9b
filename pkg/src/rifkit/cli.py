"""Command-line front end.

Every subcommand resolves one configuration (built-in defaults, then a JSON
file, then ``RIF_SEED``, then flags), writes its outputs into the output
directory, and drops a ``run.json`` describing the run next to them.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import os
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .attribution import DegenerateLeverageError, aggregate_table, attribute_all, newton_step
from .dataset import Dataset, DatasetError, SyntheticSpec, load, save, standardize, synthesize, write_table
from .evaluation import (SWEEP_METRICS, RecordWriter, build_test_subset, run_sweep, summarize,
                         write_summary, SUMMARY_COLUMNS)
from .glm import FAMILIES, SolverError, ModelSpec, accuracy, fit, model_to_json
from .metrics import EvaluationFn
from .oracle import RetrainCache
from .poison import run_trials, write_trials
from .rng import Stream
from .selection import STRATEGIES, RemovalSet, size_schedule
from . import theory

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULTS = {
    "dataset": None,
    "model": {"family": "logistic", "lam": 1e-5},
    "strategies": list(STRATEGIES),
    "schedule": None,
    "metrics": list(SWEEP_METRICS),
    "seed": 0,
    "output": "rif-out",
    "workers": None,
    "effect": "reeval",
    "test_size": 50,
    "cache": None,
    "format": "csv",
    "trials": 40,
    "theory": {"k": [2, 5, 10], "trials": 200, "functional": "test-loss-sum", "lemma_trials": 0,
               "snr": True},
    "lambdas": [1e-5, 1e-3, 1e-1, 1e1, 1e3],
    "sizes": None,
    "removal_set": None,
    "sidecar": False,
    "standardize": False,
}

# keys that change where or how fast a run goes, not what it computes
_UNHASHED = ("output", "workers", "cache")


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------- config

def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _csv_list(text: str, cast=str) -> list:
    return [cast(t) for t in text.split(",") if t.strip()]


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = _merge(cfg, doc)
    if environ.get("RIF_SEED"):
        try:
            cfg["seed"] = int(environ["RIF_SEED"])
        except ValueError as exc:
            raise ConfigError(f"RIF_SEED must be an integer, got {environ['RIF_SEED']!r}") from exc

    flags = {}
    if args.seed is not None:
        flags["seed"] = args.seed
    if args.out is not None:
        flags["output"] = args.out
    if args.workers is not None:
        flags["workers"] = args.workers
    if args.family is not None or args.lam is not None:
        flags["model"] = {k: v for k, v in (("family", args.family), ("lam", args.lam)) if v is not None}
    if args.data is not None:
        flags["dataset"] = {"path": args.data, "test_path": args.test_data, "split": args.split,
                            "format": args.format or cfg["format"]}
    elif args.n is not None or args.d is not None:
        syn = dict((cfg["dataset"] or {}).get("synthetic", {}))
        for key in ("n", "d"):
            if getattr(args, key) is not None:
                syn[key] = getattr(args, key)
        flags["dataset"] = {"synthetic": syn}
    for key, cast in (("strategies", str), ("metrics", str), ("schedule", int), ("lambdas", float),
                      ("sizes", int)):
        val = getattr(args, key, None)
        if val is not None:
            flags[key] = _csv_list(val, cast)
    for key in ("effect", "test_size", "cache", "trials", "removal_set", "format"):
        val = getattr(args, key, None)
        if val is not None:
            flags[key] = val
    if getattr(args, "sidecar", False):
        flags["sidecar"] = True
    if args.standardize:
        flags["standardize"] = True
    th = {}
    if getattr(args, "k", None) is not None:
        th["k"] = _csv_list(args.k, int)
    if getattr(args, "theory_trials", None) is not None:
        th["trials"] = args.theory_trials
    if getattr(args, "functional", None) is not None:
        th["functional"] = args.functional
    if getattr(args, "lemma_trials", None) is not None:
        th["lemma_trials"] = args.lemma_trials
    if th:
        flags["theory"] = th
    cfg = _merge(cfg, flags)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    ds = cfg["dataset"]
    if not isinstance(ds, dict) or (("path" in ds) == ("synthetic" in ds)):
        raise ConfigError("dataset needs exactly one of 'path' or 'synthetic'")
    model = cfg["model"]
    if model.get("family") not in FAMILIES:
        raise ConfigError(f"model family must be one of {FAMILIES}")
    if not isinstance(model.get("lam"), (int, float)) or not model["lam"] >= 0:
        raise ConfigError("model lam must be a nonnegative number")
    bad = [s for s in cfg["strategies"] if s not in STRATEGIES]
    if bad:
        raise ConfigError(f"unknown strategies: {bad}")
    bad = [m for m in cfg["metrics"] if m not in SWEEP_METRICS]
    if bad:
        raise ConfigError(f"unknown metrics: {bad}")
    if cfg["effect"] not in ("reeval", "linear"):
        raise ConfigError("effect must be 'reeval' or 'linear'")
    if cfg["format"] not in ("csv", "binary"):
        raise ConfigError("format must be 'csv' or 'binary'")
    if cfg["workers"] is not None and int(cfg["workers"]) < 1:
        raise ConfigError("workers must be at least 1")
    if cfg["theory"]["functional"] not in ("self-loss", "test-loss-sum", "test-pred-sum", "single-logit"):
        raise ConfigError("unknown theory functional")
    if any(lam <= 0 for lam in cfg["lambdas"]):
        raise ConfigError("lambda grid must be positive")


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k not in _UNHASHED}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _workers(cfg) -> int:
    return int(cfg["workers"]) if cfg["workers"] else (os.cpu_count() or 1)


def _output_dir(cfg) -> Path:
    out = Path(cfg["output"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


def load_dataset(cfg) -> Dataset:
    data = _load_dataset(cfg)
    return standardize(data) if cfg["standardize"] else data


def _load_dataset(cfg) -> Dataset:
    ds = cfg["dataset"]
    if "synthetic" in ds:
        syn = dict(ds["synthetic"])
        # the generator follows the master seed unless the block pins its own
        syn.setdefault("seed", cfg["seed"])
        try:
            spec = SyntheticSpec(**syn)
        except TypeError as exc:
            raise ConfigError(f"bad synthetic spec: {exc}") from exc
        return synthesize(spec)
    try:
        return load(ds["path"], ds.get("format", cfg["format"]), test_path=ds.get("test_path"),
                    split_manifest=ds.get("split"), signed_labels=bool(ds.get("signed_labels", False)),
                    binary=cfg["model"]["family"] == "logistic")
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from exc


def model_spec(cfg) -> ModelSpec:
    return ModelSpec(cfg["model"]["family"], float(cfg["model"]["lam"]))


def write_metadata(out: Path, command: str, cfg: dict, started: float, extra: Optional[dict] = None):
    meta = {
        "command": command,
        "config_hash": config_hash(cfg),
        "config": cfg,
        "seeds": {"master": cfg["seed"], "from_env": bool(os.environ.get("RIF_SEED"))},
        "versions": {"rifkit": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - started,
    }
    if extra:
        meta.update(extra)
    (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _json(obj) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.generic):
            return clean(v.item())
        return v
    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------- commands

def cmd_synth(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    ext = "csv" if cfg["format"] == "csv" else "bin"
    save(data, out / f"train.{ext}", cfg["format"], test_path=out / f"test.{ext}")
    return {"n": data.n, "d": data.d, "m": data.m, "fingerprint": data.fingerprint()}


def cmd_fit(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    model = fit(data, model_spec(cfg))
    (out / "model.json").write_text(model_to_json(model) + "\n")
    report = {"iterations": model.iterations, "grad_norm": model.grad_norm,
              "train_accuracy": accuracy(model, Dataset(data.features, data.labels, data.features,
                                                        data.labels, data.name, data.binary))
              if model.spec.family == "logistic" else None,
              "test_accuracy": accuracy(model, data) if model.spec.family == "logistic" and data.m else None,
              "n": data.n, "d": data.d, "lam": model.spec.lam, "family": model.spec.family}
    (out / "fit_report.json").write_text(_json(report))
    return report


ATTRIBUTION_COLUMNS = ("index", "leverage", "rescale", "if_norm", "rif_norm")


def cmd_attribute(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    model = fit(data, model_spec(cfg))
    table = attribute_all(model, data)
    if_norm = np.linalg.norm(table.if_vectors, axis=1)
    rif_norm = np.linalg.norm(table.rif_vectors, axis=1)
    with open(out / "attributions.csv", "w") as fh:
        fh.write(",".join(ATTRIBUTION_COLUMNS) + "\n")
        for i in range(data.n):
            vals = (table.leverage[i], table.rescale[i], if_norm[i], rif_norm[i])
            fh.write(",".join([str(i)] + [repr(float(v)) for v in vals]) + "\n")
    if cfg["sidecar"]:
        # sidecars reuse the dataset binary layout with the sample index in the label slot
        idx = np.arange(data.n, dtype=np.float64)
        write_table(out / "if_vectors.bin", idx, table.if_vectors, "binary")
        write_table(out / "rif_vectors.bin", idx, table.rif_vectors, "binary")
    extra = {"max_leverage": float(table.leverage.max()), "n": data.n, "d": data.d}
    if cfg["removal_set"]:
        try:
            rs = RemovalSet.from_json(Path(cfg["removal_set"]).read_text())
            rs.validate(data.n)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"bad removal set: {exc}") from exc
        ns = newton_step(model, data, rs.indices)
        pred = {"indices": list(rs.indices), "strategy": rs.strategy, "seed": rs.seed}
        for meth, p in (("IF", aggregate_table(table, "IF", rs.indices, model, data)),
                        ("RIF", aggregate_table(table, "RIF", rs.indices, model, data)), ("NS", ns)):
            pred[meth] = {"delta_norm": float(np.linalg.norm(p.delta_theta)),
                          "self_loss_change": float(EvaluationFn("self-loss").value(
                              model.theta + p.delta_theta, data, model.spec)
                              - EvaluationFn("self-loss").value(model.theta, data, model.spec))}
        (out / "removal_prediction.json").write_text(_json(pred))
    return extra


def _schedule(cfg, n: int) -> list:
    return list(cfg["schedule"]) if cfg["schedule"] else size_schedule(n)


def _sweep(data, spec, cfg, out: Path, writer, label=None):
    cache = RetrainCache(cfg["cache"]) if cfg["cache"] else None
    model = fit(data, spec)
    if label is not None:
        data = Dataset(data.features, data.labels, data.test_features, data.test_labels,
                       label, data.binary)
    res = run_sweep(data, spec, cfg["strategies"], _schedule(cfg, data.n), cfg["metrics"], cfg["seed"],
                    model=model, cache=cache, test_size=min(cfg["test_size"], data.m),
                    effect=cfg["effect"], workers=_workers(cfg), on_record=writer)
    return res


def _write_params(path: Path, params, setting=None):
    cols = ("strategy", "k", "actual_shift", "err_if", "err_rif", "err_ns")
    mode = "a" if setting is not None and path.exists() else "w"
    with open(path, mode) as fh:
        if mode == "w":
            fh.write(",".join((("setting",) if setting is not None else ()) + cols) + "\n")
        for p in params:
            vals = [getattr(p, c) for c in cols]
            cells = [str(v) if isinstance(v, (int, str)) else repr(float(v)) for v in vals]
            if setting is not None:
                cells.insert(0, setting)
            fh.write(",".join(cells) + "\n")


def cmd_evaluate(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    spec = model_spec(cfg)
    writer = RecordWriter(out / "records.csv")
    try:
        res = _sweep(data, spec, cfg, out, writer)
    finally:
        writer.close()
    write_summary(out / "summary.csv", summarize(res.records))
    _write_params(out / "params.csv", res.params)
    skipped = sum(1 for r in res.records if not r.ok)
    return {"records": len(res.records), "skipped": skipped, "test_subset": list(res.test_subset)}


def _stacked_summary(path: Path, rows_by_setting):
    with open(path, "w") as fh:
        fh.write(",".join(("setting",) + SUMMARY_COLUMNS) + "\n")
        for setting, rows in rows_by_setting:
            for r in rows:
                cells = []
                for c in SUMMARY_COLUMNS:
                    v = getattr(r, c)
                    cells.append(("" if math.isnan(v) else repr(float(v))) if isinstance(v, float) else str(v))
                fh.write(",".join([setting] + cells) + "\n")


def _setting_row(setting, model, data, table) -> str:
    acc = accuracy(model, data) if model.spec.family == "logistic" and data.m else math.nan
    return ",".join([setting, repr(model.spec.lam), str(data.n), str(data.d),
                     repr(float(table.leverage.max())), repr(float(table.leverage.mean())),
                     "" if math.isnan(acc) else repr(float(acc))])


SETTING_COLUMNS = "setting,lam,n,d,max_leverage,mean_leverage,test_accuracy"


def cmd_sweep_lambda(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    writer = RecordWriter(out / "records.csv")
    summaries, settings = [], [SETTING_COLUMNS]
    params_path = out / "params.csv"
    if params_path.exists():
        params_path.unlink()
    try:
        for lam in cfg["lambdas"]:
            spec = ModelSpec(cfg["model"]["family"], float(lam))
            setting = f"lam={float(lam)!r}"
            res = _sweep(data, spec, cfg, out, writer, label=f"{data.name}/{setting}")
            summaries.append((setting, summarize(res.records)))
            settings.append(_setting_row(setting, res.model, data, attribute_all(res.model, data)))
            _write_params(params_path, res.params, setting)
    finally:
        writer.close()
    _stacked_summary(out / "summary.csv", summaries)
    (out / "settings.csv").write_text("\n".join(settings) + "\n")
    return {"settings": len(summaries)}


def subsample(data: Dataset, size: int, seed: int) -> Dataset:
    """Uniform training subsample with a per-size seed; the test set is kept."""
    if not 2 <= size <= data.n:
        raise ConfigError(f"subsample size {size} outside [2, {data.n}]")
    idx = np.sort(Stream(seed, "sweep-n", size).sample(data.n, size))
    return data.subset(idx, name=f"{data.name}/n={size}")


def cmd_sweep_n(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    spec = model_spec(cfg)
    sizes = cfg["sizes"] or sorted({max(2, data.n // 4), max(2, data.n // 2), data.n})
    writer = RecordWriter(out / "records.csv")
    summaries, settings = [], [SETTING_COLUMNS]
    params_path = out / "params.csv"
    if params_path.exists():
        params_path.unlink()
    try:
        for size in sizes:
            sub = subsample(data, int(size), cfg["seed"])
            setting = f"n={int(size)}"
            res = _sweep(sub, spec, cfg, out, writer)
            summaries.append((setting, summarize(res.records)))
            settings.append(_setting_row(setting, res.model, sub, attribute_all(res.model, sub)))
            _write_params(params_path, res.params, setting)
    finally:
        writer.close()
    _stacked_summary(out / "summary.csv", summaries)
    (out / "settings.csv").write_text("\n".join(settings) + "\n")
    return {"settings": len(summaries)}


def cmd_poison(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    if data.m == 0:
        raise ConfigError("poisoning needs a test set")
    if cfg["model"]["family"] != "logistic":
        raise ConfigError("poisoning flips binary labels and needs the logistic family")
    trials = run_trials(data, model_spec(cfg), int(cfg["trials"]), cfg["seed"], workers=_workers(cfg))
    write_trials(out / "poison.csv", trials)
    err_if = np.array([abs(t.pred_if - t.actual_logit_change) for t in trials])
    err_rif = np.array([abs(t.pred_rif - t.actual_logit_change) for t in trials])
    return {"trials": len(trials), "rif_better_fraction": float(np.mean(err_rif < err_if)),
            "mean_err_if": float(err_if.mean()), "mean_err_rif": float(err_rif.mean())}


def theory_functional(name: str, data: Dataset, model, seed: int, test_size: int) -> EvaluationFn:
    if name == "self-loss":
        return EvaluationFn("self-loss")
    if data.m == 0:
        raise ConfigError(f"functional {name} needs a test set")
    if name == "single-logit":
        return EvaluationFn("single-logit", index=int(Stream(seed, "theory-logit").integer(data.m)))
    subset = tuple(build_test_subset(data, model, min(test_size, data.m), seed))
    return EvaluationFn(name, subset)


def cmd_theory(cfg, out: Path) -> dict:
    data = load_dataset(cfg)
    model = fit(data, model_spec(cfg))
    th = cfg["theory"]
    f = theory_functional(th["functional"], data, model, cfg["seed"], cfg["test_size"])
    consts = theory.compute_constants(model, data, f, seed=cfg["seed"])
    table = attribute_all(model, data)
    reports, snr = [], []
    for k in th["k"]:
        rep = theory.verify_theorem1(model, data, f, int(k), int(th["trials"]), cfg["seed"],
                                     constants=consts, table=table)
        d = rep.to_dict(with_gaps=bool(th.get("gaps", False)))
        d.pop("constants")
        reports.append(d)
        if th.get("snr", True):
            s = theory.snr_estimate(model, data, f, int(k), int(th["trials"]), cfg["seed"], table=table)
            snr.append(asdict(s))
    doc = {"constants": asdict(consts), "k_max": consts.k_max, "bounds": reports, "snr": snr,
           "functional": th["functional"]}
    if th.get("lemma_trials"):
        lem = theory.verify_lemma_psd_sum(int(th["lemma_trials"]), cfg["seed"])
        doc["lemma"] = {"trials": lem.trials, "violations": lem.violations,
                        "histogram": lem.histogram, "bin_edges": lem.bin_edges}
    (out / "theory.json").write_text(_json(doc))
    violations = sum(1 for r in reports if r["reason"] == "bound violated")
    return {"violations": violations}


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "attribute": cmd_attribute,
    "evaluate": cmd_evaluate,
    "poison": cmd_poison,
    "theory": cmd_theory,
    "sweep-lambda": cmd_sweep_lambda,
    "sweep-n": cmd_sweep_n,
}


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker pool size (default: all cores)")
    common.add_argument("--family", choices=FAMILIES)
    common.add_argument("--lam", type=float)
    common.add_argument("--data", help="training CSV or binary table")
    common.add_argument("--test-data", dest="test_data")
    common.add_argument("--split", help="JSON split manifest {\"test\": [...]}")
    common.add_argument("--format", choices=("csv", "binary"))
    common.add_argument("--n", type=int, help="synthetic dataset rows")
    common.add_argument("--d", type=int, help="synthetic dataset dimension")
    common.add_argument("--test-size", dest="test_size", type=int)
    common.add_argument("--standardize", action="store_true",
                        help="center and scale features with training statistics")

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--strategies", help="comma-separated strategy names")
    sweep.add_argument("--metrics", help="comma-separated metric names")
    sweep.add_argument("--schedule", help="comma-separated removal sizes")
    sweep.add_argument("--effect", choices=("reeval", "linear"))
    sweep.add_argument("--cache", help="retrain cache directory")

    parser = argparse.ArgumentParser(prog="rifkit", description="IF, RIF and Newton-step removal estimates for regularized GLMs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    sub.add_parser("fit", parents=[common], help="fit a model and report accuracy")
    p = sub.add_parser("attribute", parents=[common], help="per-sample IF/RIF/leverage dump")
    p.add_argument("--sidecar", action="store_true", help="also write full vectors as binary tables")
    p.add_argument("--removal-set", dest="removal_set", help="RemovalSet JSON to predict")
    sub.add_parser("evaluate", parents=[common, sweep], help="actual-vs-predicted sweep")
    p = sub.add_parser("poison", parents=[common], help="flipped-label poisoning trials")
    p.add_argument("--trials", type=int)
    p = sub.add_parser("theory", parents=[common], help="assumption constants and bound checks")
    p.add_argument("--k", help="comma-separated removal budgets")
    p.add_argument("--theory-trials", dest="theory_trials", type=int)
    p.add_argument("--functional", choices=("self-loss", "test-loss-sum", "test-pred-sum", "single-logit"))
    p.add_argument("--lemma-trials", dest="lemma_trials", type=int)
    p = sub.add_parser("sweep-lambda", parents=[common, sweep], help="sweep over a lambda grid")
    p.add_argument("--lambdas", help="comma-separated lambda grid")
    p = sub.add_parser("sweep-n", parents=[common, sweep], help="sweep over training subsample sizes")
    p.add_argument("--sizes", help="comma-separated training sizes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        cfg = resolve_config(args)
        out = _output_dir(cfg)
        extra = COMMANDS[args.command](cfg, out)
        write_metadata(out, args.command, cfg, started, {"result": json.loads(_json(extra or {}))})
    except (ConfigError, DatasetError, DegenerateLeverageError) as exc:
        # a degenerate leverage is a property of the input data, not of the solver
        print(f"rifkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"rifkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"rifkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
