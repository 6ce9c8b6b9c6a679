"""Command line driver: ``randsel {select,train,predict,gen-xor,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import artifacts
from .data import gen_xor, load_csv, save_csv
from .exceptions import ConfigurationError, InputError, RandSelError, SchemaError
from .mkl import NegativeSubsample, default_sigma_grid, fit_ensemble, tune_D
from .selector import IterationRecord, RandSelConfig, SelectionTrace, estimate_contributions, run

logger = logging.getLogger("randsel")

DEFAULT_SEED = 0


def _open_unit(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not 0 < value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be in (0,1)")
        return value

    return parse


def _positive_int(name, minimum=1):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"{name} must be >= {minimum}")
        return value

    return parse


def _positive_float(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not (np.isfinite(value) and value > 0):
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return value

    return parse


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _threads(value):
    return value if value and value > 0 else (os.cpu_count() or 1)


def _load(path, label, no_header, class_map=None):
    label_column = int(label) if no_header else label
    return load_csv(path, label_column, has_header=not no_header, class_map=class_map)


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV file with features and a label column")
    p.add_argument("--label", default="y", help="label column name (or 0-based index with --no-header)")
    p.add_argument("--no-header", action="store_true", help="CSV has no header row")


def _selection_args(p):
    p.add_argument("--tasks", type=_positive_int("tasks"), default=1000, help="task pairs per iteration (r)")
    p.add_argument("--subsample", type=_positive_int("subsample", 2), default=200, help="rows per subsample (s)")
    p.add_argument("--cull", type=_open_unit("cull"), default=0.125, help="fraction culled per iteration (z)")
    p.add_argument("--sigma0", type=_positive_float("sigma0"), default=RandSelConfig.sigma0)
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default {DEFAULT_SEED})")
    p.add_argument("--threads", type=int, default=0, help="worker threads (default: all cores)")


def config_from_args(args, seed) -> RandSelConfig:
    return RandSelConfig(
        r=args.tasks,
        s=args.subsample,
        z=args.cull,
        a=args.top,
        t=args.occasions,
        fixing_enabled=args.fix,
        sigma0=args.sigma0,
        balanced=args.balanced,
        master_seed=seed,
        min_coverage=args.min_coverage,
        label_kernel=args.label_kernel,
        full_rows=args.full_rows,
    )


def cmd_select(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    if args.seed is None:
        logger.warning("no --seed given; using %d", seed)
    data = _load(args.data, args.label, args.no_header)
    config = config_from_args(args, seed)
    trace = run(data, config, threads=_threads(args.threads))
    artifacts.write_run(trace, args.out)
    print(f"selected features: {list(trace.final_active)}  ({len(trace.iterations)} iterations) -> {args.out}")
    return 0


def _levels_for(trace, max_levels):
    levels = trace.levels
    if max_levels and max_levels < len(levels):
        levels = levels[-max_levels:]
    return levels


def cmd_train(args) -> int:
    data = _load(args.data, args.label, args.no_header)
    trace = artifacts.load_trace(args.trace)
    if max(max(level) for level in trace.levels) >= data.n:
        raise SchemaError("trace refers to features beyond the training data's columns")
    levels = _levels_for(trace, args.max_levels)
    sigmas = args.sigma_values or default_sigma_grid(data.X, args.sigmas)
    neg = NegativeSubsample(args.neg_ratio, args.seed) if args.neg_ratio else None
    kwargs = dict(sigmas=sigmas, lambda_grid=args.lambdas, negative_subsample=neg)
    if args.D_grid:
        model, D, scores = tune_D(data, levels, args.D_grid, args.validation, args.seed, **kwargs)
        print("validation accuracy by D: " + ", ".join(f"{d:g}={s:.4f}" for d, s in scores.items()))
    else:
        D = args.D if args.D is not None else min(1.0, 2.0 / data.m)
        model = fit_ensemble(data, levels, D=D, **kwargs)
    artifacts.dump_model(model, args.out, data.X, data.class_map, data.feature_names)
    train_acc = float(np.mean(model.predict(data.X) == data.y))
    print(f"trained on {data.m} rows, D={D:g}, training accuracy {train_acc:.4f} -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    if not Path(args.model).is_file():
        raise ConfigurationError(f"model file not found: {args.model}")
    model, doc = artifacts.load_model(args.model)
    if args.label_present:
        data = _load(args.data, args.label, args.no_header, class_map=doc.get("class_map") or None)
        X, y = data.X, data.y
    else:
        X = np.loadtxt(args.data, delimiter=",", skiprows=0 if args.no_header else 1, ndmin=2)
        y = None
    if X.shape[1] != doc["n_features"]:
        raise SchemaError(f"data has {X.shape[1]} features, model expects {doc['n_features']}")
    inverse = {v: k for k, v in doc.get("class_map", {}).items()}
    scores = model.decision_function(X)
    labels = model.predict(X)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if scores.ndim == 1:
            writer.writerow(["row", "score", "label"])
            for i, (sc, lab) in enumerate(zip(scores, labels)):
                writer.writerow([i, repr(float(sc)), inverse.get(float(lab), repr(float(lab)))])
        else:
            writer.writerow(["row"] + [f"score_{inverse.get(float(c), c)}" for c in model.classes] + ["label"])
            for i, (row, lab) in enumerate(zip(scores, labels)):
                writer.writerow([i] + [repr(float(v)) for v in row] + [inverse.get(float(lab), repr(float(lab)))])
    message = f"wrote {len(labels)} predictions -> {args.out}"
    if y is not None:
        message += f" (accuracy {float(np.mean(labels == y)):.4f})"
    print(message)
    return 0


def cmd_gen_xor(args) -> int:
    data = gen_xor(args.features, args.samples, args.noise, args.seed)
    save_csv(data, args.out)
    print(f"wrote {args.samples}x{args.features} XOR dataset -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    """XOR benchmark: repeat selection over seeds and report how often the relevant pair wins."""
    rows = []
    for seed in args.seeds:
        data = gen_xor(args.features, args.samples, args.noise, seed)
        config = RandSelConfig(r=args.tasks, s=args.subsample, z=args.cull, sigma0=args.sigma0, master_seed=seed)
        start = time.perf_counter()
        if args.mode == "separation":
            trace = _single_iteration(data, config, args.threads)
            table = trace.iterations[0].table
            c = table.contribution
            relevant = np.array([f in (0, 1) for f in table.features])
            success = bool(c[relevant].min() > c[~relevant].max())
        else:
            trace = run(data, config, threads=_threads(args.threads))
            success = set(trace.final_active) == {0, 1}
        elapsed = time.perf_counter() - start
        evals = sum(rec.kernel_evaluations for rec in trace.iterations)
        rows.append({"seed": seed, "success": success, "seconds": elapsed, "kernel_evaluations": evals})
        print(f"seed {seed}: {'ok' if success else 'FAIL'}  {elapsed:.1f}s  {evals} kernel evaluations")
    n_ok = sum(r["success"] for r in rows)
    print(f"{args.mode}: {n_ok}/{len(rows)} runs succeeded")
    if args.out:
        doc = {"schema_version": "randsel.bench/1", "mode": args.mode, "args": {
            k: v for k, v in vars(args).items() if k not in ("func", "out")}, "runs": rows}
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return 0


def _single_iteration(data, config, threads):
    """First-iteration contributions only, wrapped as a one-record trace."""
    active = tuple(range(data.n))
    table, results = estimate_contributions(data, config, active, executor=None)
    evals = sum(len(t.row_indices) ** 2 for t, _ in results)
    rec = IterationRecord(0, active, table, (), (), len(results), evals)
    return SelectionTrace([rec], active, config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randsel", description="Randomized kernel-alignment feature selection")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="run feature selection and write a trace")
    _add_data_args(p)
    _selection_args(p)
    p.add_argument("--top", type=_open_unit("top"), default=RandSelConfig.a, help="top fraction for fixing (a)")
    p.add_argument("--occasions", type=_positive_int("occasions"), default=RandSelConfig.t, help="consecutive top placements to fix (t)")
    p.add_argument("--fix", action="store_true", help="enable feature fixing")
    p.add_argument("--balanced", action="store_true", help="class-balanced row subsamples")
    p.add_argument("--min-coverage", type=_positive_int("min-coverage"), default=RandSelConfig.min_coverage)
    p.add_argument("--label-kernel", choices=["auto", "linear", "delta"], default="auto")
    p.add_argument("--full-rows", action="store_true", help="use every row in every task")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="fit the multiple-kernel boosting model on a trace")
    _add_data_args(p)
    p.add_argument("--trace", required=True, help="trace.json written by select")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--sigmas", type=_positive_int("sigmas"), default=15, help="size of the default bandwidth grid")
    p.add_argument("--sigma-values", type=_float_list, default=None, help="explicit comma-separated bandwidths")
    p.add_argument("--lambdas", type=_float_list, default=[1e-3, 1e-2, 1e-1])
    p.add_argument("--D", type=_positive_float("D"), default=None, help="LPBoost box parameter")
    p.add_argument("--D-grid", type=_float_list, default=None, help="tune D over these values on a validation split")
    p.add_argument("--validation", type=_open_unit("validation"), default=0.3)
    p.add_argument("--max-levels", type=_positive_int("max-levels"), default=None, help="use only the finest K trace levels")
    p.add_argument("--neg-ratio", type=_positive_float("neg-ratio"), default=None, help="negatives per positive per learner")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a CSV with a trained model")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="predictions CSV path")
    p.add_argument("--unlabelled", dest="label_present", action="store_false", help="data has no label column")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gen-xor", help="write a synthetic XOR dataset")
    p.add_argument("--features", type=_positive_int("features", 2), default=20)
    p.add_argument("--samples", type=_positive_int("samples", 2), default=2000)
    p.add_argument("--noise", choices=["uniform", "gaussian"], default="uniform")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_xor)

    p = sub.add_parser("bench", help="XOR benchmark over several seeds")
    p.add_argument("--mode", choices=["culling", "separation"], default="culling")
    p.add_argument("--features", type=_positive_int("features", 3), default=20)
    p.add_argument("--samples", type=_positive_int("samples", 2), default=2000)
    p.add_argument("--noise", choices=["uniform", "gaussian"], default="uniform")
    _selection_args(p)
    p.add_argument("--seeds", type=lambda t: [int(v) for v in t.split(",")], default=list(range(1, 6)))
    p.add_argument("--out", default=None, help="optional JSON results path")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, SchemaError, InputError) as exc:
        print(f"randsel {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (RandSelError, OSError) as exc:
        print(f"randsel {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
