"""Versioned JSON/CSV artifacts: selection traces, run reports, fitted models."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import SchemaError
from .mkl import EnsembleModel, KernelSpec, OneVsRestEnsemble, WeakLearner
from .selector import ContributionTable, IterationRecord, RandSelConfig, SelectionTrace

__all__ = [
    "TRACE_SCHEMA",
    "MODEL_SCHEMA",
    "REPORT_SCHEMA",
    "CONTRIB_SCHEMA",
    "trace_to_dict",
    "trace_from_dict",
    "dump_trace",
    "load_trace",
    "write_contributions_csv",
    "read_contributions_csv",
    "write_run",
    "model_to_dict",
    "model_from_dict",
    "dump_model",
    "load_model",
]

TRACE_SCHEMA = "randsel.trace/1"
MODEL_SCHEMA = "randsel.model/1"
REPORT_SCHEMA = "randsel.report/1"
CONTRIB_SCHEMA = "randsel.contrib/1"
CONTRIB_COLUMNS = ["feature_id", "c_j", "count_plus", "count_base_excl"]


def _dumps(obj) -> str:
    # float repr round-trips exactly; sort_keys keeps the bytes stable
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def _check_schema(doc, expected, what):
    found = doc.get("schema_version") if isinstance(doc, dict) else None
    if found != expected:
        raise SchemaError(f"{what}: unsupported schema_version {found!r} (expected {expected!r})")


def trace_to_dict(trace: SelectionTrace) -> dict:
    iterations = []
    for rec in trace.iterations:
        t = rec.table
        iterations.append(
            {
                "iteration": rec.iteration,
                "active": list(rec.active),
                "dropped": list(rec.dropped),
                "fixed": list(rec.fixed),
                "n_tasks": rec.n_tasks,
                "kernel_evaluations": rec.kernel_evaluations,
                "min_coverage": t.min_coverage,
                "mean_plus": t.mean_plus.tolist(),
                "mean_base_excl": t.mean_base_excl.tolist(),
                "count_plus": t.count_plus.tolist(),
                "count_base_excl": t.count_base_excl.tolist(),
            }
        )
    return {
        "schema_version": TRACE_SCHEMA,
        "prng": trace.prng,
        "config": trace.config.to_dict(),
        "feature_names": trace.feature_names,
        "iterations": iterations,
        "final_active": list(trace.final_active),
    }


def trace_from_dict(doc: dict) -> SelectionTrace:
    _check_schema(doc, TRACE_SCHEMA, "trace")
    records = []
    for it in doc["iterations"]:
        table = ContributionTable(
            tuple(it["active"]),
            np.array(it["mean_plus"], dtype=np.float64),
            np.array(it["mean_base_excl"], dtype=np.float64),
            np.array(it["count_plus"], dtype=np.int64),
            np.array(it["count_base_excl"], dtype=np.int64),
            it["min_coverage"],
        )
        records.append(
            IterationRecord(
                it["iteration"], tuple(it["active"]), table, tuple(it["dropped"]),
                tuple(it["fixed"]), it["n_tasks"], it["kernel_evaluations"],
            )
        )
    return SelectionTrace(
        records, tuple(doc["final_active"]), RandSelConfig(**doc["config"]), doc["prng"], doc.get("feature_names")
    )


def dump_trace(trace: SelectionTrace, path) -> None:
    Path(path).write_text(_dumps(trace_to_dict(trace)), encoding="utf-8")


def load_trace(path) -> SelectionTrace:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return trace_from_dict(doc)


def write_contributions_csv(rec: IterationRecord, path) -> None:
    """One row per active feature; the first line is a ``# schema`` comment."""
    t = rec.table
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema_version={CONTRIB_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(CONTRIB_COLUMNS)
        for f, c, cp, cb in zip(t.features, t.contribution, t.count_plus, t.count_base_excl):
            writer.writerow([f, repr(float(c)), int(cp), int(cb)])


def read_contributions_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# schema_version={CONTRIB_SCHEMA}":
            raise SchemaError(f"{path}: unsupported contribution file header {first!r}")
        reader = csv.DictReader(fh)
        if reader.fieldnames != CONTRIB_COLUMNS:
            raise SchemaError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            {"feature_id": int(r["feature_id"]), "c_j": float(r["c_j"]),
             "count_plus": int(r["count_plus"]), "count_base_excl": int(r["count_base_excl"])}
            for r in reader
        ]


def _summary(trace: SelectionTrace) -> str:
    names = trace.feature_names
    label = (lambda f: f"{f} ({names[f]})") if names else str
    lines = [
        f"iterations: {len(trace.iterations)}",
        f"final active features: {', '.join(label(f) for f in trace.final_active)}",
        f"fixed features: {', '.join(label(f) for f in trace.fixed) or 'none'}",
        "",
        "iter  active  dropped  kernel_evals",
    ]
    for rec in trace.iterations:
        lines.append(f"{rec.iteration:4d}  {len(rec.active):6d}  {len(rec.dropped):7d}  {rec.kernel_evaluations}")
    return "\n".join(lines) + "\n"


def write_run(trace: SelectionTrace, out_dir) -> dict:
    """Write trace.json, contrib_iter_NNN.csv, report.json and summary.txt into ``out_dir``.

    Only ``report.json`` carries wall-clock times, so ``trace.json`` is
    byte-identical across reruns with the same configuration.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dump_trace(trace, out / "trace.json")
    files = []
    for rec in trace.iterations:
        name = f"contrib_iter_{rec.iteration:03d}.csv"
        write_contributions_csv(rec, out / name)
        files.append(name)
    report = {
        "schema_version": REPORT_SCHEMA,
        "iterations": [
            {
                "iteration": rec.iteration,
                "contributions_csv": name,
                "n_active": len(rec.active),
                "n_tasks": rec.n_tasks,
                "kernel_evaluations": rec.kernel_evaluations,
                "wall_time_s": rec.wall_time,
            }
            for rec, name in zip(trace.iterations, files)
        ],
    }
    (out / "report.json").write_text(_dumps(report), encoding="utf-8")
    (out / "summary.txt").write_text(_summary(trace), encoding="utf-8")
    return report


def _learner_to_dict(learner: WeakLearner) -> dict:
    return {
        "level": learner.spec.level,
        "features": list(learner.spec.features),
        "sigma": learner.spec.sigma,
        "lambda": learner.ridge_lambda,
        "rows": learner.train_rows.tolist(),
        "coefficients": learner.dual_coefficients.tolist(),
    }


def _binary_to_dict(model: EnsembleModel) -> dict:
    return {
        "learners": [_learner_to_dict(learner) for learner in model.learners],
        "weights": model.weights.tolist(),
        "beta": model.beta,
        "D": model.D,
    }


def model_to_dict(model, X_train, class_map=None, feature_names=None) -> dict:
    """Serialize a fitted model with the training matrix its learners index into."""
    doc = {
        "schema_version": MODEL_SCHEMA,
        "n_features": int(np.asarray(X_train).shape[1]),
        "feature_names": feature_names,
        "class_map": class_map or {},
        "X_train": np.asarray(X_train, dtype=np.float64).tolist(),
    }
    if isinstance(model, OneVsRestEnsemble):
        doc["kind"] = "one_vs_rest"
        doc["classes"] = [float(c) for c in model.classes]
        doc["models"] = [_binary_to_dict(m) for m in model.models]
    else:
        doc["kind"] = "binary"
        doc["model"] = _binary_to_dict(model)
    return doc


def _binary_from_dict(doc, X_train) -> EnsembleModel:
    learners = []
    for d in doc["learners"]:
        spec = KernelSpec(d["level"], tuple(d["features"]), d["sigma"])
        rows = np.array(d["rows"], dtype=np.int64)
        support = X_train[np.ix_(rows, list(spec.features))]
        learners.append(WeakLearner(spec, rows, np.array(d["coefficients"], dtype=np.float64), d["lambda"], support))
    return EnsembleModel(learners, np.array(doc["weights"], dtype=np.float64), doc["beta"], doc["D"])


def model_from_dict(doc: dict):
    _check_schema(doc, MODEL_SCHEMA, "model")
    X_train = np.array(doc["X_train"], dtype=np.float64)
    if doc.get("kind") == "binary":
        return _binary_from_dict(doc["model"], X_train)
    if doc.get("kind") == "one_vs_rest":
        return OneVsRestEnsemble(np.array(doc["classes"]), [_binary_from_dict(m, X_train) for m in doc["models"]])
    raise SchemaError(f"model: unknown kind {doc.get('kind')!r}")


def dump_model(model, path, X_train, class_map=None, feature_names=None) -> None:
    Path(path).write_text(_dumps(model_to_dict(model, X_train, class_map, feature_names)), encoding="utf-8")


def load_model(path) -> tuple:
    """Return ``(model, document)``; the document carries class map and feature count."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(doc), doc
