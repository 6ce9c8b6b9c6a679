"""Datasets: CSV ingestion and the synthetic XOR benchmark."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, ParameterError, SchemaError

__all__ = ["Dataset", "load_csv", "save_csv", "gen_xor", "encode_labels"]


@dataclass
class Dataset:
    """Numeric sample matrix with labels.

    ``y`` holds +1/-1 for binary problems and 0..C-1 class ids otherwise.
    ``class_map`` maps the original label strings to those codes.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: list | None = None
    class_map: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.X.ndim != 2:
            raise InputError(f"X must be 2-d, got shape {self.X.shape}")
        m, n = self.X.shape
        if m < 2 or n < 1:
            raise InputError(f"need m >= 2 and n >= 1, got {self.X.shape}")
        if self.y.shape[0] != m:
            raise InputError(f"y has {self.y.shape[0]} entries for {m} rows")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            raise InputError("dataset contains non-finite values")

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def is_binary(self) -> bool:
        return set(np.unique(self.y).tolist()) <= {-1.0, 1.0}

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.X[rows], self.y[rows], self.feature_names, dict(self.class_map))


def _parse_number(text: str) -> float:
    return float(text.strip())


def encode_labels(raw: list) -> tuple[np.ndarray, dict]:
    """Map label strings to codes.

    Two distinct labels become +1/-1: numeric labels already equal to +1/-1
    keep their sign, anything else is ordered lexicographically and the first
    one maps to +1.  Three or more labels become 0..C-1 in lexicographic order.
    """
    labels = [s.strip() for s in raw]
    distinct = sorted(set(labels))
    if len(distinct) < 2:
        raise InputError(f"label column has a single class {distinct}")
    if len(distinct) == 2:
        try:
            numeric = {d: float(d) for d in distinct}
        except ValueError:
            numeric = None
        if numeric is not None and set(numeric.values()) == {-1.0, 1.0}:
            class_map = {d: numeric[d] for d in distinct}
        else:
            class_map = {distinct[0]: 1.0, distinct[1]: -1.0}
    else:
        class_map = {d: float(k) for k, d in enumerate(distinct)}
    return np.array([class_map[s] for s in labels], dtype=np.float64), class_map


def load_csv(path, label_column, has_header: bool = True, class_map: dict | None = None) -> Dataset:
    """Read a CSV file with one label column and numeric feature columns.

    ``label_column`` is a header name, or a 0-based column index (required
    when ``has_header`` is false).  Passing ``class_map`` (e.g. from a
    trained model) encodes labels with that mapping instead of deriving one.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise SchemaError(f"{path}: empty file")
    if has_header:
        header, body = [h.strip() for h in rows[0]], rows[1:]
    else:
        header, body = None, rows
    width = len(rows[0])

    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column.isdigit() and not (header and label_column in header)):
        label_idx = int(label_column)
        if not 0 <= label_idx < width:
            raise SchemaError(f"{path}: label column index {label_idx} out of range")
    else:
        if header is None or label_column not in header:
            raise SchemaError(f"{path}: missing label column {label_column!r}")
        label_idx = header.index(label_column)

    feature_cols = [j for j in range(width) if j != label_idx]
    X = np.empty((len(body), len(feature_cols)), dtype=np.float64)
    raw_labels = []
    first_line = 2 if has_header else 1
    for i, row in enumerate(body):
        line = first_line + i
        if len(row) != width:
            raise SchemaError(f"{path}:{line}: expected {width} fields, got {len(row)}")
        for k, j in enumerate(feature_cols):
            try:
                value = _parse_number(row[j])
            except ValueError:
                raise InputError(f"{path}:{line}: column {j + 1}: non-numeric value {row[j]!r}") from None
            if not math.isfinite(value):
                raise InputError(f"{path}:{line}: column {j + 1}: non-finite value {row[j]!r}")
            X[i, k] = value
        raw_labels.append(row[label_idx])
    if class_map is None:
        y, class_map = encode_labels(raw_labels)
    else:
        unknown = sorted({lab.strip() for lab in raw_labels} - set(class_map))
        if unknown:
            raise SchemaError(f"{path}: labels {unknown} not in the class map {sorted(class_map)}")
        y = np.array([class_map[lab.strip()] for lab in raw_labels], dtype=np.float64)
    names = [header[j] for j in feature_cols] if header else None
    return Dataset(X, y, names, class_map)


def _format_label(value: float) -> str:
    if value == 1.0:
        return "+1"
    if value == -1.0:
        return "-1"
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def save_csv(data: Dataset, path, label_name: str = "y") -> None:
    """Write ``data`` with a header row; floats use ``repr`` so a reload is bit-exact."""
    names = data.feature_names or [f"x{j}" for j in range(data.n)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [label_name])
        for row, label in zip(data.X.tolist(), data.y.tolist()):
            writer.writerow([repr(v) for v in row] + [_format_label(label)])


def gen_xor(n_features: int, m: int, noise_kind: str = "uniform", seed: int = 0) -> Dataset:
    """XOR problem on features 0 and 1 with ``n_features - 2`` irrelevant noise features.

    Features 0 and 1 are uniform on {-1, +1} and ``y = x0 * x1``.  Noise is
    uniform on [-1, 1] or standard normal.
    """
    if n_features < 2:
        raise ParameterError("XOR needs at least 2 features")
    if m < 2:
        raise ParameterError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    X = np.empty((m, n_features))
    X[:, :2] = rng.choice(np.array([-1.0, 1.0]), size=(m, 2))
    if noise_kind == "uniform":
        X[:, 2:] = rng.uniform(-1.0, 1.0, size=(m, n_features - 2))
    elif noise_kind == "gaussian":
        X[:, 2:] = rng.standard_normal(size=(m, n_features - 2))
    else:
        raise ParameterError(f"unknown noise kind {noise_kind!r}")
    y = X[:, 0] * X[:, 1]
    names = [f"x{j}" for j in range(n_features)]
    return Dataset(X, y, names, {"+1": 1.0, "-1": -1.0})
