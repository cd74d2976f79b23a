"""Dataset container and CSV ingestion."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

MISSING_TOKENS = {"", "NA"}


class DataError(ValueError):
    """Base class for ingestion problems."""


class SchemaError(DataError):
    pass


@dataclass
class Dataset:
    """Feature matrix plus observed response.

    ``labels`` carries a binary outcome when one is known separately from the
    response (e.g. the default indicator C in simulations); ``latent`` holds the
    true decision function when the data are synthetic.
    """

    X: np.ndarray
    y: np.ndarray
    timestamps: np.ndarray | None = None
    feature_names: list[str] | None = None
    labels: np.ndarray | None = None
    latent: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y, dtype=float)
        n = self.X.shape[0]
        if self.y.shape != (n,):
            raise SchemaError(f"response length {self.y.shape} does not match {n} rows")
        for name in ("timestamps", "labels", "latent"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (n,):
                    raise SchemaError(f"{name} length does not match {n} rows")
                setattr(self, name, v)
        if self.feature_names is None:
            self.feature_names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        elif len(self.feature_names) != self.X.shape[1]:
            raise SchemaError("feature_names length does not match the number of columns")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)

        def take(v):
            return None if v is None else v[rows]

        return replace(self, X=self.X[rows], y=self.y[rows], timestamps=take(self.timestamps),
                       labels=take(self.labels), latent=take(self.latent), meta=dict(self.meta))

    def column(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            idx = int(name_or_index)
            if not 0 <= idx < self.p:
                raise KeyError(f"feature index {idx} out of range")
            return idx
        try:
            return self.feature_names.index(name_or_index)
        except ValueError:
            raise KeyError(f"unknown feature {name_or_index!r}") from None


def _parse_cell(text: str, column: str, line: int) -> float:
    text = text.strip()
    if text in MISSING_TOKENS:
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise SchemaError(f"line {line}: non-numeric value {text!r} in column {column!r}") from None


def read_csv(path, target: str | None = None, time_col: str | None = None) -> Dataset:
    """Read a headered numeric CSV.

    All columns other than ``target`` and ``time_col`` are features.  Missing
    cells (empty or ``NA``) become NaN.  Without a target the response is NaN.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names")
        for col in (target, time_col):
            if col is not None and col not in header:
                raise SchemaError(f"{path}: column {col!r} not found")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"line {line}: expected {len(header)} cells, got {len(row)}")
            rows.append([_parse_cell(c, header[j], line) for j, c in enumerate(row)])
    table = np.array(rows, dtype=float).reshape(len(rows), len(header))
    feat_cols = [j for j, h in enumerate(header) if h not in (target, time_col)]
    y = table[:, header.index(target)] if target is not None else np.full(len(rows), math.nan)
    ts = table[:, header.index(time_col)] if time_col is not None else None
    if target is not None and np.any(np.isnan(y)):
        raise SchemaError(f"{path}: response column {target!r} has missing values")
    if ts is not None and np.any(np.isnan(ts)):
        raise SchemaError(f"{path}: time column {time_col!r} has missing values")
    return Dataset(table[:, feat_cols], y, timestamps=ts, feature_names=[header[j] for j in feat_cols])


def log_transform(data: Dataset, columns) -> Dataset:
    """Natural-log transform selected feature columns; values must be > 0 (NaN allowed)."""
    X = data.X.copy()
    for col in columns:
        j = data.column(col)
        v = X[:, j]
        bad = ~np.isnan(v) & (v <= 0)
        if np.any(bad):
            raise SchemaError(
                f"cannot log-transform column {data.feature_names[j]!r}: "
                f"{int(bad.sum())} value(s) <= 0 (log undefined)"
            )
        X[:, j] = np.log(v)
    return replace(data, X=X)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v
