"""The Dataset container and its canonical CSV form.

CSV layout: UTF-8, one header row, feature columns ``f0 .. f{p-1}``, a
required ``label`` column and an optional ``subject_id`` column.  Floats
are written with 17 significant digits so that a write/read cycle is exact.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import LengthMismatch, SchemaError


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    subject_id: np.ndarray | None = None
    feature_names: list | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        self.y = np.asarray(self.y)
        if self.X.shape[0] != self.y.shape[0]:
            raise LengthMismatch(f"{self.X.shape[0]} rows but {self.y.shape[0]} labels")
        if self.subject_id is not None:
            self.subject_id = np.asarray(self.subject_id)
            if self.subject_id.shape[0] != self.y.shape[0]:
                raise LengthMismatch("subject_id length differs from label count")
        if not np.all(np.isfinite(self.X)):
            raise SchemaError("feature matrix contains missing or non-finite values")

    def __len__(self):
        return self.X.shape[0]

    @property
    def classes(self):
        return np.unique(self.y)

    def subset(self, idx):
        idx = np.asarray(idx)
        sid = None if self.subject_id is None else self.subject_id[idx]
        return Dataset(self.X[idx], self.y[idx], sid, self.feature_names)

    @staticmethod
    def concat(parts):
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ValueError("nothing to concatenate")
        X = np.vstack([p.X for p in parts])
        y = np.concatenate([p.y for p in parts])
        sid = None
        if all(p.subject_id is not None for p in parts):
            sid = np.concatenate([p.subject_id for p in parts])
        return Dataset(X, y, sid, parts[0].feature_names)


def _parse_column(values):
    try:
        return np.array([int(v) for v in values])
    except ValueError:
        return np.array(values, dtype=object).astype(str)


def format_float(x):
    return "%.17g" % x


def dataset_to_csv(ds):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    p = ds.X.shape[1]
    header = [f"f{j}" for j in range(p)] + ["label"]
    if ds.subject_id is not None:
        header.append("subject_id")
    w.writerow(header)
    for i in range(len(ds)):
        row = [format_float(v) for v in ds.X[i]] + [str(ds.y[i])]
        if ds.subject_id is not None:
            row.append(str(ds.subject_id[i]))
        w.writerow(row)
    return buf.getvalue()


def write_dataset(ds, path):
    Path(path).write_text(dataset_to_csv(ds), encoding="utf-8")


def read_dataset(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if "label" not in header:
        raise SchemaError(f"{path}: missing required 'label' column")
    feat = [j for j, h in enumerate(header) if h.startswith("f") and h[1:].isdigit()]
    feat.sort(key=lambda j: int(header[j][1:]))
    if [int(header[j][1:]) for j in feat] != list(range(len(feat))) or not feat:
        raise SchemaError(f"{path}: feature columns must be named f0..f{{p-1}}")
    li = header.index("label")
    si = header.index("subject_id") if "subject_id" in header else None
    try:
        X = np.array([[float(r[j]) for j in feat] for r in body]).reshape(len(body), len(feat))
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: bad feature value ({exc})") from exc
    if any(r[li] == "" for r in body):
        raise SchemaError(f"{path}: missing label")
    y = _parse_column([r[li] for r in body])
    sid = None if si is None else _parse_column([r[si] for r in body])
    return Dataset(X, y, sid, [header[j] for j in feat])
