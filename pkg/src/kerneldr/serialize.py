"""Versioned JSON documents for fitted projectors and classifiers.

Floats are written with ``repr`` precision, which round-trips IEEE doubles
exactly, so a loaded model transforms bit-for-bit like the original.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classify import LinearSvmModel, OneVsRest
from .dimred import Projector, Standardizer
from .errors import SchemaError
from .hsic import LinkSpec
from .kernels import KernelSpec

FORMAT = "kerneldr-model"
VERSION = 1


def to_jsonable(obj):
    """Recursively convert numpy containers and scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _arr(v, dtype=float):
    return None if v is None else np.asarray(v, dtype=dtype)


def projector_to_dict(P):
    st = P.standardizer
    return to_jsonable({
        "method": P.method,
        "d": int(P.d),
        "basis": P.basis,
        "eigenvalues": P.eigenvalues,
        "standardizer": {"means": st.means, "stds": st.stds, "constant": st.constant},
        "kernel": None if P.kernel is None else P.kernel.to_dict(),
        "link": None if P.link is None else P.link.to_dict(),
        "train_X": P.train_X,
        "centered": bool(P.centered),
        "gram_col_means": P.gram_col_means,
        "gram_total_mean": P.gram_total_mean,
        "train_projections": P.train_projections,
        "meta": P.meta,
    })


def projector_from_dict(d):
    st = d["standardizer"]
    basis = np.asarray(d["basis"], dtype=float)
    if basis.ndim == 1:
        basis = basis.reshape(-1, int(d["d"]))
    return Projector(
        d["method"], int(d["d"]), basis, _arr(d["eigenvalues"]),
        Standardizer(_arr(st["means"]), _arr(st["stds"]), _arr(st["constant"], bool)),
        kernel=None if d.get("kernel") is None else KernelSpec.from_dict(d["kernel"]),
        link=None if d.get("link") is None else LinkSpec.from_dict(d["link"]),
        train_X=_arr(d.get("train_X")),
        centered=bool(d.get("centered", False)),
        gram_col_means=_arr(d.get("gram_col_means")),
        gram_total_mean=d.get("gram_total_mean"),
        train_projections=_arr(d.get("train_projections")),
        meta=d.get("meta", {}),
    )


def classifier_to_dict(clf):
    if clf is None:
        return None
    if isinstance(clf, OneVsRest):
        return {"kind": "one_vs_rest", **clf.to_dict()}
    return {"kind": "binary", **clf.to_dict()}


def classifier_from_dict(d):
    if d is None:
        return None
    if d.get("kind") == "one_vs_rest":
        return OneVsRest.from_dict(d)
    return LinearSvmModel.from_dict(d)


def model_document(projector, classifier=None, extra=None):
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "projector": projector_to_dict(projector),
        "classifier": classifier_to_dict(classifier),
    }
    if extra:
        doc["extra"] = to_jsonable(extra)
    return doc


def dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def save_model(path, projector, classifier=None, extra=None):
    Path(path).write_text(dumps(model_document(projector, classifier, extra)), encoding="utf-8")


def load_model(path):
    """Return ``(projector, classifier_or_None)`` from a model document."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not a model document ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise SchemaError(f"{path}: not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise SchemaError(f"{path}: unsupported version {doc.get('version')!r}")
    return projector_from_dict(doc["projector"]), classifier_from_dict(doc.get("classifier"))
