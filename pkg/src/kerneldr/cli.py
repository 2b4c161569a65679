"""Command-line interface.

Every command except ``gen`` writes a RunDocument (JSON) next to its
artifact.  The document echoes the argument vector, so ``rerun`` can repeat
a run and compare metrics.  Only the ``timing`` block varies between
otherwise identical runs.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import resource
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, dimred
from .classify import classifier_predict, classifier_scores, evaluate, OneVsRest
from .data import Dataset, format_float, read_dataset, write_dataset
from .errors import KernelDRError, SchemaError
from .hsic import LINK_KINDS, LinkSpec
from .kernels import FAMILIES, KernelSpec, from_paper_sign
from .pipeline import (
    ExperimentConfig,
    GRID_KEYS,
    bootstrap_ensemble,
    grid_search,
    lopo_cv,
    run_single,
    simulation_study,
)
from .serialize import dumps, load_model, save_model, to_jsonable
from .synthdata import DATASETS, SynthSpec, generate

TOOL = "kerneldr"


# ---------------------------------------------------------------- helpers

def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8")


def _config_from_args(a):
    delta = from_paper_sign(a.delta) if a.paper_sign else a.delta
    link_delta = from_paper_sign(a.link_delta) if a.paper_sign else a.link_delta
    return ExperimentConfig(
        method=a.method,
        kernel=KernelSpec(a.kernel, delta),
        link=LinkSpec(a.link, a.eta, link_delta),
        d=a.d,
        cost=a.cost,
        tol=a.tol,
        centered=not a.uncentered,
        klda_ridge=a.klda_ridge,
        seed=a.seed,
        platt=not a.no_platt,
        platt_holdout=a.platt_holdout,
    )


def _document(a, argv, metrics, artifacts=None, inputs=None, config=None, t0=None):
    doc = {
        "tool": TOOL,
        "version": __version__,
        "command": a.command,
        "argv": list(argv),
        "config": config,
        "seeds": {"seed": getattr(a, "seed", None)},
        "inputs": {str(p): _sha256(p) for p in (inputs or [])},
        "artifacts": artifacts or {},
        "metrics": to_jsonable(metrics),
        "timing": {
            "wall_seconds": None if t0 is None else time.perf_counter() - t0,
            "peak_rss_kb": int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss),
        },
    }
    return doc


def _emit(a, doc, default):
    path = a.doc or default
    _write(path, dumps(doc))
    print(f"run document: {path}")
    return path


def _predictions_csv(y_true, pred, scores=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "label", "predicted"] + ([] if scores is None else ["score"]))
    for i in range(len(pred)):
        row = [i, y_true[i], pred[i]]
        if scores is not None:
            row.append(format_float(scores[i]))
        w.writerow(row)
    return buf.getvalue()


def roc_csv(points, auc):
    lines = [f"# auc={format_float(auc)}", "fpr,tpr"]
    lines += [f"{format_float(f)},{format_float(t)}" for f, t in points]
    return "\n".join(lines) + "\n"


def read_grid(path, paper_sign=False):
    """Grid file: JSON object mapping parameter names to candidate arrays."""
    try:
        grid = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(grid, dict) or not grid:
        raise SchemaError(f"{path}: expected a non-empty object of parameter arrays")
    out = {}
    for k, v in grid.items():
        if k not in GRID_KEYS:
            raise SchemaError(f"{path}: unknown parameter {k!r}")
        if not isinstance(v, list) or not v:
            raise SchemaError(f"{path}: {k!r} must map to a non-empty array")
        if paper_sign and k in ("delta", "link_delta"):
            v = [from_paper_sign(x) for x in v]
        out[k] = tuple(v)
    return out


def _cell(v):
    return format_float(v) if isinstance(v, float) else v


def tuning_table_csv(rows):
    names = sorted({k for r in rows for k in r.params})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank"] + names + ["accuracy", "max_rel_residual", "error"])
    for i, r in enumerate(rows, 1):
        w.writerow(
            [i] + [_cell(r.params.get(k, "")) for k in names]
            + ["" if r.accuracy is None else format_float(r.accuracy),
               "" if r.max_rel_residual is None else format_float(r.max_rel_residual),
               r.error or ""]
        )
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_gen(a, argv):
    ds = generate(SynthSpec(a.dataset, a.n_per_class, a.noise_sd, a.seed))
    write_dataset(ds, a.out)
    classes, counts = np.unique(ds.y, return_counts=True)
    summary = ", ".join(f"{c}: {n}" for c, n in zip(classes.tolist(), counts.tolist()))
    print(f"wrote {len(ds)} rows, {ds.X.shape[1]} features, {len(classes)} classes ({summary}) to {a.out}")
    return 0


def cmd_fit(a, argv):
    t0 = time.perf_counter()
    data = read_dataset(a.input)
    cfg = _config_from_args(a)
    res = run_single(data, data.subset(np.arange(0)), cfg)
    save_model(a.model, res.projector, res.classifier, {"config": cfg.to_dict()})
    metrics = {
        "d": int(res.projector.d),
        "eigenvalues": res.projector.eigenvalues,
        "meta": res.projector.meta,
        "train_accuracy": float(np.mean(classifier_predict(res.classifier, res.train_projections) == data.y)),
    }
    doc = _document(a, argv, metrics, {"model": a.model}, [a.input], cfg.to_dict(), t0)
    _emit(a, doc, a.model + ".run.json")
    return 0


def cmd_transform(a, argv):
    t0 = time.perf_counter()
    P, _ = load_model(a.model)
    data = read_dataset(a.input)
    Z = P.transform(data.X)
    write_dataset(Dataset(Z, data.y, data.subject_id), a.out)
    doc = _document(a, argv, {"rows": len(data), "d": int(P.d)}, {"projections": a.out},
                    [a.model, a.input], None, t0)
    _emit(a, doc, a.out + ".run.json")
    return 0


def cmd_classify(a, argv):
    t0 = time.perf_counter()
    train, test = read_dataset(a.train), read_dataset(a.test)
    cfg = _config_from_args(a)
    res = run_single(train, test, cfg)
    artifacts = {}
    if a.model:
        save_model(a.model, res.projector, res.classifier, {"config": cfg.to_dict()})
        artifacts["model"] = a.model
    if a.out:
        _write(a.out, _predictions_csv(test.y, res.predictions, res.scores))
        artifacts["predictions"] = a.out
    metrics = res.metrics()
    doc = _document(a, argv, metrics, artifacts, [a.train, a.test], cfg.to_dict(), t0)
    _emit(a, doc, (a.out or "classify") + ".run.json")
    print(f"accuracy={metrics['accuracy']:.6g}")
    return 0


def cmd_tune(a, argv):
    t0 = time.perf_counter()
    grids = read_grid(a.grid, a.paper_sign)
    train, test = read_dataset(a.train), read_dataset(a.test)
    cfg = _config_from_args(a)
    rows = grid_search(train, test, cfg, grids, workers=a.workers)
    _write(a.out, tuning_table_csv(rows))
    metrics = {
        "rows": [{"params": r.params, "accuracy": r.accuracy, "error": r.error} for r in rows],
        "failed": sum(not r.ok for r in rows),
    }
    doc = _document(a, argv, metrics, {"table": a.out}, [a.grid, a.train, a.test], cfg.to_dict(), t0)
    _emit(a, doc, a.out + ".run.json")
    return 0


def cmd_ensemble(a, argv):
    t0 = time.perf_counter()
    M1, M2 = read_dataset(a.train), read_dataset(a.test)
    cfg = _config_from_args(a)
    res = bootstrap_ensemble(M1, M2, cfg, a.samples, a.sample_size, workers=a.workers)
    artifacts = {}
    if a.out:
        _write(a.out, _predictions_csv(M2.y, res.predictions))
        artifacts["predictions"] = a.out
    metrics = {
        "merged": res.report.to_dict(),
        "workers": [r.to_dict() for r in res.worker_reports],
        "sample_seeds": res.seeds,
        "sample_size": a.sample_size,
    }
    doc = _document(a, argv, metrics, artifacts, [a.train, a.test], cfg.to_dict(), t0)
    _emit(a, doc, (a.out or "ensemble") + ".run.json")
    print(f"merged accuracy={res.report.accuracy:.6g} over {a.samples} samples")
    return 0


def cmd_lopo(a, argv):
    t0 = time.perf_counter()
    data = read_dataset(a.input)
    cfg = _config_from_args(a)
    rep = lopo_cv(data, cfg, workers=a.workers)
    doc = _document(a, argv, rep.to_dict(), {}, [a.input], cfg.to_dict(), t0)
    _emit(a, doc, "lopo.run.json")
    print(f"mean accuracy={rep.accuracy:.6g} over {len(rep.runs)} folds")
    return 0


def cmd_roc(a, argv):
    t0 = time.perf_counter()
    P, clf = load_model(a.model)
    if clf is None or isinstance(clf, OneVsRest):
        raise SchemaError("ROC export needs a binary classifier in the model document")
    data = read_dataset(a.input)
    Z = P.transform(data.X)
    scores = classifier_scores(clf, Z)
    rep = evaluate(data.y, classifier_predict(clf, Z), scores, positive_label=clf.positive_label)
    if rep.auc is None:
        raise SchemaError("ROC needs both classes in the input")
    _write(a.out, roc_csv(rep.roc_points, rep.auc))
    doc = _document(a, argv, rep.to_dict(), {"roc": a.out}, [a.model, a.input], None, t0)
    _emit(a, doc, a.out + ".run.json")
    print(f"auc={rep.auc:.6g}")
    return 0


def cmd_simulate(a, argv):
    t0 = time.perf_counter()
    deltas = [from_paper_sign(x) for x in a.deltas] if a.paper_sign else a.deltas
    metrics, timing = simulation_study(
        a.dataset, n_per_class=a.n_per_class, seed=a.seed, d=a.d, lda_d=a.lda_d,
        deltas=tuple(deltas), costs=tuple(a.costs), noise_sd=a.noise_sd, workers=a.workers,
    )
    doc = _document(a, argv, metrics, {}, [], None, t0)
    doc["timing"]["per_method_seconds"] = timing
    _emit(a, doc, f"simulate_{a.dataset}.run.json")
    for m, v in metrics["methods"].items():
        print(f"{m:6s} accuracy={v['accuracy']:.4f} params={v['best_params']}")
    return 0


def cmd_rerun(a, argv):
    doc = json.loads(Path(a.doc_in).read_text(encoding="utf-8"))
    if doc.get("tool") != TOOL or "argv" not in doc:
        raise SchemaError(f"{a.doc_in}: not a run document")
    out = a.doc_out or a.doc_in + ".rerun.json"
    args = _strip_doc(doc["argv"]) + ["--doc", out]
    code = main(args)
    if code:
        return code
    new = json.loads(Path(out).read_text(encoding="utf-8"))
    same = new["metrics"] == doc["metrics"]
    print("metrics identical" if same else "metrics DIFFER")
    return 0 if same else 1


def _strip_doc(argv):
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--doc":
            skip = True
            continue
        if tok.startswith("--doc="):
            continue
        out.append(tok)
    return out


# ---------------------------------------------------------------- parser

def _method_flags(p):
    p.add_argument("--method", choices=dimred.METHODS, default="klda")
    p.add_argument("--kernel", choices=FAMILIES, default="rbf")
    p.add_argument("--delta", type=float, default=1.0, help="rbf scale, k = exp(-delta |x-y|^2)")
    p.add_argument("--paper-sign", action="store_true",
                   help="negate delta values quoted for exp(+delta |x-y|^2)")
    p.add_argument("--link", choices=LINK_KINDS, default="indicator")
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--link-delta", type=float, default=1.0)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--uncentered", action="store_true", help="kpca on the raw Gram matrix")
    p.add_argument("--klda-ridge", type=float, default=dimred.KLDA_RIDGE)
    p.add_argument("--cost", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--no-platt", action="store_true")
    p.add_argument("--platt-holdout", type=float, default=0.0)


def build_parser():
    ap = argparse.ArgumentParser(prog=TOOL, description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help_, method=True, seed=True, workers=False, doc=True):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=fn)
        if method:
            _method_flags(p)
        if seed:
            p.add_argument("--seed", type=int, default=0)
        if workers:
            p.add_argument("--workers", type=int, default=1)
        if doc:
            p.add_argument("--doc", help="run document path")
        return p

    p = cmd("gen", cmd_gen, "generate a synthetic dataset CSV", method=False, doc=False)
    p.add_argument("--dataset", choices=DATASETS, required=True)
    p.add_argument("--n-per-class", type=int, default=300)
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--out", required=True)

    p = cmd("fit", cmd_fit, "fit projector and SVM on a dataset")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", required=True)

    p = cmd("transform", cmd_transform, "project a dataset with a saved model", method=False, seed=False)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = cmd("classify", cmd_classify, "train on one CSV, evaluate on another")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--model")
    p.add_argument("--out", help="predictions CSV")

    p = cmd("tune", cmd_tune, "grid search on tuning subsets", workers=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True, help="ranked tuning table CSV")

    p = cmd("ensemble", cmd_ensemble, "bootstrap majority-vote ensemble", workers=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--sample-size", type=int, default=1000)
    p.add_argument("--out", help="merged predictions CSV")

    p = cmd("lopo", cmd_lopo, "leave-one-subject-out cross-validation", workers=True)
    p.add_argument("--in", dest="input", required=True)

    p = cmd("roc", cmd_roc, "export ROC points for a saved binary model", method=False, seed=False)
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = cmd("simulate", cmd_simulate, "tuned method comparison on a synthetic dataset",
            method=False, workers=True)
    p.add_argument("--dataset", choices=DATASETS, required=True)
    p.add_argument("--n-per-class", type=int, default=300)
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--lda-d", type=int, help="lda components (default min(d, classes - 1))")
    p.add_argument("--deltas", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    p.add_argument("--costs", type=float, nargs="+", default=[1e-2, 1.0, 1e2, 1e4])
    p.add_argument("--paper-sign", action="store_true")

    p = sub.add_parser("rerun", help="repeat a run from its document and compare metrics")
    p.set_defaults(func=cmd_rerun)
    p.add_argument("doc_in", metavar="DOC")
    p.add_argument("--doc-out")
    return ap


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return a.func(a, argv)
    except (KernelDRError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
