"""Experiment orchestration: single runs, tuning, protocols and ensembles."""
from __future__ import annotations

import itertools
import math
import resource
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import dimred
from .classify import (
    EvalReport,
    OneVsRest,
    classifier_predict,
    classifier_scores,
    evaluate,
    fit_classifier,
    platt_fit,
)
from .data import Dataset
from .errors import MissingSubjectIds, SingleClass, SingleClassFold
from .hsic import LinkSpec
from .kernels import KernelSpec
from .synthdata import make_rng

GRID_KEYS = ("method", "delta", "eta", "link_delta", "d", "cost", "klda_ridge")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a run besides the data.

    ``platt_holdout`` is the fraction of the training set held back to fit
    the probability sigmoid; 0 fits it on the training set itself.
    """

    method: str = "klda"
    kernel: KernelSpec = field(default_factory=KernelSpec)
    link: LinkSpec = field(default_factory=LinkSpec)
    d: int | None = 2
    cost: float = 1.0
    tol: float = 1e-6
    centered: bool = True
    klda_ridge: float = dimred.KLDA_RIDGE
    seed: int = 0
    platt: bool = True
    platt_holdout: float = 0.0
    grids: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in dimred.METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        for name in ("cost", "tol", "klda_ridge", "platt_holdout"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.cost <= 0:
            raise ValueError("cost must be positive")
        if not 0.0 <= self.platt_holdout < 1.0:
            raise ValueError("platt_holdout must be in [0, 1)")
        for k, v in self.grids.items():
            if k not in GRID_KEYS:
                raise ValueError(f"unknown grid parameter {k!r}; expected one of {GRID_KEYS}")
            if len(v) == 0:
                raise ValueError(f"grid for {k!r} is empty")
            if k != "method" and not all(math.isfinite(float(x)) for x in v):
                raise ValueError(f"grid for {k!r} has non-finite values")

    def with_params(self, **params):
        """Copy with grid-style parameter names applied."""
        kw = {}
        kernel, link = self.kernel, self.link
        for k, v in params.items():
            if k == "delta":
                kernel = replace(kernel, delta=float(v))
            elif k == "eta":
                link = replace(link, eta=float(v))
            elif k == "link_delta":
                link = replace(link, delta=float(v))
            elif k == "d":
                kw["d"] = None if v is None else int(v)
            elif k in ("cost", "klda_ridge"):
                kw[k] = float(v)
            elif k == "method":
                kw[k] = str(v)
            else:
                raise ValueError(f"unknown parameter {k!r}")
        return replace(self, kernel=kernel, link=link, **kw)

    def to_dict(self):
        out = asdict(self)
        out["kernel"] = self.kernel.to_dict()
        out["link"] = self.link.to_dict()
        out["grids"] = {k: list(v) for k, v in self.grids.items()}
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["kernel"] = KernelSpec.from_dict(d["kernel"])
        d["link"] = LinkSpec.from_dict(d["link"])
        d["grids"] = {k: tuple(v) for k, v in d.get("grids", {}).items()}
        return cls(**d)


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint partitions ``S1``, ``S2`` and ``R`` as index arrays."""

    S1: np.ndarray
    S2: np.ndarray
    R: np.ndarray

    def validate(self, data=None):
        parts = [np.asarray(p, dtype=int) for p in (self.S1, self.S2, self.R)]
        for a, b in itertools.combinations(parts, 2):
            if np.intersect1d(a, b).size:
                raise ValueError("split partitions overlap")
        if data is not None and data.subject_id is not None:
            subj = [set(data.subject_id[p].tolist()) for p in parts]
            for a, b in itertools.combinations(subj, 2):
                if a & b:
                    raise ValueError("a subject appears in more than one partition")
        return self

    def datasets(self, data):
        self.validate(data)
        return tuple(data.subset(np.asarray(p, dtype=int)) for p in (self.S1, self.S2, self.R))


@dataclass
class RunResult:
    report: EvalReport
    projector: dimred.Projector
    classifier: object
    train_projections: np.ndarray
    test_projections: np.ndarray
    predictions: np.ndarray
    scores: np.ndarray | None
    seconds: float = 0.0
    peak_rss_kb: int = 0

    def metrics(self):
        out = self.report.to_dict()
        out["max_rel_residual"] = self.projector.meta.get("max_rel_residual", 0.0)
        return out


def _peak_rss_kb():
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)


def stratified_split(y, fraction, seed):
    """Split indices so each class contributes ``round(fraction * n_c)`` to the first part."""
    y = np.asarray(y)
    rng = make_rng(seed)
    first = []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        first.append(idx[: int(round(fraction * len(idx)))])
    a = np.sort(np.concatenate(first))
    b = np.setdiff1d(np.arange(len(y)), a)
    return a, b


def run_single(train, test, cfg):
    """Standardize, fit the projector, project both sets, fit the SVM, evaluate."""
    t0 = time.perf_counter()
    if len(np.unique(train.y)) < 2:
        raise SingleClass("training labels contain a single class")
    P = dimred.fit(
        cfg.method, train.X, train.y, kernel=cfg.kernel, link=cfg.link, d=cfg.d,
        centered=cfg.centered, klda_ridge=cfg.klda_ridge,
    )
    Ztr = P.train_projections
    Zte = P.transform(test.X) if len(test) else np.zeros((0, P.d))
    binary = len(np.unique(train.y)) == 2
    if binary and cfg.platt and cfg.platt_holdout > 0:
        fit_idx, cal_idx = stratified_split(train.y, 1.0 - cfg.platt_holdout, cfg.seed)
        clf = fit_classifier(Ztr[fit_idx], train.y[fit_idx], cfg.cost, cfg.tol, seed=cfg.seed)
        clf = platt_fit(clf, Ztr[cal_idx], train.y[cal_idx])
    else:
        clf = fit_classifier(Ztr, train.y, cfg.cost, cfg.tol, seed=cfg.seed)
        if binary and cfg.platt:
            clf = platt_fit(clf, Ztr, train.y)
    pred = classifier_predict(clf, Zte)
    scores = None if isinstance(clf, OneVsRest) else classifier_scores(clf, Zte)
    pos = None if isinstance(clf, OneVsRest) else clf.positive_label
    report = evaluate(test.y, pred, scores, positive_label=pos)
    return RunResult(
        report, P, clf, Ztr, Zte, pred, scores,
        time.perf_counter() - t0, _peak_rss_kb(),
    )


def _mean(values):
    if any(v is None for v in values):
        return None
    return float(sum(values) / len(values))


@dataclass
class MeanReport:
    """Field-wise arithmetic mean over a list of reports."""

    accuracy: float
    tpr: float | None
    tnr: float | None
    auc: float | None
    runs: list
    extra: dict = field(default_factory=dict)

    @classmethod
    def of(cls, reports, **extra):
        return cls(
            _mean([r.accuracy for r in reports]),
            _mean([r.tpr for r in reports]),
            _mean([r.tnr for r in reports]),
            _mean([r.auc for r in reports]),
            list(reports),
            extra,
        )

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "tpr": self.tpr,
            "tnr": self.tnr,
            "auc": self.auc,
            "runs": [r.to_dict() for r in self.runs],
            **self.extra,
        }


def alternating_protocol(S1, S2, R, cfg):
    """Train on S1 / test on S2+R, then train on S2 / test on S1+R; average."""
    if all(p.subject_id is not None for p in (S1, S2, R)):
        sets = [set(p.subject_id.tolist()) for p in (S1, S2, R)]
        if (sets[0] & sets[1]) or (sets[0] & sets[2]) or (sets[1] & sets[2]):
            raise ValueError("a subject appears in more than one partition")
    r1 = run_single(S1, Dataset.concat([S2, R]), cfg)
    r2 = run_single(S2, Dataset.concat([S1, R]), cfg)
    return MeanReport.of([r1.report, r2.report])


# ---------------------------------------------------------------- tuning

@dataclass
class GridRow:
    params: dict
    accuracy: float | None
    error: str | None = None
    max_rel_residual: float | None = None

    @property
    def ok(self):
        return self.error is None


def grid_points(grids):
    """All combinations in a fixed order (sorted names, values as given)."""
    names = sorted(grids)
    for values in itertools.product(*(grids[k] for k in names)):
        yield dict(zip(names, values))


def _param_key(params):
    # lexicographic by sorted parameter name, numbers before strings
    return tuple((k, (0, float(v), "") if isinstance(v, (int, float)) else (1, 0.0, str(v)))
                 for k, v in sorted(params.items()))


def rank_rows(rows):
    """Successful rows by descending accuracy, ties by parameter order; failures last."""
    good = sorted((r for r in rows if r.ok), key=lambda r: (-r.accuracy, _param_key(r.params)))
    bad = sorted((r for r in rows if not r.ok), key=lambda r: _param_key(r.params))
    return good + bad


def _grid_task(args):
    train, test, cfg, params = args
    try:
        res = run_single(train, test, cfg.with_params(**params))
    except Exception as exc:  # recorded, not fatal
        return GridRow(params, None, f"{type(exc).__name__}: {exc}")
    return GridRow(params, res.report.accuracy, None, res.projector.meta.get("max_rel_residual"))


def _pool_map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(min(workers, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def grid_search(train_sub, test_sub, cfg, grids=None, *, workers=1):
    """Evaluate every grid combination with ``run_single``; ranked rows."""
    grids = cfg.grids if grids is None else grids
    if not grids:
        grids = {"cost": (cfg.cost,)}
    for k, v in grids.items():
        if len(v) == 0:
            raise ValueError(f"grid for {k!r} is empty")
    items = [(train_sub, test_sub, cfg, p) for p in grid_points(grids)]
    return rank_rows(_pool_map(_grid_task, items, workers))


def tuning_subsets(train, test, *, fraction=0.5, seed=0, allow_overlap=False):
    """Tuning pair carved from ``train``, or ``(train, test)`` when overlap is allowed."""
    if allow_overlap:
        return train, test
    a, b = stratified_split(train.y, fraction, seed)
    return train.subset(a), train.subset(b)


def tune_and_run(train, test, cfg, grids=None, *, fraction=0.5, seed=0,
                 allow_overlap=False, workers=1):
    """Grid-search on tuning subsets, then ``run_single`` with the best row."""
    t_tr, t_te = tuning_subsets(train, test, fraction=fraction, seed=seed, allow_overlap=allow_overlap)
    rows = grid_search(t_tr, t_te, cfg, grids, workers=workers)
    if not rows or not rows[0].ok:
        raise RuntimeError("every grid combination failed: " + (rows[0].error if rows else "empty grid"))
    best = cfg.with_params(**rows[0].params)
    return run_single(train, test, best), rows, best


# ---------------------------------------------------------------- LOPO

def lopo_folds(subject_id):
    """``[(subject, test_indices)]`` in sorted subject order."""
    subject_id = np.asarray(subject_id)
    return [(s, np.flatnonzero(subject_id == s)) for s in np.unique(subject_id)]


def _fold_task(args):
    data, idx, cfg = args
    mask = np.zeros(len(data), dtype=bool)
    mask[idx] = True
    return run_single(data.subset(np.flatnonzero(~mask)), data.subset(idx), cfg).report


def lopo_cv(data, cfg, *, workers=1):
    """Leave-one-subject-out: one fold per distinct ``subject_id``."""
    if data.subject_id is None:
        raise MissingSubjectIds("LOPO needs subject identifiers")
    folds = lopo_folds(data.subject_id)
    if len(folds) < 2:
        raise MissingSubjectIds("LOPO needs at least two subjects")
    for s, idx in folds:
        rest = np.delete(data.y, idx)
        if len(np.unique(rest)) < 2:
            raise SingleClassFold(f"training fold without subject {s!r} has a single class")
    reports = _pool_map(_fold_task, [(data, idx, cfg) for _, idx in folds], workers)
    return MeanReport.of(
        reports,
        folds=[{"subject": s, "test_indices": idx.tolist()} for s, idx in folds],
    )


# ---------------------------------------------------------------- ensemble

@dataclass
class EnsembleResult:
    report: EvalReport
    worker_reports: list
    predictions: np.ndarray
    votes: np.ndarray
    seeds: list
    seconds: float = 0.0


def bootstrap_indices(n, size, seed):
    return make_rng(seed).integers(0, n, size)


def _ensemble_task(args):
    i, M1, M2, cfg, seed, size = args
    idx = bootstrap_indices(len(M1), size, seed)
    res = run_single(M1.subset(idx), M2, cfg)
    return i, res.predictions, res.report


def majority_vote(votes, positive_label=None):
    """Column-wise vote over a ``(n_workers, m)`` label array.

    Strict majority wins.  For two labels an even split goes to the
    positive label (the larger one unless given).  With more labels the
    plurality wins and plurality ties go to the largest tied label.
    """
    votes = np.asarray(votes)
    labels = np.unique(votes)
    counts = np.stack([(votes == c).sum(axis=0) for c in labels])
    if positive_label is not None and positive_label in labels:
        order = np.argsort(labels == positive_label, kind="stable")
        labels, counts = labels[order], counts[order]
    # argmax of reversed rows picks the last (positive / largest) label on ties
    pick = len(labels) - 1 - np.argmax(counts[::-1], axis=0)
    return labels[pick]


def merge_worker_outputs(outputs, positive_label=None):
    """Merge ``(index, predictions, report)`` triples in index order."""
    outputs = sorted(outputs, key=lambda t: t[0])
    votes = np.stack([o[1] for o in outputs])
    return majority_vote(votes, positive_label), votes, [o[2] for o in outputs]


def bootstrap_ensemble(M1, M2, cfg, n_samples, sample_size, *, base_seed=None,
                       seeds=None, workers=1):
    """Train on ``n_samples`` with-replacement samples of M1; majority-vote on M2.

    Sample ``i`` (1-based) uses seed ``base_seed + i`` unless ``seeds`` is
    given explicitly.  Any worker failure propagates.
    """
    if n_samples < 1 or sample_size < 1:
        raise ValueError("n_samples and sample_size must be positive")
    base = cfg.seed if base_seed is None else base_seed
    seeds = [base + i for i in range(1, n_samples + 1)] if seeds is None else list(seeds)
    if len(seeds) != n_samples:
        raise ValueError("need one seed per sample")
    t0 = time.perf_counter()
    items = [(i, M1, M2, cfg, s, sample_size) for i, s in enumerate(seeds)]
    outputs = _pool_map(_ensemble_task, items, workers)
    labels = np.unique(np.concatenate([M1.y, M2.y]))
    pos = labels.max() if len(labels) == 2 else None
    pred, votes, reports = merge_worker_outputs(outputs, pos)
    report = evaluate(M2.y, pred, positive_label=pos)
    return EnsembleResult(report, reports, pred, votes, seeds, time.perf_counter() - t0)


# ---------------------------------------------------------------- simulation study

SIM_DELTAS = (0.5, 1.0, 2.0, 4.0)
SIM_COSTS = (1e-2, 1.0, 1e2, 1e4)


def simulation_study(dataset, *, n_per_class=300, seed=7, d=2, lda_d=None, methods=dimred.METHODS,
                     deltas=SIM_DELTAS, costs=SIM_COSTS, noise_sd=None, workers=1):
    """Tuned 50/50 train/test comparison of every method on a synthetic set.

    Kernel methods tune ``delta`` and ``cost``, linear ones ``cost`` only,
    on a stratified half of the training partition.  LDA uses ``lda_d``
    components, or ``min(d, C - 1)`` when it is None.  Returns ``(metrics, timing)`` dicts;
    ``metrics`` is a pure function of the arguments.
    """
    from .synthdata import SynthSpec, generate

    spec = SynthSpec(dataset, n_per_class, noise_sd, seed)
    data = generate(spec)
    a, b = stratified_split(data.y, 0.5, seed)
    train, test = data.subset(a), data.subset(b)
    n_classes = len(np.unique(data.y))
    metrics = {"data": spec.to_dict(), "n_train": len(train), "n_test": len(test), "methods": {}}
    timing = {}
    for method in methods:
        t0 = time.perf_counter()
        if method == "lda":
            dm = min(d, n_classes - 1) if lda_d is None else lda_d
        else:
            dm = d
        cfg = ExperimentConfig(method=method, d=dm, seed=seed)
        grids = {"cost": tuple(costs)}
        if method in dimred.KERNEL_METHODS:
            grids["delta"] = tuple(deltas)
        res, rows, best = tune_and_run(train, test, cfg, grids, seed=seed + 1, workers=workers)
        residuals = [r.max_rel_residual for r in rows if r.ok] + [res.projector.meta.get("max_rel_residual", 0.0)]
        metrics["methods"][method] = {
            "accuracy": res.report.accuracy,
            "tpr": res.report.tpr,
            "tnr": res.report.tnr,
            "auc": res.report.auc,
            "d": int(res.projector.d),
            "best_params": rows[0].params,
            "tuning_accuracy": rows[0].accuracy,
            "failed_rows": sum(not r.ok for r in rows),
            "max_rel_residual": float(max(residuals)),
            "rank": res.projector.meta.get("rank"),
            "ridge": res.projector.meta.get("ridge"),
        }
        timing[method] = time.perf_counter() - t0
    return metrics, timing
