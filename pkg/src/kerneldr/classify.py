"""Linear soft-margin SVM, sigmoid probability calibration and metrics."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize
from numba import njit

from .errors import DimensionMismatch, LengthMismatch, NonConvergence, SingleClass

DEFAULT_TOL = 1e-6
DEFAULT_MAX_UPDATES = 10_000_000
POLISH_EVERY = 20


@dataclass(frozen=True)
class LinearSvmModel:
    """Binary linear SVM ``f(x) = w.x + b``.

    ``labels`` is ``(negative, positive)``; ``f(x) >= 0`` predicts the
    positive label, so a point on the hyperplane goes to the positive class.
    """

    w: np.ndarray
    b: float
    cost: float
    labels: tuple
    platt_a: float | None = None
    platt_b: float | None = None
    alpha: np.ndarray | None = field(default=None, repr=False)
    kkt_violation: float = 0.0
    n_updates: int = 0

    @property
    def positive_label(self):
        return self.labels[1]

    def to_dict(self):
        return {
            "w": self.w.tolist(),
            "b": float(self.b),
            "cost": float(self.cost),
            "labels": [_py(v) for v in self.labels],
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
            "kkt_violation": float(self.kkt_violation),
            "n_updates": int(self.n_updates),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["w"], dtype=float), float(d["b"]), float(d["cost"]),
            tuple(d["labels"]), d.get("platt_a"), d.get("platt_b"),
            kkt_violation=float(d.get("kkt_violation", 0.0)),
            n_updates=int(d.get("n_updates", 0)),
        )


def _py(v):
    return v.item() if isinstance(v, np.generic) else v


def label_map(y, positive_label=None):
    classes = np.unique(np.asarray(y))
    if len(classes) < 2:
        raise SingleClass("both classes must be present")
    if len(classes) > 2:
        raise ValueError(f"binary labels expected, got {len(classes)} classes")
    if positive_label is None:
        return classes[0], classes[1]
    if positive_label not in classes:
        raise ValueError(f"positive label {positive_label!r} not among {classes.tolist()}")
    neg = classes[0] if classes[1] == positive_label else classes[1]
    return neg, positive_label


@njit(cache=True)
def _cd_epoch(Xa, ys, alpha, w, qd, cost, perm):
    worst = 0.0
    p = Xa.shape[1]
    for i in perm:
        g = 0.0
        for j in range(p):
            g += w[j] * Xa[i, j]
        g = ys[i] * g - 1.0
        if alpha[i] <= 0.0:
            pg = min(g, 0.0)
        elif alpha[i] >= cost:
            pg = max(g, 0.0)
        else:
            pg = g
        if abs(pg) > worst:
            worst = abs(pg)
        if pg != 0.0:
            old = alpha[i]
            new = min(max(old - g / qd[i], 0.0), cost)
            alpha[i] = new
            step = (new - old) * ys[i]
            if step != 0.0:
                for j in range(p):
                    w[j] += step * Xa[i, j]
    return worst


def kkt_violations(Xa, ys, alpha, cost):
    """Projected-gradient magnitude of the dual at every training point."""
    w = (alpha * ys) @ Xa
    g = ys * (Xa @ w) - 1.0
    pg = np.where(alpha <= 0.0, np.minimum(g, 0.0), np.where(alpha >= cost, np.maximum(g, 0.0), g))
    return np.abs(pg)


def dual_objective(Xa, ys, alpha):
    """``0.5 a^T Q a - sum(a)`` with ``Q_ij = y_i y_j xa_i . xa_j``."""
    w = (alpha * ys) @ Xa
    return float(0.5 * w @ w - alpha.sum())


def _polish(Xa, ys, alpha, cost, tol):
    """Refine ``alpha`` with L-BFGS-B on the box-constrained dual.

    Coordinate descent finds the active set quickly but has a slow linear
    tail on overlapping classes; a quasi-Newton pass over the same
    objective closes it.  ``w = Z^T alpha`` keeps each evaluation ``O(n p)``.
    """
    Z = ys[:, None] * Xa

    def fun(a):
        w = a @ Z
        return 0.5 * float(w @ w) - float(a.sum()), Z @ w - 1.0

    res = scipy.optimize.minimize(
        fun, alpha, jac=True, method="L-BFGS-B", bounds=[(0.0, cost)] * len(alpha),
        options={"maxiter": 5000, "ftol": 0.0, "gtol": 0.1 * tol, "maxcor": 30},
    )
    return np.clip(res.x, 0.0, cost)


def augment(X):
    X = np.asarray(X, dtype=float)
    return np.hstack([X, np.ones((X.shape[0], 1))])


def svm_fit(X, y, cost=1.0, tol=DEFAULT_TOL, *, max_updates=DEFAULT_MAX_UPDATES,
            seed=0, positive_label=None):
    """Train an L1-loss soft-margin linear SVM by dual coordinate descent.

    The bias is learned as the weight of a constant feature appended to
    every row, so it is regularized together with ``w``.  Coordinates are
    visited in a fresh seeded permutation each epoch.  Converged when every
    projected-gradient component is at most ``tol`` for the final ``w``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise LengthMismatch(f"X {X.shape} does not match {y.shape[0]} labels")
    if cost <= 0:
        raise ValueError("cost must be positive")
    if X.shape[0] < 2:
        raise SingleClass("at least two observations are required")
    neg, pos = label_map(y, positive_label)
    ys = np.where(y == pos, 1.0, -1.0)
    Xa = augment(X)
    qd = np.einsum("ij,ij->i", Xa, Xa)
    n = Xa.shape[0]
    alpha = np.zeros(n)
    w = np.zeros(Xa.shape[1])
    rng = np.random.Generator(np.random.PCG64(seed))
    updates = 0
    viol = np.inf
    epoch = 0
    while updates < max_updates:
        _cd_epoch(Xa, ys, alpha, w, qd, float(cost), rng.permutation(n))
        updates += n
        epoch += 1
        viol = float(np.max(kkt_violations(Xa, ys, alpha, cost)))
        if viol <= tol:
            break
        if epoch % POLISH_EVERY == 0:
            cand = _polish(Xa, ys, alpha, cost, tol)
            if dual_objective(Xa, ys, cand) <= dual_objective(Xa, ys, alpha):
                alpha = cand
                viol = float(np.max(kkt_violations(Xa, ys, alpha, cost)))
                if viol <= tol:
                    break
        # resync w with alpha to stop drift over long runs
        w = (alpha * ys) @ Xa
    else:
        raise NonConvergence(
            f"KKT violation {viol:.3g} > tol {tol:g} after {updates} coordinate updates"
        )
    w = (alpha * ys) @ Xa
    return LinearSvmModel(
        w[:-1].copy(), float(w[-1]), float(cost), (neg, pos),
        alpha=alpha, kkt_violation=viol, n_updates=updates,
    )


def svm_decision(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if model.w.shape[0] == 1 else X[None, :]
    if X.shape[1] != model.w.shape[0]:
        raise DimensionMismatch(f"model has {model.w.shape[0]} weights, data has {X.shape[1]} columns")
    return X @ model.w + model.b


def svm_predict(model, X):
    f = svm_decision(model, X)
    neg, pos = model.labels
    return np.where(f >= 0.0, np.asarray(pos, dtype=object), np.asarray(neg, dtype=object)).astype(
        np.asarray(model.labels).dtype
    )


def _sigmoid_nll(a, b, f, t):
    z = a * f + b
    # log(1 + exp(z)) - (1 - t) * z, written stably
    return float(np.sum(np.logaddexp(0.0, z) - (1.0 - t) * z))


def platt_fit(model, X_holdout, y_holdout, *, max_iter=100, gtol=1e-8):
    """Fit ``P(positive | f) = 1 / (1 + exp(a f + b))`` on decision values.

    Regularized targets ``(N+ + 1)/(N+ + 2)`` and ``1/(N- + 2)`` and a
    damped Newton iteration with backtracking line search.
    """
    f = svm_decision(model, X_holdout)
    y = np.asarray(y_holdout)
    if f.shape[0] != y.shape[0]:
        raise LengthMismatch("decision values and labels differ in length")
    is_pos = y == model.positive_label
    n_pos = int(is_pos.sum())
    n_neg = int(len(y) - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("calibration set must contain both classes")
    t = np.where(is_pos, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a, b = 0.0, float(np.log((n_neg + 1.0) / (n_pos + 1.0)))
    fval = _sigmoid_nll(a, b, f, t)
    sigma = 1e-12
    for _ in range(max_iter):
        z = a * f + b
        p = 0.5 * (1.0 + np.tanh(-0.5 * z))  # 1 / (1 + exp(z))
        d1 = t - p
        d2 = p * (1.0 - p)
        g1 = float(f @ d1)
        g2 = float(d1.sum())
        if max(abs(g1), abs(g2)) <= gtol:
            break
        h11 = float(f * f @ d2) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float(f @ d2)
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= 1e-10:
            na, nb = a + step * da, b + step * db
            nf = _sigmoid_nll(na, nb, f, t)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    return replace(model, platt_a=float(a), platt_b=float(b))


def svm_probability(model, X):
    if model.platt_a is None:
        raise ValueError("model has no sigmoid calibration; call platt_fit first")
    z = model.platt_a * svm_decision(model, X) + model.platt_b
    return 0.5 * (1.0 + np.tanh(-0.5 * z))


@dataclass(frozen=True)
class OneVsRest:
    """Multiclass prediction by argmax over binary one-vs-rest SVMs."""

    classes: tuple
    models: tuple

    @property
    def cost(self):
        return self.models[0].cost

    def decision(self, X):
        return np.column_stack([svm_decision(m, X) for m in self.models])

    def predict(self, X):
        return np.asarray(self.classes)[np.argmax(self.decision(X), axis=1)]

    def to_dict(self):
        return {"classes": [_py(c) for c in self.classes], "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["classes"]), tuple(LinearSvmModel.from_dict(m) for m in d["models"]))


def fit_classifier(X, y, cost=1.0, tol=DEFAULT_TOL, *, seed=0, max_updates=DEFAULT_MAX_UPDATES):
    """Binary SVM for two classes, one-vs-rest over binary SVMs otherwise."""
    classes = np.unique(np.asarray(y))
    if len(classes) < 2:
        raise SingleClass("both classes must be present")
    if len(classes) == 2:
        return svm_fit(X, y, cost, tol, seed=seed, max_updates=max_updates)
    y = np.asarray(y)
    models = []
    for c in classes:
        yb = np.where(y == c, 1, 0)
        models.append(svm_fit(X, yb, cost, tol, seed=seed, max_updates=max_updates, positive_label=1))
    return OneVsRest(tuple(_py(c) for c in classes), tuple(models))


def classifier_predict(clf, X):
    if isinstance(clf, OneVsRest):
        return clf.predict(X)
    return svm_predict(clf, X)


def classifier_scores(clf, X):
    """Scores for ROC: calibrated probabilities when available, else decision values."""
    if isinstance(clf, OneVsRest):
        return None
    if clf.platt_a is not None:
        return svm_probability(clf, X)
    return svm_decision(clf, X)


@dataclass
class EvalReport:
    accuracy: float
    tpr: float | None
    tnr: float | None
    confusion: np.ndarray
    labels: list
    positive_label: object = None
    roc_points: np.ndarray | None = None
    auc: float | None = None
    n: int = 0

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "tpr": self.tpr,
            "tnr": self.tnr,
            "auc": self.auc,
            "n": self.n,
            "labels": [_py(v) for v in self.labels],
            "positive_label": _py(self.positive_label),
            "confusion": self.confusion.tolist(),
        }


def roc_curve(y_true, scores, positive_label):
    """ROC points swept over every distinct score (descending) and its AUC.

    Returns ``(points, auc)``; points start at (0, 0) and end at (1, 1).
    ``auc`` is None when either class is absent.
    """
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=float)
    is_pos = y_true == positive_label
    n_pos = int(is_pos.sum())
    n_neg = int(len(y_true) - n_pos)
    if n_pos == 0 or n_neg == 0:
        return None, None
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    tp = np.cumsum(is_pos[order])
    fp = np.cumsum(~is_pos[order])
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    fpr = np.r_[0.0, fp[last] / n_neg]
    tpr = np.r_[0.0, tp[last] / n_pos]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return np.column_stack([fpr, tpr]), auc


def _rate(num, den):
    return None if den == 0 else num / den


def evaluate(y_true, y_pred, scores=None, *, positive_label=None):
    """Accuracy, TPR, TNR, confusion and (with scores) ROC/AUC.

    For two labels ``confusion`` is ``[[TP, FN], [FP, TN]]``.  With more than
    two labels only accuracy and a ``C x C`` confusion (rows true, columns
    predicted) are reported.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.shape[0]} true labels vs {y_pred.shape[0]} predictions")
    if scores is not None and len(scores) != len(y_true):
        raise LengthMismatch("scores and labels differ in length")
    n = int(y_true.shape[0])
    labels = np.unique(np.concatenate([y_true, y_pred]))
    accuracy = float(np.mean(y_true == y_pred)) if n else 0.0
    if len(labels) > 2 or (positive_label is None and len(labels) < 2 and scores is None):
        idx = {v: i for i, v in enumerate(labels.tolist())}
        conf = np.zeros((len(labels), len(labels)), dtype=int)
        for t, p in zip(y_true.tolist(), y_pred.tolist()):
            conf[idx[t], idx[p]] += 1
        return EvalReport(accuracy, None, None, conf, labels.tolist(), None, None, None, n)
    pos = labels.max() if positive_label is None else positive_label
    t_pos = y_true == pos
    p_pos = y_pred == pos
    tp = int(np.sum(t_pos & p_pos))
    fn = int(np.sum(t_pos & ~p_pos))
    fp = int(np.sum(~t_pos & p_pos))
    tn = int(np.sum(~t_pos & ~p_pos))
    roc, auc = (None, None) if scores is None else roc_curve(y_true, scores, pos)
    return EvalReport(
        accuracy, _rate(tp, tp + fn), _rate(tn, tn + fp),
        np.array([[tp, fn], [fp, tn]]), labels.tolist(), _py(pos), roc, auc, n,
    )
