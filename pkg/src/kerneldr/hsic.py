"""Label link matrices and the empirical HSIC estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, MissingFeatures, SizeMismatch
from .kernels import KernelSpec, as_array, gram

LINK_KINDS = ("indicator", "modified")


@dataclass(frozen=True)
class LinkSpec:
    """Link between labels.

    ``modified`` weights same-label pairs by ``exp(-eta * delta * ||xi - xj||^2)``
    (same sign convention as the rbf kernel); ``eta`` and ``delta`` are
    ignored for ``indicator``.
    """

    kind: str = "indicator"
    eta: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in LINK_KINDS:
            raise ValueError(f"unknown link kind {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, "eta": float(self.eta), "delta": float(self.delta)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], float(d.get("eta", 1.0)), float(d.get("delta", 1.0)))


def same_label(y):
    y = np.asarray(y)
    return (y[:, None] == y[None, :]).astype(float)


def one_hot(y):
    """``n x C`` class-indicator matrix with columns in sorted label order."""
    classes, inv = np.unique(np.asarray(y), return_inverse=True)
    Y = np.zeros((len(inv), len(classes)))
    Y[np.arange(len(inv)), inv] = 1.0
    return Y


def link_matrix(spec, y, X=None):
    y = np.asarray(y)
    L = same_label(y)
    if spec.kind == "indicator":
        return L
    if X is None:
        raise MissingFeatures("modified link requires the feature matrix")
    X = np.asarray(X, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise SizeMismatch(f"{X.shape[0]} feature rows for {y.shape[0]} labels")
    W = gram(KernelSpec("rbf", spec.eta * spec.delta), X).entries
    return L * W


def _center(M):
    return M - M.mean(axis=1, keepdims=True) - M.mean(axis=0, keepdims=True) + M.mean()


def hsic_empirical(K, L):
    """``tr(K H L H) / (n - 1)^2`` without forming ``H``.

    ``H L H`` is obtained by removing row, column and grand means of ``L``;
    the trace is then an elementwise sum.
    """
    K = as_array(K)
    L = np.asarray(L, dtype=float)
    if K.shape != L.shape or K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise SizeMismatch(f"K {K.shape} and L {L.shape} must be equal square shapes")
    n = K.shape[0]
    if n < 2:
        raise DegenerateSample("HSIC needs at least two observations")
    return float(np.sum(K * _center(L).T) / (n - 1) ** 2)


def skpca_objective_matrix(K, L):
    """``A = K H L H K``, symmetrized."""
    K = as_array(K)
    L = np.asarray(L, dtype=float)
    if K.shape != L.shape:
        raise SizeMismatch(f"K {K.shape} and L {L.shape} differ in shape")
    A = K @ _center(L) @ K
    return 0.5 * (A + A.T)
