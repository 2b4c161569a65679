"""Kernel evaluation, Gram matrices and centering.

One sign convention is used throughout: ``rbf`` means
``k(x, y) = exp(-delta * ||x - y||^2)``.  Grids quoted with the opposite
exponent sign must be negated on the way in (see ``from_paper_sign``).
Negative ``delta`` is allowed and gives an indefinite kernel.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import AlreadyCentered, DimensionMismatch

FAMILIES = ("rbf", "linear")
DEFAULT_TILE = 256


@dataclass(frozen=True)
class KernelSpec:
    family: str = "rbf"
    delta: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not np.isfinite(self.delta):
            raise ValueError("delta must be finite")

    def to_dict(self):
        return {"family": self.family, "delta": float(self.delta)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], float(d.get("delta", 1.0)))


def from_paper_sign(delta):
    """Translate a delta quoted for ``exp(+delta * ||x-y||^2)`` into ours."""
    return -float(delta)


@dataclass(frozen=True)
class GramMatrix:
    entries: np.ndarray
    centered: bool = False

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_array(K):
    if isinstance(K, GramMatrix):
        return K.entries
    return np.asarray(K, dtype=float)


def _pair_block(spec, A, B):
    # explicit differences/products: each entry independent of blocking
    if spec.family == "linear":
        return np.einsum("ik,jk->ij", A, B, optimize=False)
    diff = A[:, None, :] - B[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff, optimize=False)
    return np.exp(-spec.delta * d2)


def _pairwise(spec, A, B, tile, workers):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"column counts differ: {A.shape} vs {B.shape}")
    out = np.empty((A.shape[0], B.shape[0]))
    # bound the (tile, n, p) difference buffer to roughly 64 MB
    if spec.family == "rbf" and B.size:
        tile = max(1, min(tile, int(8_000_000 // max(1, B.size))))
    starts = range(0, A.shape[0], tile)

    def work(s):
        out[s:s + tile] = _pair_block(spec, A[s:s + tile], B)

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    return out


def kernel_eval(spec, x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise DimensionMismatch(f"vector lengths differ: {x.shape} vs {y.shape}")
    return float(_pair_block(spec, x[None, :], y[None, :])[0, 0])


def gram(spec, X, *, tile=DEFAULT_TILE, workers=1):
    """Uncentered ``n x n`` Gram matrix of the rows of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return GramMatrix(_pairwise(spec, X, X, tile, workers), centered=False)


def cross_gram(spec, X_train, X_test, *, tile=DEFAULT_TILE, workers=1):
    """``m x n`` matrix with entry ``[i, j] = k(x_test_i, x_train_j)``."""
    return _pairwise(spec, X_test, X_train, tile, workers)


def center_gram(K, *, force=False):
    """Return ``H K H`` with ``H = I - 11^T/n`` as a centered GramMatrix."""
    if isinstance(K, GramMatrix) and K.centered and not force:
        raise AlreadyCentered("Gram matrix is already centered")
    E = as_array(K)
    row = E.mean(axis=1, keepdims=True)
    col = E.mean(axis=0, keepdims=True)
    C = E - row - col + E.mean()
    return GramMatrix(0.5 * (C + C.T), centered=True)


def centering_stats(K):
    """Column means and grand mean of an uncentered training Gram matrix."""
    E = as_array(K)
    return E.mean(axis=0), float(E.mean())


def center_cross_with(col_means, total_mean, K_cross):
    K_cross = np.asarray(K_cross, dtype=float)
    if K_cross.ndim != 2 or K_cross.shape[1] != col_means.shape[0]:
        raise DimensionMismatch(
            f"cross Gram has {K_cross.shape[-1]} columns, training set has {col_means.shape[0]}"
        )
    return K_cross - col_means[None, :] - K_cross.mean(axis=1, keepdims=True) + total_mean


def center_cross(K_train, K_cross):
    """Center test-vs-train kernel rows against the training feature mean."""
    E = as_array(K_train)
    K_cross = np.asarray(K_cross, dtype=float)
    if E.shape[0] != E.shape[1] or K_cross.ndim != 2 or K_cross.shape[1] != E.shape[0]:
        raise DimensionMismatch(f"shapes {E.shape} and {K_cross.shape} are inconsistent")
    col_means, total = centering_stats(E)
    return center_cross_with(col_means, total, K_cross)
