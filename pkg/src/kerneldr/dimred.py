"""PCA, LDA, KPCA, SKPCA and KLDA as fit/transform pairs.

All fits standardize the training columns first and store the statistics,
so ``transform`` takes raw features.  Kernel methods keep the standardized
training matrix for out-of-sample projection.

Projection conventions
----------------------
pca, lda
    ``standardized(X) @ basis``.
kpca
    centered test kernel rows times ``alpha / sqrt(lambda)``.
skpca, klda
    uncentered test kernel rows times unit-norm coefficients; both are fit
    on the uncentered Gram matrix, and transform mirrors that.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import numerics
from .errors import (
    DimensionClamped,
    DimensionMismatch,
    DimensionReduced,
    NotPositiveDefinite,
    RankDeficient,
    SingularWithin,
    TooFewClasses,
)
from .hsic import LinkSpec, link_matrix, one_hot, skpca_objective_matrix
from .kernels import (
    KernelSpec,
    center_cross_with,
    center_gram,
    centering_stats,
    cross_gram,
    gram,
)

METHODS = ("pca", "lda", "kpca", "skpca", "klda")
KERNEL_METHODS = ("kpca", "skpca", "klda")
DEFAULT_D = 100
RANK_RTOL = 1e-8
KPCA_DROP_RTOL = 1e-12
# within-class ridge for klda, as a multiple of mean(diag(N))
KLDA_RIDGE = 1e-3


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.means.shape[0]:
            raise DimensionMismatch(
                f"expected {self.means.shape[0]} feature columns, got {X.shape}"
            )
        Z = (X - self.means) / self.stds
        Z[:, self.constant] = 0.0
        return Z


def standardize_fit(X):
    """Column-standardize to mean 0 and sample standard deviation 1.

    Constant columns are mapped to zeros and flagged in ``constant``; their
    stored scale is 1 so that ``stds`` stays positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("standardization needs a 2-D array with at least two rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    constant = ~(stds > 0)
    stds = np.where(constant, 1.0, stds)
    st = Standardizer(means, stds, constant)
    return st, st.transform(X)


@dataclass
class Projector:
    method: str
    d: int
    basis: np.ndarray
    eigenvalues: np.ndarray
    standardizer: Standardizer
    kernel: KernelSpec | None = None
    link: LinkSpec | None = None
    train_X: np.ndarray | None = None
    centered: bool = False
    gram_col_means: np.ndarray | None = None
    gram_total_mean: float | None = None
    train_projections: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def transform(self, X_new):
        return transform(self, X_new)


def _resolve_d(d, limit, what):
    requested = DEFAULT_D if d is None else int(d)
    if requested < 1:
        raise ValueError("d must be positive")
    if requested > limit:
        warnings.warn(
            f"requested d={requested} exceeds {what} ({limit}); using {limit}",
            DimensionClamped,
            stacklevel=3,
        )
        return requested, limit
    return requested, requested


def _classes(y, *, min_members=2):
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise TooFewClasses("at least two classes are required")
    if np.any(counts < min_members):
        raise TooFewClasses(f"every class needs >= {min_members} members, counts {counts.tolist()}")
    return classes, counts


def between_class_basis(y):
    """Orthonormal ``n x (C-1)`` basis of class-indicator span minus constants.

    ``Z Z^T = sum_c 1_c 1_c^T / n_c - 1 1^T / n``, so ``X^T Z Z^T X`` is the
    between-class scatter and ``K Z Z^T K`` the kernel between-class matrix.
    """
    Y = one_hot(y)
    counts = Y.sum(axis=0)
    Yn = Y / np.sqrt(counts)
    s = np.sqrt(counts / counts.sum())
    Q = scipy.linalg.null_space(s[None, :])
    return Yn @ Q


def within_class_residual(M, y):
    """Subtract per-class column means from ``M`` (columns indexed by sample)."""
    y = np.asarray(y)
    W = np.array(M, dtype=float, copy=True)
    for c in np.unique(y):
        idx = y == c
        W[:, idx] -= W[:, idx].mean(axis=1, keepdims=True)
    return W


def _max_rel_residual(pairs, A):
    if len(pairs.residuals) == 0:
        return 0.0
    return float(np.max(pairs.residuals) / max(1.0, np.linalg.norm(A)))


def _finish(P, Xs):
    P.train_projections = _project(P, Xs)
    return P


def fit_pca(X, d=None, *, standardize=True):
    X = np.asarray(X, dtype=float)
    st, Xs = standardize_fit(X) if standardize else _identity_standardizer(X)
    n, p = Xs.shape
    requested, d = _resolve_d(d, p, "feature count")
    cov = Xs.T @ Xs / (n - 1)
    pairs = numerics.sym_eig(cov, d)
    meta = {
        "requested_d": requested,
        "max_rel_residual": _max_rel_residual(pairs, cov),
        "constant_columns": np.flatnonzero(st.constant).tolist(),
    }
    P = Projector("pca", d, pairs.vectors, pairs.values, st, meta=meta)
    return _finish(P, Xs)


def fit_lda(X, y, d=None, *, standardize=True):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, _ = _classes(y)
    st, Xs = standardize_fit(X) if standardize else _identity_standardizer(X)
    p = Xs.shape[1]
    requested, d = _resolve_d(d, min(len(classes) - 1, p), "min(C-1, p)")
    F = Xs.T @ between_class_basis(y)
    S_B = F @ F.T
    R = within_class_residual(Xs.T, y)
    S_W = R @ R.T
    try:
        pairs = numerics.gen_eig_regularized(S_B, S_W, d, a_factor=F)
    except NotPositiveDefinite as exc:
        raise SingularWithin(str(exc)) from exc
    meta = {
        "requested_d": requested,
        "ridge": pairs.ridge,
        "rank": numerics.rank_above(pairs.values, RANK_RTOL),
        "max_rel_residual": _max_rel_residual(pairs, S_B),
        "constant_columns": np.flatnonzero(st.constant).tolist(),
    }
    P = Projector("lda", d, pairs.vectors, pairs.values, st, meta=meta)
    return _finish(P, Xs)


def fit_kpca(X, kernel, d=None, *, centered=True, standardize=True, workers=1):
    X = np.asarray(X, dtype=float)
    st, Xs = standardize_fit(X) if standardize else _identity_standardizer(X)
    n = Xs.shape[0]
    requested, d = _resolve_d(d, n, "sample count")
    K = gram(kernel, Xs, workers=workers)
    Kw = center_gram(K) if centered else K
    pairs = numerics.sym_eig(Kw.entries, d)
    lam1 = pairs.values[0]
    keep = pairs.values > max(lam1 * KPCA_DROP_RTOL, 0.0) if lam1 > 0 else np.zeros(d, bool)
    if not np.all(keep):
        warnings.warn(
            f"only {int(keep.sum())} of {d} kernel principal components have "
            "positive variance; the rest are dropped",
            DimensionReduced,
            stacklevel=2,
        )
    vals = pairs.values[keep]
    alpha = pairs.vectors[:, keep] / np.sqrt(vals)
    col_means, total = centering_stats(K)
    meta = {
        "requested_d": requested,
        "dropped": int(d - keep.sum()),
        "max_rel_residual": _max_rel_residual(pairs, Kw.entries),
        "constant_columns": np.flatnonzero(st.constant).tolist(),
    }
    P = Projector(
        "kpca", int(keep.sum()), alpha, vals, st, kernel=kernel, train_X=Xs,
        centered=centered, gram_col_means=col_means, gram_total_mean=total, meta=meta,
    )
    return _finish(P, Xs)


def _label_factor_free(link):
    return link.kind == "indicator" or link.eta * link.delta == 0.0


def fit_skpca(X, y, kernel, link=None, d=None, *, standardize=True, workers=1):
    """Supervised KPCA: maximize HSIC between projections and labels.

    Solves ``K H L H K v = lambda K v``.  For the indicator link the
    left-hand side is passed to the solver in factored form, since its rank
    is at most ``C - 1``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    link = link or LinkSpec("indicator")
    st, Xs = standardize_fit(X) if standardize else _identity_standardizer(X)
    n = Xs.shape[0]
    requested, d = _resolve_d(d, n, "sample count")
    K = gram(kernel, Xs, workers=workers).entries
    L = link_matrix(link, y, Xs)
    A = skpca_objective_matrix(K, L)
    factor = None
    if _label_factor_free(link):
        HY = one_hot(y)
        HY = HY - HY.mean(axis=0)
        Q = scipy.linalg.null_space(np.ones((1, HY.shape[1])))
        factor = K @ (HY @ Q)
    pairs = numerics.gen_eig_regularized(A, K, d, a_factor=factor)
    rank = numerics.rank_above(pairs.values, RANK_RTOL)
    if rank < d:
        warnings.warn(
            f"only {rank} of {d} generalized eigenvalues exceed {RANK_RTOL:g} * lambda_1",
            RankDeficient,
            stacklevel=2,
        )
    meta = {
        "requested_d": requested,
        "ridge": pairs.ridge,
        "rank": rank,
        "max_rel_residual": _max_rel_residual(pairs, A),
        "constant_columns": np.flatnonzero(st.constant).tolist(),
    }
    P = Projector(
        "skpca", d, pairs.vectors, pairs.values, st, kernel=kernel, link=link,
        train_X=Xs, centered=False, meta=meta,
    )
    return _finish(P, Xs)


def klda_matrices(K, y):
    """Kernel between/within-class matrices ``M``, ``N`` and a factor of ``M``.

    ``M = sum_c n_c (M_c - Mbar)(M_c - Mbar)^T`` with ``M_c`` the mean kernel
    column over class ``c``; ``N = sum_c K_c H_{n_c} K_c^T``.  The returned
    factor ``F`` satisfies ``F F^T = M`` with exactly ``C - 1`` columns.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y)
    Mbar = K.mean(axis=1)
    M = np.zeros_like(K)
    for c in np.unique(y):
        idx = y == c
        diff = K[:, idx].mean(axis=1) - Mbar
        M += idx.sum() * np.outer(diff, diff)
    W = within_class_residual(K, y)
    N = W @ W.T
    F = K @ between_class_basis(y)
    return 0.5 * (M + M.T), 0.5 * (N + N.T), F


def fit_klda(X, y, kernel, d=None, *, ridge=KLDA_RIDGE, standardize=True, workers=1):
    """Kernel Fisher discriminant: ``M v = lambda (N + r I) v``.

    ``N`` is singular whenever ``n`` exceeds the feature-space dimension of
    the within-class scatter, and near-null directions of ``N`` separate the
    training classes perfectly while generalizing badly.  ``ridge`` sets the
    smallest regularization tried, relative to ``mean(diag(N))``; it grows
    tenfold per failed attempt.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, _ = _classes(y)
    st, Xs = standardize_fit(X) if standardize else _identity_standardizer(X)
    n = Xs.shape[0]
    requested, d = _resolve_d(d, n, "sample count")
    K = gram(kernel, Xs, workers=workers).entries
    M, N, F = klda_matrices(K, y)
    try:
        pairs = numerics.gen_eig_regularized(M, N, d, a_factor=F, ladder=_klda_ladder(ridge))
    except NotPositiveDefinite as exc:
        raise SingularWithin(str(exc)) from exc
    meta = {
        "requested_d": requested,
        "ridge": pairs.ridge,
        "ridge_rel": float(ridge),
        "rank": numerics.rank_above(pairs.values, RANK_RTOL),
        "max_rel_residual": _max_rel_residual(pairs, M),
        "constant_columns": np.flatnonzero(st.constant).tolist(),
    }
    P = Projector(
        "klda", d, pairs.vectors, pairs.values, st, kernel=kernel, train_X=Xs,
        centered=False, meta=meta,
    )
    return _finish(P, Xs)


def _klda_ladder(ridge):
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if ridge == 0:
        return numerics.RIDGE_LADDER
    return tuple(ridge * 10.0**i for i in range(4))


def _identity_standardizer(X):
    p = X.shape[1]
    st = Standardizer(np.zeros(p), np.ones(p), np.zeros(p, dtype=bool))
    return st, np.array(X, dtype=float, copy=True)


def _project(P, Xs):
    if P.method in ("pca", "lda"):
        return Xs @ P.basis
    Kx = cross_gram(P.kernel, P.train_X, Xs)
    if P.centered:
        Kx = center_cross_with(P.gram_col_means, P.gram_total_mean, Kx)
    return Kx @ P.basis


def transform(P, X_new):
    """Project raw feature rows with a fitted Projector; returns ``m x d``."""
    return _project(P, P.standardizer.transform(X_new))


def fit(method, X, y=None, *, kernel=None, link=None, d=None, centered=True,
        klda_ridge=KLDA_RIDGE, workers=1):
    """Dispatch on method name."""
    if method == "pca":
        return fit_pca(X, d)
    if method == "lda":
        return fit_lda(X, y, d)
    kernel = kernel or KernelSpec("rbf", 1.0)
    if method == "kpca":
        return fit_kpca(X, kernel, d, centered=centered, workers=workers)
    if method == "skpca":
        return fit_skpca(X, y, kernel, link, d, workers=workers)
    if method == "klda":
        return fit_klda(X, y, kernel, d, ridge=klda_ridge, workers=workers)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
