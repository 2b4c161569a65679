"""Dense symmetric and generalized eigensolvers.

Every dimension-reduction method in the package reduces to one of

    S v = lambda v            (sym_eig)
    A v = lambda (B + r I) v  (gen_eig)

with eigenpairs returned in signed-descending order.  Generalized problems
are reduced to standard ones by Cholesky whitening of ``B + r I``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import ConvergenceFailure, NonSymmetric, NotPositiveDefinite, SizeMismatch

DENSE_LIMIT = 2048
SYMMETRY_RTOL = 1e-10
RESIDUAL_RTOL = 1e-8
# multipliers of mean(diag(B)); first rung is the unregularized problem
RIDGE_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray
    ridge: float = 0.0
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return len(self.values)


def check_symmetric(S, name="matrix"):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise NonSymmetric(f"{name} must be square, got shape {S.shape}")
    scale = np.max(np.abs(S)) if S.size else 0.0
    if scale > 0 and np.max(np.abs(S - S.T)) > SYMMETRY_RTOL * scale:
        raise NonSymmetric(f"{name} is not symmetric within {SYMMETRY_RTOL:g} relative")
    return S


def _fix_signs(V):
    # largest-magnitude entry of each column made positive (first on ties)
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _top_k_symmetric(S, k, dense_limit, maxiter):
    n = S.shape[0]
    if n <= dense_limit or k >= n - 1:
        vals, vecs = scipy.linalg.eigh(S, subset_by_index=[n - k, n - 1])
    else:
        v0 = np.ones(n) / np.sqrt(n)
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(
                S, k=k, which="LA", v0=v0, maxiter=maxiter, tol=0.0
            )
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise ConvergenceFailure(str(exc)) from exc
    order = np.argsort(-vals, kind="stable")
    return vals[order], _fix_signs(vecs[:, order])


def _residuals(A, B, vals, vecs):
    if B is None:
        R = A @ vecs - vecs * vals
    else:
        R = A @ vecs - (B @ vecs) * vals
    return np.linalg.norm(R, axis=0)


def sym_eig(S, k, *, dense_limit=DENSE_LIMIT, maxiter=None):
    """Top-``k`` eigenpairs of a symmetric matrix by signed eigenvalue.

    Dense LAPACK for ``dim <= dense_limit``; Lanczos (ARPACK) extraction of
    the algebraically largest pairs above that.  Columns of ``vectors`` are
    unit-norm with their largest-magnitude entry positive.
    """
    S = check_symmetric(S)
    n = S.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    S = 0.5 * (S + S.T)
    vals, vecs = _top_k_symmetric(S, k, dense_limit, maxiter)
    return EigenPairs(vals, vecs, 0.0, _residuals(S, None, vals, vecs))


def cholesky(S):
    """Lower-triangular ``L`` with ``L @ L.T == S``.

    Raises NotPositiveDefinite when a nonpositive pivot is met, which tells
    the caller to regularize.
    """
    S = check_symmetric(S)
    try:
        return np.linalg.cholesky(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def gen_eig(A, B, k, ridge=0.0, *, a_factor=None, dense_limit=DENSE_LIMIT, maxiter=None):
    """Top-``k`` pairs of ``A v = lambda (B + ridge I) v`` by Cholesky whitening.

    Parameters
    ----------
    A, B : (n, n) symmetric arrays
    k : int
    ridge : float
        Added to the diagonal of ``B`` before factorizing.
    a_factor : (n, r) array, optional
        A factor with ``A == a_factor @ a_factor.T``.  When given, the
        whitened operator is formed as ``G @ G.T`` with ``G = L^{-1} F`` so
        that its rank is at most ``r`` to working precision; forming
        ``L^{-1} A L^{-T}`` from a dense low-rank ``A`` amplifies roundoff in
        the null space by the condition number of ``B``.

    Returns
    -------
    EigenPairs
        Unit-norm generalized eigenvectors and per-pair residual norms
        ``||A v - lambda (B + ridge I) v||``.
    """
    A = check_symmetric(A, "A")
    B = check_symmetric(B, "B")
    if A.shape != B.shape:
        raise SizeMismatch(f"A {A.shape} and B {B.shape} differ in shape")
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    Br = B + ridge * np.eye(n) if ridge else B
    L = cholesky(Br)
    if a_factor is not None:
        G = scipy.linalg.solve_triangular(L, np.asarray(a_factor, float), lower=True)
        C = G @ G.T
    else:
        C = scipy.linalg.solve_triangular(L, A, lower=True)
        C = scipy.linalg.solve_triangular(L, C.T, lower=True).T
    C = 0.5 * (C + C.T)
    vals, U = _top_k_symmetric(C, k, dense_limit, maxiter)
    V = scipy.linalg.solve_triangular(L.T, U, lower=False)
    V = _fix_signs(V / np.linalg.norm(V, axis=0))
    A_sym = 0.5 * (A + A.T)
    return EigenPairs(vals, V, float(ridge), _residuals(A_sym, Br, vals, V))


def residual_ok(pairs, A):
    tol = RESIDUAL_RTOL * max(1.0, np.linalg.norm(A))
    return bool(np.all(pairs.residuals <= tol))


def gen_eig_regularized(A, B, k, *, a_factor=None, ladder=RIDGE_LADDER, **kwargs):
    """``gen_eig`` with ridge escalation on factorization failure.

    Ridge values are ``ladder[i] * mean(diag(B))``; the first rung that
    factorizes and meets the residual tolerance wins.  Raises
    NotPositiveDefinite once the ladder is exhausted.
    """
    scale = float(np.mean(np.diag(B)))
    if not scale > 0:
        scale = 1.0
    last = None
    for rung in ladder:
        try:
            pairs = gen_eig(A, B, k, rung * scale, a_factor=a_factor, **kwargs)
        except NotPositiveDefinite as exc:
            last = exc
            continue
        if residual_ok(pairs, A):
            return pairs
        last = ConvergenceFailure(f"residual above tolerance at ridge {rung * scale:g}")
    raise NotPositiveDefinite(
        f"B + ridge*I unusable up to ridge {ladder[-1] * scale:g}: {last}"
    )


def rank_above(values, rtol=1e-8):
    """Count eigenvalues above ``rtol * values[0]`` (signed-descending input)."""
    values = np.asarray(values)
    if values.size == 0 or values[0] <= 0:
        return 0
    return int(np.sum(values > rtol * values[0]))
