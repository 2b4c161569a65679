"""Slow, transparent reference implementations used only by the tests."""
import itertools

import numpy as np


def jacobi_eigh(S, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi rotations; returns (values desc, vectors)."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * max(scale, 1.0):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1))
                c = 1 / np.sqrt(t**2 + 1)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q], R[q, p] = s, -s
                A = R.T @ A @ R
                V = V @ R
    vals = np.diag(A)
    order = np.argsort(-vals)
    return vals[order], V[:, order]


def centering(n):
    return np.eye(n) - np.ones((n, n)) / n


def hsic_explicit(K, L):
    n = K.shape[0]
    H = centering(n)
    return np.trace(K @ H @ L @ H) / (n - 1) ** 2


def rbf_entry(delta, x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.exp(-delta * sum((a - b) ** 2 for a, b in zip(x, y))))


def svm_dual_oracle(X, y_pm, cost):
    """Minimum of 0.5 a^T Q a - sum(a) over [0, cost]^n by face enumeration.

    Each coordinate is at 0, at cost, or free; on a face the stationarity
    system is solved by least squares and kept only if it lands in the box.
    An optimal point with the most coordinates at bounds has a nonsingular
    free block, so its face is found exactly.
    """
    Xa = np.hstack([np.asarray(X, float), np.ones((len(y_pm), 1))])
    Z = y_pm[:, None] * Xa
    Q = Z @ Z.T
    n = len(y_pm)
    best = np.inf
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        a = np.where(pattern == 1, cost, 0.0)
        free = pattern == 2
        if free.any():
            rhs = 1.0 - Q[np.ix_(free, ~free)] @ a[~free]
            sol = np.linalg.lstsq(Q[np.ix_(free, free)], rhs, rcond=None)[0]
            if np.any(sol < -1e-12) or np.any(sol > cost + 1e-12):
                continue
            a[free] = sol
        best = min(best, 0.5 * a @ Q @ a - a.sum())
    return best


def auc_pairs(y_pos, scores):
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie)."""
    s = np.asarray(scores, float)
    pos, neg = s[y_pos], s[~y_pos]
    gt = (pos[:, None] > neg[None, :]).sum()
    eq = (pos[:, None] == neg[None, :]).sum()
    return (gt + 0.5 * eq) / (len(pos) * len(neg))


def fisher_ratio(v, X, y):
    v = v / np.linalg.norm(v)
    mu = X.mean(axis=0)
    sb = sw = 0.0
    for c in np.unique(y):
        Xc = X[y == c]
        sb += len(Xc) * float((Xc.mean(axis=0) - mu) @ v) ** 2
        sw += float(np.sum(((Xc - Xc.mean(axis=0)) @ v) ** 2))
    return sb / sw


def align_signs(A, B):
    """Flip columns of B to best match A."""
    s = np.sign(np.sum(A * B, axis=0))
    s[s == 0] = 1
    return B * s
