"""Accelerated proximal-gradient solver for the same objective.

Shares nothing with :mod:`mgsda.solver` beyond numpy, so it can serve as an
independent check on the coordinate-descent path.
"""
from __future__ import annotations

import numpy as np


def _prox_rows(V: np.ndarray, t: float) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", V, V))
    scale = np.where(norms > t, 1.0 - t / np.where(norms > 0, norms, 1.0), 0.0)
    return V * scale[:, None]


def proximal_gradient(Q, C, lam, tol=1e-10, max_iter=2_000_000):
    """FISTA with gradient-based adaptive restart.

    Stops when the scaled gradient-mapping norm ``L * ||V - prox(V - grad/L)||_max``
    falls below ``tol``. Returns ``(V, iterations)``.
    """
    Q = np.asarray(Q, dtype=float)
    C = np.asarray(C, dtype=float)
    M = Q + C @ C.T
    L = float(np.linalg.eigvalsh(0.5 * (M + M.T))[-1])
    step = 1.0 / L
    X = np.zeros_like(C)
    Y = X.copy()
    t = 1.0
    for it in range(1, max_iter + 1):
        if it % 10 == 0:
            G = M @ X - C
            mapped = _prox_rows(X - step * G, step * lam)
            if L * np.max(np.abs(X - mapped)) <= tol:
                return X, it
        grad = M @ Y - C
        X_new = _prox_rows(Y - step * grad, step * lam)
        # restart momentum when it points uphill
        if np.sum((Y - X_new) * (X_new - X)) > 0:
            t = 1.0
            Y = X.copy()
            continue
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Y = X_new + ((t - 1.0) / t_new) * (X_new - X)
        X, t = X_new, t_new
    return X, max_iter


def objective_value(Q, C, lam, V) -> float:
    Q = np.asarray(Q, dtype=float)
    C = np.asarray(C, dtype=float)
    k = C.shape[1]
    fit = C.T @ V - np.eye(k)
    return float(
        0.5 * np.trace(V.T @ Q @ V) + 0.5 * np.sum(fit**2) + lam * np.linalg.norm(V, axis=1).sum()
    )
