"""
Sparse linear method (SLIM) for top-N recommendation.

Each item column ``a_j`` of the binary training matrix ``A`` is regressed
on all other columns::

    min_w  1/2 |a_j - A w|^2 + l2/2 |w|^2 + l1 |w|_1,   w >= 0, w_j = 0

by cyclic coordinate descent on the Gram matrix ``A^T A``.  Columns are
independent; scores are ``A @ W``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .base import ConfigError, Recommender


@njit(cache=True)
def _cd_column(G, j, l1, l2, tol, max_sweeps, w, Gw):
    """Solve one column in place; returns the number of sweeps used."""
    m = G.shape[0]
    for sweep in range(max_sweeps):
        delta = 0.0
        for k in range(m):
            if k == j:
                continue
            old = w[k]
            rho = G[k, j] - Gw[k] + G[k, k] * old
            den = G[k, k] + l2
            new = (rho - l1) / den if den > 0.0 else 0.0
            if new < 0.0:
                new = 0.0
            if new != old:
                step = new - old
                for p in range(m):
                    Gw[p] += step * G[p, k]
                w[k] = new
                if abs(step) > delta:
                    delta = abs(step)
        if delta < tol:
            return sweep + 1
    return max_sweeps


@njit(cache=True)
def _cd_all(G, l1, l2, tol, max_sweeps):
    m = G.shape[0]
    W = np.zeros((m, m))
    sweeps = np.zeros(m, dtype=np.int64)
    w = np.zeros(m)
    Gw = np.zeros(m)
    for j in range(m):
        w[:] = 0.0
        Gw[:] = 0.0
        sweeps[j] = _cd_column(G, j, l1, l2, tol, max_sweeps, w, Gw)
        W[:, j] = w
    return W, sweeps


def slim_objective(A, W, l1, l2) -> float:
    """Total SLIM objective over all columns (``A`` dense or sparse)."""
    A = np.asarray(A.todense()) if hasattr(A, "todense") else np.asarray(A, dtype=np.float64)
    R = A - A @ W
    return 0.5 * float(np.sum(R * R)) + 0.5 * l2 * float(np.sum(W * W)) + l1 * float(np.sum(np.abs(W)))


def fit_slim_weights(A, l1: float, l2: float, tol: float = 1e-4, max_sweeps: int = 100):
    """Coordinate-descent SLIM weights for binary matrix ``A``.

    Returns ``(W, sweeps)`` where ``sweeps[j]`` is the number of passes
    column ``j`` needed.
    """
    if l1 < 0 or l2 < 0:
        raise ConfigError("SLIM penalties must be >= 0")
    G = (A.T @ A)
    G = np.asarray(G.todense() if hasattr(G, "todense") else G, dtype=np.float64)
    W, sweeps = _cd_all(G, float(l1), float(l2), float(tol), int(max_sweeps))
    np.fill_diagonal(W, 0.0)
    return W, sweeps


class SLIM(Recommender):
    """Sparse linear method with non-negative, zero-diagonal item weights."""

    name = "SLIM"
    params = {"l1": 0.5, "l2": 0.5, "tol": 1e-4, "max_sweeps": 100}

    def _fit(self, train, trust):
        A = train.csr.copy()
        A.data[:] = 1.0
        self.A_ = A
        self.W_, self.sweeps_ = fit_slim_weights(
            A, float(self.l1), float(self.l2), float(self.tol), int(self.max_sweeps))

    def score(self, users):
        return np.asarray(self.A_[np.asarray(users)] @ self.W_)

    def objective(self) -> float:
        return slim_objective(self.A_, self.W_, float(self.l1), float(self.l2))
