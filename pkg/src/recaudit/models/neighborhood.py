"""
User-based, item-based and trust-based k-nearest-neighbor recommenders.

Similarities are computed over co-rated entries only and damped by
``n / (n + shrinkage)`` where ``n`` is the co-rated count.  Full
similarity matrices are built densely at fit time; that costs
O(n^2 * m) for n anchors over m co-ordinates, which is a few seconds at
the ~1.4k users/items scale these models are meant for.

When no neighbor supports a (user, item) pair the score falls back to the
user's mean rating minus :data:`FALLBACK_OFFSET`, so unsupported items sort
after every supported one but lists still fill up deterministically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from numba import njit

from .base import ConfigError, Recommender

_log = logging.getLogger(__name__)

FALLBACK_OFFSET = 100.0
_VAR_EPS = 1e-12
SIM_DECIMALS = 12


def _damp(n, shrinkage):
    return n / (n + shrinkage) if shrinkage > 0 else 1.0


def pearson(a, b, shrinkage: float = 0.0) -> float:
    """Pearson correlation of two co-rated vectors, damped by shrinkage.

    Each vector is centered on its own mean over the co-rated support.
    Fewer than two co-rated entries, or a constant vector, give 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = len(a)
    if n < 2:
        return 0.0
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va <= _VAR_EPS * max(float(a @ a), 1.0) or vb <= _VAR_EPS * max(float(b @ b), 1.0):
        return 0.0
    return float(da @ db) / np.sqrt(va * vb) * _damp(n, shrinkage)


def cosine(a, b, shrinkage: float = 0.0) -> float:
    """Cosine similarity of two co-rated vectors, damped by shrinkage."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = len(a)
    if n == 0:
        return 0.0
    na = float(a @ a)
    nb = float(b @ b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / np.sqrt(na * nb) * _damp(n, shrinkage)


def similarity_matrix(rows: sps.spmatrix, kind: str = "pcc", shrinkage: float = 0.0) -> np.ndarray:
    """
    Pairwise similarity between the rows of a sparse rating matrix.

    Matches :func:`pearson` / :func:`cosine` applied to every pair's
    co-rated entries, rounded to ``SIM_DECIMALS`` places.  The diagonal is
    set to 0.
    """
    if kind not in ("pcc", "cos"):
        raise ConfigError(f"unknown similarity {kind!r}, expected 'pcc' or 'cos'")
    R = sps.csr_matrix(rows, dtype=np.float64)
    M = R.copy()
    M.data[:] = 1.0
    R2 = R.multiply(R).tocsr()
    N = (M @ M.T).toarray()
    Sxy = (R @ R.T).toarray()
    # Sx[a, b] = sum of a's ratings over items co-rated with b
    Sx = (R @ M.T).toarray()
    Sxx = (R2 @ M.T).toarray()
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "pcc":
            Sy = Sx.T
            Syy = Sxx.T
            cov = Sxy - Sx * Sy / N
            vx = Sxx - Sx * Sx / N
            vy = Syy - Sy * Sy / N
            ok = (N >= 2) & (vx > _VAR_EPS * np.maximum(Sxx, 1.0)) & (vy > _VAR_EPS * np.maximum(Syy, 1.0))
            W = np.where(ok, cov / np.sqrt(vx * vy), 0.0)
        else:
            ok = (N >= 1) & (Sxx > 0) & (Sxx.T > 0)
            W = np.where(ok, Sxy / np.sqrt(Sxx * Sxx.T), 0.0)
        if shrinkage > 0:
            W = W * (N / (N + shrinkage))
    np.fill_diagonal(W, 0.0)
    # weights equal in exact arithmetic must tie, so neighbor order does not
    # hinge on summation round-off
    return np.round(W, SIM_DECIMALS)


def neighbor_order(W: np.ndarray) -> np.ndarray:
    """Column indices of each row sorted by descending weight, ties by
    ascending index."""
    return np.argsort(-W, axis=1, kind="stable")


@dataclass(frozen=True, eq=False)
class SimilarityTable:
    """Top-k positive-weight neighbors of each anchor.

    ``indptr`` / ``neighbors`` / ``weights`` are in CSR layout; each row is
    sorted by descending weight, then ascending neighbor index.
    """

    indptr: np.ndarray
    neighbors: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_matrix(cls, W: np.ndarray, k: int) -> SimilarityTable:
        order = neighbor_order(W)[:, :k]
        w = np.take_along_axis(W, order, axis=1)
        keep = w > 0
        counts = keep.sum(axis=1)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return cls(indptr, order[keep].astype(np.int64), w[keep])

    def row(self, a: int) -> tuple[np.ndarray, np.ndarray]:
        sl = slice(self.indptr[a], self.indptr[a + 1])
        return self.neighbors[sl], self.weights[sl]

    def to_sparse(self, n: int) -> sps.csr_matrix:
        return sps.csr_matrix((self.weights, self.neighbors, self.indptr), shape=(n, n))


@njit(cache=True)
def _userknn_block(users, order, W, indptr, indices, data, means, n_items, k, offset):
    out = np.empty((len(users), n_items))
    num = np.empty(n_items)
    den = np.empty(n_items)
    cnt = np.empty(n_items, dtype=np.int64)
    for r in range(len(users)):
        u = users[r]
        num[:] = 0.0
        den[:] = 0.0
        cnt[:] = 0
        for pos in range(order.shape[1]):
            v = order[u, pos]
            w = W[u, v]
            if w <= 0.0:
                break
            mv = means[v]
            for p in range(indptr[v], indptr[v + 1]):
                i = indices[p]
                if cnt[i] < k:
                    num[i] += w * (data[p] - mv)
                    den[i] += w
                    cnt[i] += 1
        mu = means[u]
        for i in range(n_items):
            if cnt[i] > 0:
                out[r, i] = mu + num[i] / den[i]
            else:
                out[r, i] = mu - offset
    return out


class _KNNBase(Recommender):
    family = "neighborhood"

    def _check_common(self):
        if int(self.neighbors) < 1:
            raise ConfigError(f"{self.name}: neighbors must be >= 1")
        if float(getattr(self, "shrinkage", 0.0)) < 0:
            raise ConfigError(f"{self.name}: shrinkage must be >= 0")
        if getattr(self, "similarity", "pcc") not in ("pcc", "cos"):
            raise ConfigError(f"{self.name}: similarity must be 'pcc' or 'cos'")


class UserKNN(_KNNBase):
    """
    User-based collaborative filtering.

    For user ``u`` and item ``i`` the neighborhood is the ``neighbors``
    most similar users with positive similarity who rated ``i``; the score
    is ``u``'s mean plus the similarity-weighted average of the neighbors'
    mean-centered ratings.
    """

    name = "UserKNN"
    params = {"neighbors": 50, "shrinkage": 0.0, "similarity": "pcc"}

    def _fit(self, train, trust):
        self._check_common()
        self.means_ = train.user_means()
        self.sim_ = similarity_matrix(train.csr, self.similarity, float(self.shrinkage))
        self.order_ = neighbor_order(self.sim_)

    def score(self, users):
        m = self.train_.csr
        return _userknn_block(
            np.asarray(users, dtype=np.int64), self.order_, self.sim_,
            m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data,
            self.means_, self.train_.n_items, int(self.neighbors), FALLBACK_OFFSET,
        )


class ItemKNN(_KNNBase):
    """
    Item-based collaborative filtering.

    Each item keeps its ``neighbors`` most similar items (positive weights
    only).  The score for ``(u, i)`` is the similarity-weighted average of
    ``u``'s ratings on those neighbors of ``i`` that ``u`` has rated.
    """

    name = "ItemKNN"
    params = {"neighbors": 50, "shrinkage": 0.0, "similarity": "pcc"}

    def _fit(self, train, trust):
        self._check_common()
        self.means_ = train.user_means()
        W = similarity_matrix(train.csc.T, self.similarity, float(self.shrinkage))
        self.table_ = SimilarityTable.from_matrix(W, int(self.neighbors))
        # K[j, i] = w(i, j) for j in the neighborhood of i
        self.K_ = self.table_.to_sparse(train.n_items).T.tocsr()

    def score(self, users):
        R = self.train_.csr[np.asarray(users)]
        M = R.copy()
        M.data[:] = 1.0
        num = (R @ self.K_).toarray()
        den = (M @ self.K_).toarray()
        fallback = (self.means_[np.asarray(users)] - FALLBACK_OFFSET)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, num / den, fallback)


class TrustKNN(_KNNBase):
    """
    Trust-based neighborhood recommender.

    A user's neighbors are the rating-matrix users they trust directly,
    each with weight 1.  If there are more than ``neighbors`` of them, the
    ones sharing the most rated items are kept (ties by index).  Scores use
    the same mean-centered average as :class:`UserKNN`.  Trust is not
    propagated beyond direct edges.
    """

    name = "TrustKNN"
    uses_trust = True
    params = {"neighbors": 50}

    def _fit(self, train, trust):
        self._check_common()
        self.means_ = train.user_means()
        M = train.csr.copy()
        M.data[:] = 1.0
        k = int(self.neighbors)
        rows, cols = [], []
        for u in range(train.n_users):
            t = trust.trusted_raters(u) if u < trust.n_users else np.zeros(0, dtype=np.int64)
            if len(t) > k:
                shared = np.asarray(M[t].multiply(M[u]).sum(axis=1)).ravel()
                keep = np.lexsort((t, -shared))[:k]
                t = np.sort(t[keep])
            rows.extend([u] * len(t))
            cols.extend(t.tolist())
        n = train.n_users
        self.A_ = sps.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        self.A_.sort_indices()
        dev = train.csr.copy()
        dev.data = dev.data - np.repeat(self.means_, np.diff(dev.indptr))
        self.dev_ = dev
        self.mask_ = M

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.A_.indices[self.A_.indptr[u]:self.A_.indptr[u + 1]]

    def score(self, users):
        users = np.asarray(users)
        A = self.A_[users]
        num = (A @ self.dev_).toarray()
        den = (A @ self.mask_).toarray()
        mu = self.means_[users][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, mu + num / den, mu - FALLBACK_OFFSET)
