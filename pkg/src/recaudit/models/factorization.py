"""
Latent factor models trained by stochastic gradient descent.

Every model minimizes a sum of per-example losses, and regularization is
part of each example's loss (a parameter touched by ``n`` training ratings
is penalized ``n`` times).  That makes each SGD step an exact step along
the gradient of one term, so the full-batch ``*_objective`` and
``*_gradient`` functions below describe precisely what the numba kernels
optimize.  The gradient functions are used for finite-difference checks
and are not on the training path.

Update schedule: each epoch visits the training ratings in a seeded random
order, single-threaded, so a fixed seed reproduces parameters bit for bit.
Trust terms (SoReg, SocialMF) are applied in a second, fixed-order pass
after the rating pass of every epoch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sps
from numba import njit

from ..dataset import RatingMatrix
from .base import ConfigError, Recommender, TrainingError

_log = logging.getLogger(__name__)

INIT_SCALE = 0.01


@dataclass(eq=False)
class FactorState:
    """Parameters of a latent factor model.

    ``Y`` (implicit item factors) is only used by SVD++.
    """

    mu: float
    bu: np.ndarray
    bi: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    Y: np.ndarray | None = None

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"bu": self.bu, "bi": self.bi, "P": self.P, "Q": self.Q}
        if self.Y is not None:
            out["Y"] = self.Y
        return out

    def copy(self) -> FactorState:
        return replace(self, **{k: v.copy() for k, v in self.arrays().items()})

    def is_finite(self) -> bool:
        return np.isfinite(self.mu) and all(np.all(np.isfinite(a)) for a in self.arrays().values())


def init_state(n_users, n_items, d, mu, rng, implicit=False) -> FactorState:
    """Factors uniform in (-0.01, 0.01), biases zero.  Draw order is P, Q,
    then Y."""
    P = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n_users, d))
    Q = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n_items, d))
    Y = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(n_items, d)) if implicit else None
    return FactorState(float(mu), np.zeros(n_users), np.zeros(n_items), P, Q, Y)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass(frozen=True)
class Regs:
    user: float = 0.01
    item: float = 0.01
    bias: float = 0.01
    implicit: float = 0.01


# --------------------------------------------------------------------------
# objectives and gradients


def _entries(train: RatingMatrix):
    return train.users, train.items, train.values


def biasedmf_predict(state: FactorState, users, items):
    return state.mu + state.bu[users] + state.bi[items] + np.einsum(
        "ij,ij->i", state.P[users], state.Q[items])


def biasedmf_objective(state: FactorState, train: RatingMatrix, regs: Regs) -> float:
    u, i, r = _entries(train)
    e = r - biasedmf_predict(state, u, i)
    return 0.5 * float(
        e @ e
        + regs.bias * (np.sum(state.bu[u] ** 2) + np.sum(state.bi[i] ** 2))
        + regs.user * np.sum(state.P[u] ** 2)
        + regs.item * np.sum(state.Q[i] ** 2)
    )


def biasedmf_gradient(state: FactorState, train: RatingMatrix, regs: Regs) -> dict:
    u, i, r = _entries(train)
    e = r - biasedmf_predict(state, u, i)
    g = {k: np.zeros_like(v) for k, v in state.arrays().items()}
    np.add.at(g["bu"], u, -e + regs.bias * state.bu[u])
    np.add.at(g["bi"], i, -e + regs.bias * state.bi[i])
    np.add.at(g["P"], u, -e[:, None] * state.Q[i] + regs.user * state.P[u])
    np.add.at(g["Q"], i, -e[:, None] * state.P[u] + regs.item * state.Q[i])
    return g


def _implicit_norm(train: RatingMatrix) -> sps.csr_matrix:
    """Rows of the binary matrix scaled by ``|N(u)|^-1/2``."""
    M = train.csr.copy()
    M.data[:] = 1.0
    n = np.diff(M.indptr)
    s = np.zeros(train.n_users)
    s[n > 0] = 1.0 / np.sqrt(n[n > 0])
    return sps.diags(s) @ M


def svdpp_user_vectors(state: FactorState, train: RatingMatrix, users=None) -> np.ndarray:
    Mn = _implicit_norm(train)
    if users is not None:
        Mn = Mn[users]
        return state.P[users] + Mn @ state.Y
    return state.P + Mn @ state.Y


def svdpp_objective(state: FactorState, train: RatingMatrix, regs: Regs) -> float:
    u, i, r = _entries(train)
    Z = svdpp_user_vectors(state, train)
    e = r - (state.mu + state.bu[u] + state.bi[i] + np.einsum("ij,ij->i", Z[u], state.Q[i]))
    counts = train.user_counts()
    M = _implicit_norm(train)
    M.data[:] = 1.0
    ysq = M @ np.sum(state.Y ** 2, axis=1)  # per user: sum over N(u) of |y_j|^2
    return 0.5 * float(
        e @ e
        + regs.bias * (np.sum(state.bu[u] ** 2) + np.sum(state.bi[i] ** 2))
        + regs.user * np.sum(state.P[u] ** 2)
        + regs.item * np.sum(state.Q[i] ** 2)
        + regs.implicit * float(counts @ ysq)
    )


def svdpp_gradient(state: FactorState, train: RatingMatrix, regs: Regs) -> dict:
    u, i, r = _entries(train)
    Z = svdpp_user_vectors(state, train)
    e = r - (state.mu + state.bu[u] + state.bi[i] + np.einsum("ij,ij->i", Z[u], state.Q[i]))
    g = {k: np.zeros_like(v) for k, v in state.arrays().items()}
    np.add.at(g["bu"], u, -e + regs.bias * state.bu[u])
    np.add.at(g["bi"], i, -e + regs.bias * state.bi[i])
    np.add.at(g["P"], u, -e[:, None] * state.Q[i] + regs.user * state.P[u])
    np.add.at(g["Q"], i, -e[:, None] * Z[u] + regs.item * state.Q[i])
    # dL/dy_j = sum over ratings (u, i) with j in N(u) of -e s_u q_i + reg y_j
    Mn = _implicit_norm(train)
    E = np.zeros((train.n_users, state.Q.shape[1]))
    np.add.at(E, u, -e[:, None] * state.Q[i])
    M = Mn.copy()
    M.data[:] = 1.0
    counts = train.user_counts().astype(np.float64)
    g["Y"] = Mn.T @ E + regs.implicit * (M.T @ counts)[:, None] * state.Y
    return g


def listrank_objective(state: FactorState, train: RatingMatrix, regs: Regs) -> float:
    m = train.csr
    total = 0.0
    for u in range(train.n_users):
        sl = slice(m.indptr[u], m.indptr[u + 1])
        items, r = m.indices[sl], m.data[sl]
        if len(items) == 0:
            continue
        s = _sigmoid(state.Q[items] @ state.P[u])
        t = np.exp(_sigmoid(r))
        t /= t.sum()
        log_a = s - np.log(np.sum(np.exp(s)))
        total += -float(t @ log_a)
        total += 0.5 * regs.user * float(state.P[u] @ state.P[u])
        total += 0.5 * regs.item * float(np.sum(state.Q[items] ** 2))
    return total


def listrank_gradient(state: FactorState, train: RatingMatrix, regs: Regs) -> dict:
    m = train.csr
    g = {k: np.zeros_like(v) for k, v in state.arrays().items()}
    for u in range(train.n_users):
        sl = slice(m.indptr[u], m.indptr[u + 1])
        items, r = m.indices[sl], m.data[sl]
        if len(items) == 0:
            continue
        s = _sigmoid(state.Q[items] @ state.P[u])
        a = np.exp(s)
        a /= a.sum()
        t = np.exp(_sigmoid(r))
        t /= t.sum()
        c = (a - t) * s * (1.0 - s)
        g["P"][u] += c @ state.Q[items] + regs.user * state.P[u]
        g["Q"][items] += c[:, None] * state.P[u] + regs.item * state.Q[items]
    return g


def soreg_objective(state, train, regs, edges, beta) -> float:
    src, dst, sim = edges
    diff = state.P[src] - state.P[dst]
    return biasedmf_objective(state, train, regs) + 0.5 * beta * float(sim @ np.sum(diff ** 2, axis=1))


def soreg_gradient(state, train, regs, edges, beta) -> dict:
    src, dst, sim = edges
    g = biasedmf_gradient(state, train, regs)
    diff = beta * sim[:, None] * (state.P[src] - state.P[dst])
    np.add.at(g["P"], src, diff)
    np.add.at(g["P"], dst, -diff)
    return g


def scale_ratings(r):
    """Map ratings in [1, 5] onto [0, 1]."""
    return (np.asarray(r) - 1.0) / 4.0


def socialmf_objective(state, train, regs, friends, beta) -> float:
    u, i, r = _entries(train)
    x = np.einsum("ij,ij->i", state.P[u], state.Q[i])
    e = _sigmoid(x) - scale_ratings(r)
    total = 0.5 * float(e @ e + regs.user * np.sum(state.P[u] ** 2) + regs.item * np.sum(state.Q[i] ** 2))
    indptr, idx = friends
    for v in range(len(indptr) - 1):
        f = idx[indptr[v]:indptr[v + 1]]
        if len(f):
            d = state.P[v] - state.P[f].mean(axis=0)
            total += 0.5 * beta * float(d @ d)
    return total


def socialmf_gradient(state, train, regs, friends, beta) -> dict:
    u, i, r = _entries(train)
    x = np.einsum("ij,ij->i", state.P[u], state.Q[i])
    s = _sigmoid(x)
    c = (s - scale_ratings(r)) * s * (1.0 - s)
    g = {k: np.zeros_like(v) for k, v in state.arrays().items()}
    np.add.at(g["P"], u, c[:, None] * state.Q[i] + regs.user * state.P[u])
    np.add.at(g["Q"], i, c[:, None] * state.P[u] + regs.item * state.Q[i])
    indptr, idx = friends
    for v in range(len(indptr) - 1):
        f = idx[indptr[v]:indptr[v + 1]]
        if len(f):
            d = beta * (state.P[v] - state.P[f].mean(axis=0))
            g["P"][v] += d
            np.add.at(g["P"], f, -d / len(f))
    return g


# --------------------------------------------------------------------------
# SGD kernels


@njit(cache=True)
def _biased_epoch(order, users, items, values, mu, bu, bi, P, Q, lr, reg_u, reg_i, reg_b):
    d = P.shape[1]
    for e_idx in order:
        u = users[e_idx]
        i = items[e_idx]
        pred = mu + bu[u] + bi[i]
        for f in range(d):
            pred += P[u, f] * Q[i, f]
        e = values[e_idx] - pred
        bu[u] += lr * (e - reg_b * bu[u])
        bi[i] += lr * (e - reg_b * bi[i])
        for f in range(d):
            pu = P[u, f]
            qi = Q[i, f]
            P[u, f] = pu + lr * (e * qi - reg_u * pu)
            Q[i, f] = qi + lr * (e * pu - reg_i * qi)


@njit(cache=True)
def _svdpp_epoch(order, users, items, values, mu, bu, bi, P, Q, Y, indptr, nbrs,
                 lr, reg_u, reg_i, reg_b, reg_y):
    d = P.shape[1]
    z = np.empty(d)
    for e_idx in order:
        u = users[e_idx]
        i = items[e_idx]
        lo = indptr[u]
        hi = indptr[u + 1]
        s = 1.0 / np.sqrt(hi - lo) if hi > lo else 0.0
        for f in range(d):
            acc = 0.0
            for p in range(lo, hi):
                acc += Y[nbrs[p], f]
            z[f] = P[u, f] + s * acc
        pred = mu + bu[u] + bi[i]
        for f in range(d):
            pred += z[f] * Q[i, f]
        e = values[e_idx] - pred
        bu[u] += lr * (e - reg_b * bu[u])
        bi[i] += lr * (e - reg_b * bi[i])
        for f in range(d):
            qi = Q[i, f]
            pu = P[u, f]
            P[u, f] = pu + lr * (e * qi - reg_u * pu)
            Q[i, f] = qi + lr * (e * z[f] - reg_i * qi)
            g = e * s * qi
            for p in range(lo, hi):
                j = nbrs[p]
                Y[j, f] += lr * (g - reg_y * Y[j, f])


@njit(cache=True)
def _listrank_epoch(user_order, indptr, nbrs, values, P, Q, lr, reg_u, reg_i):
    d = P.shape[1]
    for u in user_order:
        lo = indptr[u]
        hi = indptr[u + 1]
        n = hi - lo
        if n == 0:
            continue
        s = np.empty(n)
        a = np.empty(n)
        t = np.empty(n)
        asum = 0.0
        tsum = 0.0
        for k in range(n):
            j = nbrs[lo + k]
            x = 0.0
            for f in range(d):
                x += P[u, f] * Q[j, f]
            s[k] = 1.0 / (1.0 + np.exp(-x))
            a[k] = np.exp(s[k])
            asum += a[k]
            t[k] = np.exp(1.0 / (1.0 + np.exp(-values[lo + k])))
            tsum += t[k]
        gp = np.zeros(d)
        for k in range(n):
            j = nbrs[lo + k]
            c = (a[k] / asum - t[k] / tsum) * s[k] * (1.0 - s[k])
            for f in range(d):
                gp[f] += c * Q[j, f]
        for k in range(n):
            j = nbrs[lo + k]
            c = (a[k] / asum - t[k] / tsum) * s[k] * (1.0 - s[k])
            for f in range(d):
                Q[j, f] -= lr * (c * P[u, f] + reg_i * Q[j, f])
        for f in range(d):
            P[u, f] -= lr * (gp[f] + reg_u * P[u, f])


@njit(cache=True)
def _social_edges(src, dst, sim, P, lr, beta):
    d = P.shape[1]
    for k in range(len(src)):
        a = src[k]
        b = dst[k]
        w = lr * beta * sim[k]
        for f in range(d):
            diff = P[a, f] - P[b, f]
            P[a, f] -= w * diff
            P[b, f] += w * diff


@njit(cache=True)
def _logistic_epoch(order, users, items, values01, P, Q, lr, reg_u, reg_i):
    d = P.shape[1]
    for e_idx in order:
        u = users[e_idx]
        i = items[e_idx]
        x = 0.0
        for f in range(d):
            x += P[u, f] * Q[i, f]
        s = 1.0 / (1.0 + np.exp(-x))
        c = (s - values01[e_idx]) * s * (1.0 - s)
        for f in range(d):
            pu = P[u, f]
            qi = Q[i, f]
            P[u, f] = pu - lr * (c * qi + reg_u * pu)
            Q[i, f] = qi - lr * (c * pu + reg_i * qi)


@njit(cache=True)
def _trust_average(indptr, friends, P, lr, beta):
    d = P.shape[1]
    mean = np.empty(d)
    for v in range(len(indptr) - 1):
        lo = indptr[v]
        hi = indptr[v + 1]
        n = hi - lo
        if n == 0:
            continue
        for f in range(d):
            acc = 0.0
            for p in range(lo, hi):
                acc += P[friends[p], f]
            mean[f] = P[v, f] - acc / n
        for f in range(d):
            g = beta * mean[f]
            P[v, f] -= lr * g
            for p in range(lo, hi):
                P[friends[p], f] += lr * g / n


# --------------------------------------------------------------------------
# models

_FACTOR_PARAMS = {
    "factors": 10,
    "learn_rate": 0.01,
    "iterations": 30,
    "reg_user": 0.01,
    "reg_item": 0.01,
    "seed": 0,
}


def _csr_int(m):
    return m.indptr.astype(np.int64), m.indices.astype(np.int64)


def profile_cosine(train: RatingMatrix, src, dst) -> np.ndarray:
    """Cosine similarity of the rating profiles of each (src, dst) pair over
    their co-rated items, floored at 0."""
    R = train.csr
    M = R.copy()
    M.data[:] = 1.0
    R2 = R.multiply(R).tocsr()
    xy = np.asarray(R[src].multiply(R[dst]).sum(axis=1)).ravel()
    xx = np.asarray(R2[src].multiply(M[dst]).sum(axis=1)).ravel()
    yy = np.asarray(M[src].multiply(R2[dst]).sum(axis=1)).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where((xx > 0) & (yy > 0), xy / np.sqrt(xx * yy), 0.0)
    return np.maximum(s, 0.0)


class _FactorModel(Recommender):
    """Shared training loop: seeded init, per-epoch shuffle, finiteness
    check, and a per-epoch trace."""

    params = _FACTOR_PARAMS
    implicit = False

    def _check(self):
        if int(self.factors) < 0:
            raise ConfigError(f"{self.name}: factors must be >= 0")
        if int(self.iterations) < 0:
            raise ConfigError(f"{self.name}: iterations must be >= 0")
        if float(self.learn_rate) <= 0:
            raise ConfigError(f"{self.name}: learn_rate must be positive")
        for k in self.params:
            if k.startswith("reg_") and float(getattr(self, k)) < 0:
                raise ConfigError(f"{self.name}: {k} must be >= 0")

    @property
    def regs(self) -> Regs:
        return Regs(
            float(self.reg_user), float(self.reg_item),
            float(getattr(self, "reg_bias", 0.0)), float(getattr(self, "reg_implicit", 0.0)),
        )

    def initial_state(self, train: RatingMatrix, rng) -> FactorState:
        return init_state(train.n_users, train.n_items, int(self.factors),
                          train.values.mean(), rng, implicit=self.implicit)

    def _fit(self, train, trust):
        self._check()
        rng = np.random.default_rng(int(self.seed))
        self.state_ = self.initial_state(train, rng)
        self._prepare(train, trust)
        self.trace_ = []
        for epoch in range(int(self.iterations)):
            order = rng.permutation(train.nnz)
            self._epoch(order, train)
            if not self.state_.is_finite():
                raise TrainingError(self.name, epoch)
            self.trace_.append(self._trace_value(train))

    def _prepare(self, train, trust):
        pass

    def _epoch(self, order, train):
        raise NotImplementedError

    def _trace_value(self, train) -> float:
        u, i, r = _entries(train)
        e = r - self.predict_entries(u, i)
        return float(np.sqrt(np.mean(e ** 2)))

    def predict_entries(self, users, items) -> np.ndarray:
        s = self.score(np.arange(self.train_.n_users))
        return s[users, items]


class BiasedMF(_FactorModel):
    """
    Matrix factorization with user and item biases.

    Predicts ``mu + b_u + b_i + p_u . q_i`` and minimizes squared error
    with L2 penalties ``reg_user``, ``reg_item`` and ``reg_bias``.
    ``mu`` is fixed at the training mean.  ``trace_`` holds the training
    RMSE after each epoch.
    """

    name = "BiasedMF"
    params = {**_FACTOR_PARAMS, "reg_bias": 0.01}

    def _epoch(self, order, train):
        s = self.state_
        r = self.regs
        _biased_epoch(order, train.users, train.items, train.values, s.mu, s.bu, s.bi,
                      s.P, s.Q, float(self.learn_rate), r.user, r.item, r.bias)

    def predict_entries(self, users, items):
        return biasedmf_predict(self.state_, users, items)

    def score(self, users):
        s = self.state_
        users = np.asarray(users)
        return s.mu + s.bu[users][:, None] + s.bi[None, :] + s.P[users] @ s.Q.T

    def objective(self, state: FactorState | None = None) -> float:
        return biasedmf_objective(state or self.state_, self.train_, self.regs)

    def gradient(self, state: FactorState | None = None) -> dict:
        return biasedmf_gradient(state or self.state_, self.train_, self.regs)


class SVDpp(_FactorModel):
    """
    SVD++: biased MF whose user vector adds the normalized sum of implicit
    factors ``y_j`` over the items the user rated in training.
    """

    name = "SVD++"
    implicit = True
    params = {**_FACTOR_PARAMS, "reg_bias": 0.01, "reg_implicit": 0.01}

    def _prepare(self, train, trust):
        self.nbr_indptr_, self.nbrs_ = _csr_int(train.csr)

    def _epoch(self, order, train):
        s = self.state_
        r = self.regs
        _svdpp_epoch(order, train.users, train.items, train.values, s.mu, s.bu, s.bi,
                     s.P, s.Q, s.Y, self.nbr_indptr_, self.nbrs_, float(self.learn_rate),
                     r.user, r.item, r.bias, r.implicit)

    def predict_entries(self, users, items):
        Z = svdpp_user_vectors(self.state_, self.train_)
        s = self.state_
        return s.mu + s.bu[users] + s.bi[items] + np.einsum("ij,ij->i", Z[users], s.Q[items])

    def score(self, users):
        s = self.state_
        users = np.asarray(users)
        Z = svdpp_user_vectors(s, self.train_, users)
        return s.mu + s.bu[users][:, None] + s.bi[None, :] + Z @ s.Q.T

    def objective(self, state=None):
        return svdpp_objective(state or self.state_, self.train_, self.regs)

    def gradient(self, state=None):
        return svdpp_gradient(state or self.state_, self.train_, self.regs)


class ListRankMF(_FactorModel):
    """
    List-wise matrix factorization.

    For each user, minimizes the cross-entropy between the top-one
    probabilities (softmax over the user's rated items) of the logistic of
    the true ratings and of the logistic of ``p_u . q_i``.  Updates are made
    one user at a time, users in seeded random order.  Items are scored by
    the raw dot product; ``trace_`` holds the objective per epoch.
    """

    name = "ListRankMF"

    def _prepare(self, train, trust):
        m = train.csr
        self.indptr_, self.nbrs_ = _csr_int(m)
        self.vals_ = m.data.astype(np.float64)

    def _fit(self, train, trust):
        self._check()
        rng = np.random.default_rng(int(self.seed))
        self.state_ = self.initial_state(train, rng)
        self._prepare(train, trust)
        self.trace_ = []
        for epoch in range(int(self.iterations)):
            order = rng.permutation(train.n_users)
            s = self.state_
            _listrank_epoch(order, self.indptr_, self.nbrs_, self.vals_, s.P, s.Q,
                            float(self.learn_rate), float(self.reg_user), float(self.reg_item))
            if not s.is_finite():
                raise TrainingError(self.name, epoch)
            self.trace_.append(self.objective())

    def score(self, users):
        s = self.state_
        return s.P[np.asarray(users)] @ s.Q.T

    def objective(self, state=None):
        return listrank_objective(state or self.state_, self.train_, self.regs)

    def gradient(self, state=None):
        return listrank_gradient(state or self.state_, self.train_, self.regs)


class SoReg(BiasedMF):
    """
    Biased MF with social regularization.

    Adds ``reg_social / 2 * sum over trust edges (u, f) of
    sim(u, f) * |p_u - p_f|^2`` where ``sim`` is the cosine of the two
    users' rating profiles over co-rated items, floored at 0.  Only edges
    between rating-matrix users are used.  With ``reg_social = 0`` training
    is identical to :class:`BiasedMF` under the same seed.
    """

    name = "SoReg"
    uses_trust = True
    params = {**BiasedMF.params, "reg_social": 0.01}

    def _prepare(self, train, trust):
        src, dst = trust.internal_edges()
        self.edges_ = (src, dst, profile_cosine(train, src, dst))

    def _epoch(self, order, train):
        super()._epoch(order, train)
        src, dst, sim = self.edges_
        _social_edges(src, dst, sim, self.state_.P, float(self.learn_rate), float(self.reg_social))

    def objective(self, state=None):
        return soreg_objective(state or self.state_, self.train_, self.regs,
                               self.edges_, float(self.reg_social))

    def gradient(self, state=None):
        return soreg_gradient(state or self.state_, self.train_, self.regs,
                              self.edges_, float(self.reg_social))


class SocialMF(_FactorModel):
    """
    Social matrix factorization with trust propagation.

    Ratings are mapped onto [0, 1] and fitted by ``sigmoid(p_u . q_i)``;
    each user's factor vector is pulled towards the mean factor vector of
    the rating-matrix users they trust, with weight ``reg_social``.  Users
    who trust nobody skip that term.  Scores are mapped back to the rating
    scale.
    """

    name = "SocialMF"
    uses_trust = True
    params = {**_FACTOR_PARAMS, "reg_social": 0.01}

    def _prepare(self, train, trust):
        n = train.n_users
        A = trust.out_csr[:n, :n].tocsr()
        A.sort_indices()
        self.friends_ = (A.indptr.astype(np.int64), A.indices.astype(np.int64))
        self.values01_ = scale_ratings(train.values)

    def _epoch(self, order, train):
        s = self.state_
        _logistic_epoch(order, train.users, train.items, self.values01_, s.P, s.Q,
                        float(self.learn_rate), float(self.reg_user), float(self.reg_item))
        _trust_average(self.friends_[0], self.friends_[1], s.P, float(self.learn_rate),
                       float(self.reg_social))

    def predict_entries(self, users, items):
        s = self.state_
        return 1.0 + 4.0 * _sigmoid(np.einsum("ij,ij->i", s.P[users], s.Q[items]))

    def score(self, users):
        s = self.state_
        return 1.0 + 4.0 * _sigmoid(s.P[np.asarray(users)] @ s.Q.T)

    def objective(self, state=None):
        return socialmf_objective(state or self.state_, self.train_, self.regs,
                                  self.friends_, float(self.reg_social))

    def gradient(self, state=None):
        return socialmf_gradient(state or self.state_, self.train_, self.regs,
                                 self.friends_, float(self.reg_social))
