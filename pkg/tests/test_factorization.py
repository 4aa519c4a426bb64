from __future__ import annotations

import numpy as np
import oracles
import pytest
from conftest import random_ratings

from recaudit.dataset import TrustGraph, ratings_from_arrays
from recaudit.models import (
    ALGORITHMS,
    BiasedMF,
    ListRankMF,
    SocialMF,
    SoReg,
    SVDpp,
    TrainingError,
    make_model,
)
from recaudit.models.factorization import (
    Regs,
    biasedmf_gradient,
    listrank_gradient,
    listrank_objective,
    socialmf_gradient,
    socialmf_objective,
    svdpp_gradient,
    svdpp_user_vectors,
)


def trust_for(n_users, rng, n_edges=None):
    n_edges = n_edges or 3 * n_users
    edges = set()
    while len(edges) < n_edges:
        a, b = rng.integers(n_users, size=2)
        if a != b:
            edges.add((int(a), int(b)))
    edges = sorted(edges)
    return TrustGraph(n_users, (), [a for a, _ in edges], [b for _, b in edges])


def no_trust(n_users):
    return TrustGraph(n_users, (), [], [])


# gradient checks ----------------------------------------------------------------

GRADIENT_CASES = [
    (BiasedMF, {"reg_bias": 0.05}, ("bu", "bi", "P", "Q")),
    (SVDpp, {"reg_bias": 0.05, "reg_implicit": 0.07}, ("bu", "bi", "P", "Q", "Y")),
    (ListRankMF, {}, ("P", "Q")),
    (SoReg, {"reg_social": 0.8}, ("bu", "bi", "P", "Q")),
    (SocialMF, {"reg_social": 0.8}, ("P", "Q")),
]


def probe_gradient(model, groups, rng, n=20, h=1e-5):
    """Largest relative error between analytic and central-difference
    partial derivatives over ``n`` random parameters."""
    state = model.state_.copy()
    for g in groups:
        a = state.arrays()[g]
        a[...] = rng.normal(0, 0.3, size=a.shape)
    grad = model.gradient(state)
    worst = 0.0
    for _ in range(n):
        g = groups[rng.integers(len(groups))]
        idx = tuple(int(rng.integers(s)) for s in state.arrays()[g].shape)
        fd = oracles.central_difference(model.objective, state, g, idx, h)
        an = grad[g][idx]
        worst = max(worst, abs(an - fd) / max(abs(an), abs(fd), 1e-6))
    return worst


@pytest.mark.parametrize("cls,params,groups", GRADIENT_CASES, ids=lambda x: getattr(x, "name", ""))
def test_gradient_matches_finite_differences(cls, params, groups, rng):
    train = random_ratings(rng, 12, 10, density=0.5)
    model = cls(factors=3, iterations=1, reg_user=0.03, reg_item=0.02, **params)
    model.fit(train, trust_for(12, rng))
    assert probe_gradient(model, groups, rng) < 1e-4


# single SGD steps are gradient steps ------------------------------------------------


def first_state(model, train):
    return model.initial_state(train, np.random.default_rng(int(model.seed)))


@pytest.mark.parametrize("cls,grad", [(BiasedMF, biasedmf_gradient), (SVDpp, svdpp_gradient)])
def test_one_rating_epoch_is_gradient_step(cls, grad):
    train = ratings_from_arrays([0], [0], [4.0], 1, 1)
    model = cls(factors=4, iterations=1, learn_rate=0.1, reg_user=0.3, reg_item=0.2)
    s0 = first_state(model, train)
    # with mu at the only rating the error is driven by the factors alone
    s0.mu = 3.5
    model.fit(train)
    model.state_ = s0.copy()
    model._epoch(np.array([0]), train)
    g = grad(s0, train, model.regs)
    for k, a in model.state_.arrays().items():
        assert np.allclose(a, s0.arrays()[k] - 0.1 * g[k], atol=1e-15, rtol=0), k


def test_listrank_epoch_is_gradient_step(rng):
    train = ratings_from_arrays([0, 0, 0, 0], [0, 1, 2, 3], [5, 1, 3, 4], 1, 4)
    model = ListRankMF(factors=3, iterations=1, learn_rate=0.5).fit(train)
    s0 = first_state(model, train)
    g = listrank_gradient(s0, train, model.regs)
    for k in ("P", "Q"):
        assert np.allclose(model.state_.arrays()[k], s0.arrays()[k] - 0.5 * g[k], atol=1e-15, rtol=0)


def test_socialmf_epoch_is_gradient_step():
    train = ratings_from_arrays([0], [0], [4.0], 1, 1)
    model = SocialMF(factors=3, iterations=1, learn_rate=0.7).fit(train, no_trust(1))
    s0 = first_state(model, train)
    g = socialmf_gradient(s0, train, model.regs, model.friends_, 0.01)
    for k in ("P", "Q"):
        assert np.allclose(model.state_.arrays()[k], s0.arrays()[k] - 0.7 * g[k], atol=1e-15, rtol=0)


# BiasedMF -------------------------------------------------------------------------


def test_zero_factors_is_bias_model(rng):
    train = random_ratings(rng, 10, 8)
    m = BiasedMF(factors=0, iterations=20).fit(train)
    s = m.state_
    assert s.P.shape == (10, 0)
    expect = s.mu + s.bu[:, None] + s.bi[None, :]
    assert np.array_equal(m.score(np.arange(10)), expect)


def test_rank_one_recovery():
    g = np.random.default_rng(0)
    a = g.uniform(-1, 1, 30)
    b = g.uniform(-1, 1, 30)
    R = 3.0 + np.outer(a, b)
    u, i = np.divmod(np.arange(900), 30)
    train = ratings_from_arrays(u, i, R[u, i], 30, 30)
    m = BiasedMF(factors=2, iterations=100, learn_rate=0.05, reg_user=0.0, reg_item=0.0,
                 reg_bias=0.0, seed=1).fit(train)
    assert m.trace_[-1] < 0.05
    assert len(m.trace_) == 100


def test_determinism(rng):
    train = random_ratings(rng, 15, 12)
    t = trust_for(15, rng)
    for name in ("BiasedMF", "SVD++", "ListRankMF", "SoReg", "SocialMF"):
        a = make_model(name, {"iterations": 3, "seed": 9}).fit(train, t).state_
        b = make_model(name, {"iterations": 3, "seed": 9}).fit(train, t).state_
        for k in a.arrays():
            assert np.array_equal(a.arrays()[k], b.arrays()[k]), (name, k)


def test_seed_matters(rng):
    train = random_ratings(rng, 15, 12)
    a = BiasedMF(iterations=2, seed=1).fit(train).state_.P
    b = BiasedMF(iterations=2, seed=2).fit(train).state_.P
    assert not np.array_equal(a, b)


def test_divergence_reports_epoch(rng):
    train = random_ratings(rng, 15, 12)
    with pytest.raises(TrainingError) as e:
        BiasedMF(learn_rate=50.0, iterations=50).fit(train)
    assert e.value.epoch >= 0
    assert "epoch" in str(e.value)


@pytest.mark.parametrize("key,value", [("factors", -1), ("learn_rate", 0.0), ("reg_user", -0.1)])
def test_bad_hyperparameters(rng, key, value):
    from recaudit.models import ConfigError

    with pytest.raises(ConfigError):
        BiasedMF(**{key: value}).fit(random_ratings(rng, 4, 4))


@pytest.mark.parametrize("name", [n for n, c in ALGORITHMS.items() if c.family == "model"])
def test_scores_finite(name, small_data):
    m = make_model(name, {"iterations": 2} if "iterations" in ALGORITHMS[name].params else {})
    m.fit(small_data.ratings, small_data.trust)
    assert np.all(np.isfinite(m.score(np.arange(small_data.ratings.n_users))))


# SVD++ --------------------------------------------------------------------------


def test_svdpp_without_implicit_is_biasedmf(rng):
    train = random_ratings(rng, 10, 8)
    svd = SVDpp(factors=3, iterations=3).fit(train)
    svd.state_.Y[:] = 0.0
    mf = BiasedMF(factors=3, iterations=0).fit(train)
    mf.state_ = svd.state_
    assert np.max(np.abs(svd.score(np.arange(10)) - mf.score(np.arange(10)))) < 1e-12


def test_svdpp_single_implicit_item():
    train = ratings_from_arrays([0, 1, 1], [2, 0, 1], [4, 3, 5], 2, 3)
    m = SVDpp(factors=2, iterations=2).fit(train)
    s = m.state_
    z = svdpp_user_vectors(s, train)
    assert np.allclose(z[0], s.P[0] + s.Y[2], atol=1e-15)
    assert np.allclose(z[1], s.P[1] + (s.Y[0] + s.Y[1]) / np.sqrt(2), atol=1e-15)


# ListRankMF -----------------------------------------------------------------------


def test_listrank_single_item_user_has_zero_loss(rng):
    train = ratings_from_arrays([0], [3], [2.0], 1, 5)
    m = ListRankMF(factors=4, iterations=1).fit(train)
    s = m.state_.copy()
    s.P[:] = rng.normal(0, 3, s.P.shape)
    s.Q[:] = rng.normal(0, 3, s.Q.shape)
    assert listrank_objective(s, train, Regs(0.0, 0.0)) == pytest.approx(0.0, abs=1e-15)


def test_listrank_permutation_invariant(rng):
    train = random_ratings(rng, 6, 9)
    perm = rng.permutation(train.nnz)
    shuffled = ratings_from_arrays(train.users[perm], train.items[perm], train.values[perm], 6, 9)
    m = ListRankMF(factors=3, iterations=2).fit(train)
    a = listrank_objective(m.state_, train, m.regs)
    b = listrank_objective(m.state_, shuffled, m.regs)
    assert abs(a - b) < 1e-12


# SoReg / SocialMF -------------------------------------------------------------------


def test_soreg_without_social_weight_is_biasedmf(rng):
    train = random_ratings(rng, 15, 12)
    a = SoReg(reg_social=0.0, iterations=5).fit(train, trust_for(15, rng)).state_
    b = BiasedMF(iterations=5).fit(train).state_
    for k in a.arrays():
        assert np.array_equal(a.arrays()[k], b.arrays()[k])


def test_soreg_pulls_identical_friends_together():
    # users 0 and 1 rate identically and trust each other
    users = [0, 0, 0, 1, 1, 1, 2, 2]
    items = [0, 1, 2, 0, 1, 2, 0, 3]
    vals = [5, 3, 4, 5, 3, 4, 2, 1]
    train = ratings_from_arrays(users, items, vals, 3, 4)
    trust = TrustGraph(3, (), [0, 1], [1, 0])
    dist = []
    for t in range(1, 11):
        m = SoReg(factors=4, iterations=t, reg_social=20.0, learn_rate=0.01).fit(train, trust)
        assert m.edges_[2].tolist() == [1.0, 1.0]
        dist.append(float(np.linalg.norm(m.state_.P[0] - m.state_.P[1])))
    assert all(b < a for a, b in zip(dist, dist[1:]))
    assert dist[-1] < 1e-3 * dist[0]


def test_socialmf_without_trust_weight_is_plain(rng):
    train = random_ratings(rng, 15, 12)
    a = SocialMF(reg_social=0.0, iterations=5).fit(train, trust_for(15, rng)).state_
    b = SocialMF(reg_social=0.7, iterations=5).fit(train, no_trust(15)).state_
    for k in a.arrays():
        assert np.array_equal(a.arrays()[k], b.arrays()[k])


def test_socialmf_single_friend_term(rng):
    train = random_ratings(rng, 3, 4)
    m = SocialMF(factors=3, iterations=1).fit(train, TrustGraph(3, (), [0], [2]))
    s = m.state_
    beta = 1.7
    with_term = socialmf_objective(s, train, m.regs, m.friends_, beta)
    without = socialmf_objective(s, train, m.regs, m.friends_, 0.0)
    d = s.P[0] - s.P[2]
    assert with_term - without == pytest.approx(0.5 * beta * float(d @ d), rel=1e-12)


def test_socialmf_ignores_external_trustees(rng):
    train = random_ratings(rng, 4, 4)
    g = TrustGraph(4, ("ghost",), [0, 0, 1], [4, 1, 4])
    m = SocialMF(iterations=1).fit(train, g)
    indptr, idx = m.friends_
    assert idx[indptr[0]:indptr[1]].tolist() == [1]
    assert indptr[2] == indptr[1]
