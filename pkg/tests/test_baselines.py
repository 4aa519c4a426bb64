from __future__ import annotations

import numpy as np
import pytest
from conftest import random_ratings

from recaudit.dataset import ratings_from_arrays
from recaudit.metrics import item_coverage
from recaudit.models import (
    ALGORITHMS,
    ConfigError,
    MostPopular,
    Random,
    Recommender,
    TrainingError,
    hash_uniform,
    make_model,
    rank_scores,
    top_n,
)


class Fixed(Recommender):
    """Returns a preset score matrix."""

    name = "Fixed"

    def __init__(self, scores):
        super().__init__()
        self.scores = np.asarray(scores, dtype=float)

    def _fit(self, train, trust):
        pass

    def score(self, users):
        return self.scores[np.asarray(users)]


def brute_top(scores, rated, n):
    cand = [(-s, i) for i, s in enumerate(scores) if i not in rated]
    return [i for _, i in sorted(cand)[:n]]


class TestTopN:
    def test_matches_sort_oracle(self, rng):
        train = random_ratings(rng, 10, 10, density=0.3)
        # coarse scores so ties are common
        scores = rng.integers(0, 4, size=(10, 10)).astype(float)
        recs = top_n(Fixed(scores).fit(train), train, 5)
        dense = train.csr.toarray()
        for u in range(10):
            rated = set(np.flatnonzero(dense[u]).tolist())
            assert recs.items[u].tolist() == brute_top(scores[u], rated, 5)

    def test_tie_goes_to_lower_index(self):
        train = ratings_from_arrays([0], [0], [3.0], 1, 4)
        recs = top_n(Fixed([[9.0, 1.0, 1.0, 0.5]]).fit(train), train, 2)
        assert recs.items[0].tolist() == [1, 2]

    def test_user_with_everything_rated(self):
        train = ratings_from_arrays([0, 0, 1], [0, 1, 0], [3, 4, 5], 2, 2)
        recs = top_n(Fixed(np.ones((2, 2))).fit(train), train, 10)
        assert len(recs.items[0]) == 0
        assert recs.items[1].tolist() == [1]

    @pytest.mark.parametrize("n", [0, -3])
    def test_bad_list_size(self, n):
        train = ratings_from_arrays([0], [0], [3.0], 1, 2)
        with pytest.raises(ValueError):
            top_n(Fixed([[0.0, 1.0]]).fit(train), train, n)

    def test_non_finite_scores(self):
        train = ratings_from_arrays([0], [0], [3.0], 1, 2)
        with pytest.raises(TrainingError):
            top_n(Fixed([[0.0, np.nan]]).fit(train), train, 1)

    def test_rank_scores_rows(self):
        train = ratings_from_arrays([0, 1], [0, 1], [3.0, 3.0], 2, 3)
        items, _ = rank_scores(np.array([[1.0, 2.0, 3.0]]), train.csr, 3, rows=[1])
        assert items[0].tolist() == [2, 0]

    def test_batching_does_not_change_lists(self, rng):
        train = random_ratings(rng, 25, 15)
        m = Random(seed=4).fit(train)
        a = top_n(m, train, 5, batch=3)
        b = top_n(m, train, 5)
        assert all(np.array_equal(x, y) for x, y in zip(a.items, b.items))


class TestRandom:
    def test_same_key_same_value(self):
        a = hash_uniform(5, [3, 3], [7, 7])
        assert a[0] == a[1]
        assert hash_uniform(5, 3, 7) == hash_uniform(5, 3, 7)

    def test_seed_changes_values(self):
        assert hash_uniform(1, 3, 7) != hash_uniform(2, 3, 7)

    def test_uniform_moments(self):
        u, i = np.meshgrid(np.arange(300), np.arange(300))
        v = hash_uniform(0, u, i).ravel()
        assert 0.0 <= v.min() and v.max() < 1.0
        assert abs(v.mean() - 0.5) < 0.02
        hist = np.histogram(v, bins=10, range=(0, 1))[0] / len(v)
        assert np.all(np.abs(hist - 0.1) < 0.01)

    def test_order_independent(self, rng):
        train = random_ratings(rng, 8, 12)
        m = Random(seed=3).fit(train)
        full = m.score(np.arange(8))
        assert np.array_equal(m.score(np.array([5, 2]))[0], full[5])

    def test_large_lists_cover_catalog(self, rng):
        train = random_ratings(rng, 50, 40, density=0.05)
        recs = top_n(Random(seed=0).fit(train), train, 30)
        assert item_coverage(recs) == 100.0


class TestMostPopular:
    def test_more_ratings_first(self):
        users = list(range(50)) + list(range(49))
        items = [0] * 50 + [1] * 49
        train = ratings_from_arrays(users, items, [3.0] * 99, 60, 2)
        recs = top_n(MostPopular().fit(train), train, 2)
        assert recs.items[55].tolist() == [0, 1]

    def test_empty_profiles_share_a_list(self):
        train = ratings_from_arrays([0, 1, 1], [0, 0, 1], [3, 4, 5], 5, 30)
        recs = top_n(MostPopular().fit(train), train, 10)
        lists = {tuple(recs.items[u].tolist()) for u in (2, 3, 4)}
        assert len(lists) == 1
        sub = [recs.items[u] for u in (2, 3, 4)]
        assert len(np.unique(np.concatenate(sub))) / 30 * 100 == pytest.approx(100 * 10 / 30)


class TestRegistry:
    def test_roster(self):
        assert list(ALGORITHMS) == [
            "Random", "MostPopular", "UserKNN", "ItemKNN", "TrustKNN",
            "BiasedMF", "SVD++", "ListRankMF", "SLIM", "SoReg", "SocialMF",
        ]

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="neighbours"):
            make_model("UserKNN", {"neighbours": 5})

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigError):
            make_model("DeepFM")

    def test_params_round_trip(self):
        m = make_model("BiasedMF", {"factors": 3})
        assert m.get_params()["factors"] == 3
        assert "BiasedMF(" in repr(m)

    def test_predict_checks_indices(self, rng):
        train = random_ratings(rng, 4, 4)
        m = MostPopular().fit(train)
        with pytest.raises(IndexError):
            m.predict(4, 0)
        with pytest.raises(IndexError):
            m.predict(0, -1)

    def test_unfitted(self):
        with pytest.raises(RuntimeError):
            MostPopular().predict(0, 0)

    @pytest.mark.parametrize("name", ["TrustKNN", "SoReg", "SocialMF"])
    def test_trust_models_need_graph(self, name, rng):
        with pytest.raises(ConfigError):
            make_model(name).fit(random_ratings(rng, 4, 4))
