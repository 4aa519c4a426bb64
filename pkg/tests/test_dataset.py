from __future__ import annotations

import gzip
import json

import numpy as np
import pytest
from conftest import random_ratings
from hypothesis import given, settings
from hypothesis import strategies as st

from recaudit.dataset import (
    DatasetError,
    TrustGraph,
    binarize,
    density,
    kfold_split,
    load_dataset,
    ratings_from_arrays,
    save_dataset,
    write_split,
)
from recaudit.synthetic import YELP_CORE40, bundled_paths, load_bundled


def write_inputs(tmp_path, ratings, trust="a\tb\n", groups="a\tfemale\nb\tmale\n",
                 categories="x\tfood\n"):
    paths = {}
    for name, text in (("ratings", ratings), ("trust", trust), ("groups", groups),
                       ("categories", categories)):
        p = tmp_path / f"{name}.tsv"
        p.write_text(text)
        paths[name] = p
    return paths


def load(paths, **kw):
    return load_dataset(paths["ratings"], paths["trust"], paths["groups"], paths["categories"], **kw)


@pytest.fixture(scope="module")
def bundled():
    return load_bundled()


class TestLoad:
    def test_bundled_counts(self, bundled):
        r = bundled.report
        assert (r.n_users, r.n_items, r.n_ratings) == (1355, 1272, 100409)
        assert (r.n_trust_edges, r.n_trustors, r.n_trustees) == (26453, 919, 1172)
        assert round(r.rating_density, 3) == 5.826

    def test_bundled_matches_expected_file(self, bundled):
        expected = json.loads(bundled_paths()["expected"].read_text())
        got = bundled.report.as_dict()
        for k, v in got.items():
            assert expected[k] == v, k

    def test_bundled_is_core(self, bundled):
        assert bundled.ratings.user_counts().min() >= YELP_CORE40.core
        assert bundled.ratings.item_counts().min() >= YELP_CORE40.core

    def test_small_file(self, tmp_path):
        paths = write_inputs(
            tmp_path,
            "user_id\titem_id\trating\na\tx\t5\na\ty\t1\nb\tx\t3\n",
            trust="a\tb\t1\nb\tghost\t1\n",
            categories="x\tfood\ny\tbars\ny\tfood\n",
        )
        d = load(paths)
        assert d.ratings.user_ids == ("a", "b")
        assert d.ratings.item_ids == ("x", "y")
        assert d.ratings.nnz == 3
        assert d.trust.external_ids == ("ghost",)
        assert d.report.trust_edges_external == 1
        assert d.categories.labels == ("bars", "food")
        assert d.categories.categories_of(1) == frozenset({"bars", "food"})
        assert d.groups.sizes() == {"female": 1, "male": 1}

    def test_comma_separated_and_comments(self, tmp_path):
        paths = write_inputs(tmp_path, "# export\na,x,4\nb,x,2\n")
        assert load(paths).ratings.nnz == 2

    def test_gzip_input(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t2\n")
        gz = tmp_path / "ratings.tsv.gz"
        with gzip.open(gz, "wt") as f:
            f.write(paths["ratings"].read_text())
        paths["ratings"] = gz
        assert load(paths).ratings.nnz == 2

    def test_empty_ratings(self, tmp_path):
        paths = write_inputs(tmp_path, "")
        with pytest.raises(DatasetError, match="no interactions"):
            load(paths)

    def test_malformed_line_reports_line_number(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\n")
        with pytest.raises(DatasetError) as e:
            load(paths)
        assert e.value.line == 2

    @pytest.mark.parametrize("value", ["0", "5.5", "-1"])
    def test_rating_out_of_range(self, tmp_path, value):
        paths = write_inputs(tmp_path, f"a\tx\t{value}\nb\tx\t3\n")
        with pytest.raises(DatasetError, match="outside"):
            load(paths)

    def test_duplicate_rating_names_both_lines(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t3\na\tx\t2\n")
        with pytest.raises(DatasetError) as e:
            load(paths)
        assert e.value.line == 3
        assert "line 1" in str(e.value)

    def test_missing_file(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t3\n")
        paths["groups"] = tmp_path / "nope.tsv"
        with pytest.raises(FileNotFoundError, match="nope.tsv"):
            load(paths)

    def test_trust_self_loops_and_duplicates_dropped(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t3\n", trust="a\ta\na\tb\na\tb\n")
        d = load(paths)
        assert d.trust.n_edges == 1
        assert (d.report.dropped_self_loops, d.report.dropped_duplicate_edges) == (1, 1)

    def test_trust_value_must_be_one(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t3\n", trust="a\tb\t0.5\n")
        with pytest.raises(DatasetError, match="must be 1"):
            load(paths)

    def test_missing_designated_group(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t3\n", groups="a\tfemale\n")
        with pytest.raises(DatasetError, match="male"):
            load(paths)

    def test_conflicting_group_labels(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t3\n",
                             groups="a\tfemale\nb\tmale\na\tmale\n")
        with pytest.raises(DatasetError, match="two group labels"):
            load(paths)

    def test_empty_categories(self, tmp_path):
        paths = write_inputs(tmp_path, "a\tx\t4\nb\tx\t3\n", categories="")
        d = load(paths)
        assert d.categories.n_categories == 0
        assert d.report.uncategorized_items == 1

    def test_round_trip(self, tmp_path, bundled):
        paths = save_dataset(bundled, tmp_path / "copy")
        again = load_dataset(paths["ratings"], paths["trust"], paths["groups"], paths["categories"])
        assert again.digest == bundled.digest
        assert again.ratings.user_ids == bundled.ratings.user_ids
        assert again.ratings.item_ids == bundled.ratings.item_ids


class TestDensity:
    def test_full_matrix(self):
        u, i = np.divmod(np.arange(100), 10)
        assert density(ratings_from_arrays(u, i, np.full(100, 3.0))) == 100.0

    def test_bundled_rating_density(self, bundled):
        assert round(density(bundled.ratings), 3) == 5.826

    def test_trust_density_convention(self, bundled):
        # Only the trustor x trustee denominator reproduces 2.456 from the
        # published counts; the squared user count gives 1.441.
        t = bundled.trust
        by_hand_active = 100 * 26453 / (919 * 1172)
        by_hand_users = 100 * 26453 / (1355 * 1355)
        assert round(by_hand_active, 3) == 2.456
        assert round(by_hand_users, 3) == 1.441
        assert density(t, "active") == pytest.approx(by_hand_active, abs=1e-12)
        assert density(t, "users") == pytest.approx(by_hand_users, abs=1e-12)

    def test_bad_base(self, bundled):
        with pytest.raises(ValueError):
            density(bundled.trust, "nodes")

    def test_zero_dimension(self):
        with pytest.raises(ValueError):
            density(TrustGraph(3, (), [], []))


class TestBinarize:
    def test_low_ratings_count(self):
        m = ratings_from_arrays([0, 0, 1], [0, 1, 1], [1, 5, 2], 2, 3)
        b = binarize(m).toarray()
        assert b.tolist() == [[1, 1, 0], [0, 1, 0]]


class TestSplit:
    def test_ten_ratings_two_per_fold(self):
        m = ratings_from_arrays(np.zeros(10, int), np.arange(10), np.full(10, 4.0))
        s = kfold_split(m, 5, seed=3)
        assert [len(s.test_entries(f)) for f in range(5)] == [2] * 5

    def test_same_seed_same_split(self, rng):
        m = random_ratings(rng, 30, 20)
        a, b = kfold_split(m, 5, 9), kfold_split(m, 5, 9)
        assert np.array_equal(a.fold_of, b.fold_of)
        assert not np.array_equal(a.fold_of, kfold_split(m, 5, 10).fold_of)

    def test_partition_exhaustive(self, rng):
        m = random_ratings(rng, 50, 30, density=0.4, min_per_user=5)
        s = kfold_split(m, 5, 1)
        for e in range(m.nnz):
            homes = [f for f in range(5) if e in set(s.test_entries(f).tolist())]
            assert len(homes) == 1
            trains = [f for f in range(5) if e in set(s.train_entries(f).tolist())]
            assert sorted(trains + homes) == list(range(5))

    def test_small_users_stay_in_train(self):
        m = ratings_from_arrays([0, 0, 1, 1, 1, 1, 1], [0, 1, 0, 1, 2, 3, 4], [3] * 7)
        s = kfold_split(m, 5, 0)
        assert np.all(s.fold_of[:2] == -1)
        for f in range(5):
            assert {0, 1} <= set(s.train_entries(f).tolist())

    def test_needs_two_folds(self, rng):
        with pytest.raises(ValueError):
            kfold_split(random_ratings(rng, 5, 5), 1)

    def test_train_keeps_index_space(self, rng):
        m = random_ratings(rng, 12, 9, min_per_user=5)
        s = kfold_split(m, 5, 0)
        tr = s.train(m, 0)
        assert (tr.n_users, tr.n_items) == (m.n_users, m.n_items)
        assert tr.nnz + s.test(m, 0).nnz == m.nnz

    def test_write_split(self, tmp_path, rng):
        m = random_ratings(rng, 6, 6, min_per_user=5)
        s = kfold_split(m, 5, 0)
        p = tmp_path / "folds.tsv"
        write_split(s, m, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "user_id\titem_id\tfold"
        assert len(lines) == m.nnz + 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 7), st.integers(0, 2**31), st.integers(1, 40))
    def test_fold_sizes_balanced(self, k, seed, n):
        m = ratings_from_arrays(np.zeros(n, int), np.arange(n), np.full(n, 2.0))
        s = kfold_split(m, k, seed)
        if n < k:
            assert np.all(s.fold_of == -1)
        else:
            sizes = [len(s.test_entries(f)) for f in range(k)]
            assert max(sizes) - min(sizes) <= 1
            assert sum(sizes) == n
