from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from recaudit.dataset import (  # noqa: E402
    CategoryMap,
    Dataset,
    GroupAssignment,
    TrustGraph,
    load_dataset,
    ratings_from_arrays,
    save_dataset,
)
from recaudit.synthetic import Shape, make_yelp_like  # noqa: E402

SMALL = Shape(n_users=80, n_items=60, n_ratings=1500, core=12, n_edges=300,
              n_trustors=50, n_trustees=60, n_categories=6, n_factors=3)


def random_ratings(rng, n_users, n_items, density=0.5, min_per_user=1):
    """Random rating matrix where every user has at least one rating."""
    mask = rng.random((n_users, n_items)) < density
    for u in range(n_users):
        while mask[u].sum() < min_per_user:
            mask[u, rng.integers(n_items)] = True
    u, i = np.nonzero(mask)
    v = rng.integers(1, 6, size=len(u)).astype(float)
    return ratings_from_arrays(u, i, v, n_users, n_items)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_data(tmp_path_factory) -> Dataset:
    """A small dataset loaded from disk, so it carries a load report."""
    d = tmp_path_factory.mktemp("small")
    save_dataset(make_yelp_like(7, SMALL), d)
    return load_dataset(d / "ratings.tsv", d / "trust.tsv", d / "groups.tsv", d / "categories.tsv")


@pytest.fixture
def toy_dataset():
    """Four users, six items, two categories, hand-checkable."""
    r = ratings_from_arrays(
        [0, 0, 1, 1, 2, 2, 3, 3], [0, 1, 1, 2, 3, 4, 4, 5], [5, 4, 3, 5, 2, 4, 5, 1], 4, 6,
    )
    trust = TrustGraph(4, (), [0, 1, 2], [1, 0, 3])
    groups = GroupAssignment(("female", "male"), [0, 0, 1, 1], "female", "male")
    cats = CategoryMap(("a", "b"), 6, [0, 1, 2, 3, 4, 5, 5], [0, 0, 0, 1, 1, 0, 1])
    return Dataset(r, trust, groups, cats)


# acceptance reporting ----------------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = getattr(report, "criterion", None)
    if crit is None:
        return
    num, title = crit
    _criteria[num] = (title, "PASS" if report.outcome == "passed" else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status = _criteria[num]
        terminalreporter.write_line(f"criterion {num}: {status}  {title}")


def random_metric_instance(rng, max_users=50, max_items=40, max_cats=5, max_list=10):
    """Random (train, test, recs, groups, categories) for metric oracles."""
    from recaudit.models import RecommendationSet

    nu = int(rng.integers(2, max_users + 1))
    ni = int(rng.integers(2, max_items + 1))
    nc = int(rng.integers(1, max_cats + 1))
    nc = min(nc, ni)
    # every category gets at least one item; extra memberships are random
    item_idx = list(rng.permutation(ni)[:nc])
    cat_idx = list(range(nc))
    extra = rng.random((ni, nc)) < 0.3
    for i, c in zip(*np.nonzero(extra)):
        if not (c < nc and item_idx[c] == i):
            item_idx.append(int(i))
            cat_idx.append(int(c))
    labels = tuple(f"c{k}" for k in range(nc))
    cats = CategoryMap(labels, ni, item_idx, cat_idx)

    codes = rng.integers(-1, 2, size=nu)
    codes[0], codes[1] = 0, 1
    groups = GroupAssignment(("female", "male"), codes, "female", "male")

    mask = rng.random((nu, ni)) < rng.uniform(0.05, 0.5)
    u, i = np.nonzero(mask)
    train = ratings_from_arrays(u, i, rng.integers(1, 6, len(u)), nu, ni)
    tmask = (rng.random((nu, ni)) < 0.15) & ~mask
    u, i = np.nonzero(tmask)
    test = ratings_from_arrays(u, i, rng.integers(1, 6, len(u)), nu, ni)

    n = int(rng.integers(1, max_list + 1))
    lists = []
    for _ in range(nu):
        size = int(rng.integers(0, min(n, ni) + 1))
        lists.append(rng.permutation(ni)[:size].astype(np.int64))
    recs = RecommendationSet(n, ni, tuple(lists), tuple(np.zeros(len(x)) for x in lists))
    return train, test, recs, groups, cats
