"""
Recommender contract, top-N list construction and the two naive baselines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import scipy.sparse as sps

from ..dataset import RatingMatrix, TrustGraph


class ConfigError(ValueError):
    """Bad hyperparameter name or value."""


class TrainingError(RuntimeError):
    """Training produced non-finite parameters."""

    def __init__(self, model: str, epoch: int, what: str = "parameters"):
        self.model = model
        self.epoch = epoch
        super().__init__(f"{model}: non-finite {what} after epoch {epoch}")


class Recommender:
    """
    Base class for all recommenders.

    Subclasses declare their hyperparameters in ``params`` (name -> default)
    and implement :meth:`_fit` and :meth:`score`.  Hyperparameters are
    stored as attributes of the same name.

    ``family`` groups models for equal-nDCG band selection
    (``"neighborhood"`` or ``"model"``).
    """

    name: ClassVar[str] = "base"
    family: ClassVar[str] = "model"
    uses_trust: ClassVar[bool] = False
    params: ClassVar[dict[str, object]] = {}

    def __init__(self, **kwargs):
        unknown = sorted(set(kwargs) - set(self.params))
        if unknown:
            raise ConfigError(f"{self.name}: unknown hyperparameter(s) {', '.join(unknown)}")
        for k, default in self.params.items():
            setattr(self, k, kwargs.get(k, default))
        self.train_: RatingMatrix | None = None

    def get_params(self) -> dict[str, object]:
        return {k: getattr(self, k) for k in self.params}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    def fit(self, train: RatingMatrix, trust: TrustGraph | None = None) -> Recommender:
        if self.uses_trust and trust is None:
            raise ConfigError(f"{self.name} needs a trust graph")
        self.train_ = train
        self._fit(train, trust)
        return self

    def _fit(self, train: RatingMatrix, trust: TrustGraph | None):
        raise NotImplementedError

    def score(self, users) -> np.ndarray:
        """Scores of every item for each user in ``users``;
        shape ``(len(users), n_items)``."""
        raise NotImplementedError

    def predict(self, user: int, item: int) -> float:
        self._check_index(user, item)
        return float(self.score(np.array([user]))[0, item])

    def _check_index(self, user, item):
        t = self.train_
        if t is None:
            raise RuntimeError(f"{self.name} is not fitted")
        if not (0 <= user < t.n_users):
            raise IndexError(f"unknown user index {user}")
        if not (0 <= item < t.n_items):
            raise IndexError(f"unknown item index {item}")


@dataclass(frozen=True, eq=False)
class RecommendationSet:
    """
    Top-N lists for every user.

    ``items[u]`` and ``scores[u]`` hold user ``u``'s list in rank order;
    lists are shorter than ``n`` only when the user ran out of candidates.
    """

    n: int
    n_items: int
    items: tuple[np.ndarray, ...]
    scores: tuple[np.ndarray, ...]

    @property
    def n_users(self) -> int:
        return len(self.items)

    def matrix(self) -> sps.csr_matrix:
        """Binary users x items membership matrix."""
        lens = [len(x) for x in self.items]
        rows = np.repeat(np.arange(self.n_users), lens)
        cols = np.concatenate(self.items) if self.items else np.zeros(0, dtype=np.int64)
        m = sps.csr_matrix(
            (np.ones(len(cols), dtype=np.int64), (rows, cols)), shape=(self.n_users, self.n_items)
        )
        m.sort_indices()
        return m

    def recommended_items(self) -> np.ndarray:
        """Distinct items appearing in any list."""
        if not self.items:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate(self.items))


def rank_scores(scores: np.ndarray, exclude: sps.csr_matrix, n: int, rows=None):
    """
    Turn a block of score rows into top-``n`` lists.

    ``exclude`` is the users x items training matrix; ``rows`` gives the
    user index for each score row (defaults to ``0 .. len(scores) - 1``).
    Ties go to the lower item index.
    """
    scores = np.array(scores, dtype=np.float64, copy=True)
    if rows is None:
        rows = np.arange(scores.shape[0])
    for r, u in enumerate(rows):
        scores[r, exclude.indices[exclude.indptr[u]:exclude.indptr[u + 1]]] = -np.inf
    # stable sort keeps ascending item order inside ties
    order = np.argsort(-scores, axis=1, kind="stable")[:, :n]
    top = np.take_along_axis(scores, order, axis=1)
    items, vals = [], []
    for o, s in zip(order, top):
        keep = s > -np.inf
        items.append(o[keep].astype(np.int64))
        vals.append(s[keep])
    return items, vals


def top_n(model: Recommender, train: RatingMatrix, n: int = 10, users=None,
          batch: int = 256) -> RecommendationSet:
    """
    Top-``n`` recommendations from a fitted model.

    Candidates for user ``u`` are all items ``u`` has not rated in
    ``train``; held-out test items stay candidates.
    """
    if n <= 0:
        raise ValueError(f"list size must be positive, got {n}")
    if users is None:
        users = np.arange(train.n_users)
    exclude = train.csr
    items, vals = [], []
    for start in range(0, len(users), batch):
        block = np.asarray(users[start:start + batch])
        s = model.score(block)
        if not np.all(np.isfinite(s)):
            raise TrainingError(model.name, -1, "scores")
        it, sc = rank_scores(s, exclude, n, rows=block)
        items.extend(it)
        vals.extend(sc)
    return RecommendationSet(n, train.n_items, tuple(items), tuple(vals))


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_uniform(seed: int, users, items) -> np.ndarray:
    """
    Counter-based uniform [0, 1) draws keyed by ``(seed, user, item)``.

    SplitMix64 finalizer over the packed key; the same triple always maps
    to the same value regardless of evaluation order.
    """
    users = np.asarray(users, dtype=np.uint64)
    items = np.asarray(items, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + _GOLDEN)
        z = _mix64(z ^ (users * _GOLDEN + np.uint64(1)))
        z = _mix64(z ^ (items * _M1 + np.uint64(2)))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


class Random(Recommender):
    """Scores every item with a reproducible pseudo-random number."""

    name = "Random"
    params = {"seed": 0}

    def _fit(self, train, trust):
        self.n_items_ = train.n_items

    def score(self, users):
        users = np.asarray(users)
        items = np.arange(self.n_items_)
        return hash_uniform(int(self.seed), users[:, None], items[None, :])


class MostPopular(Recommender):
    """Scores items by their number of training ratings."""

    name = "MostPopular"

    def _fit(self, train, trust):
        self.counts_ = train.item_counts().astype(np.float64)

    def score(self, users):
        return np.broadcast_to(self.counts_, (len(users), len(self.counts_)))

