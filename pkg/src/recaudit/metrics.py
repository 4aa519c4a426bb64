"""
Group bias, disparity, coverage and ranking metrics for top-N lists.

Interaction sources are anything :func:`as_binary` accepts: a
:class:`~recaudit.dataset.RatingMatrix` (training data), a
:class:`~recaudit.models.RecommendationSet`, or a users x items sparse
matrix.  All of them are reduced to a 0/1 presence matrix.

Quantities that cannot be computed (a group without interactions, a zero
training bias) are reported as ``None`` rather than as a number.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sps

from .dataset import CategoryMap, GroupAssignment, RatingMatrix, binarize
from .models.base import RecommendationSet


def as_binary(source) -> sps.csr_matrix:
    if isinstance(source, RatingMatrix):
        return binarize(source)
    if isinstance(source, RecommendationSet):
        return source.matrix()
    m = sps.csr_matrix(source, copy=True)
    m.eliminate_zeros()
    m.data[:] = 1
    return m.astype(np.int64)


def _user_mask(users, n_users) -> np.ndarray:
    users = np.asarray(users)
    if users.dtype == bool:
        return users
    mask = np.zeros(n_users, dtype=bool)
    mask[users] = True
    return mask


def category_fraction(category: str, categories: CategoryMap, n_items: int | None = None) -> float:
    """Share of the catalog carrying ``category``."""
    m = categories.n_items if n_items is None else n_items
    if m <= 0:
        raise ValueError("item count must be positive")
    if category not in categories.label_index:
        raise KeyError(f"unknown category {category!r}")
    return float(categories.category_sizes()[categories.label_index[category]]) / m


def category_fractions(categories: CategoryMap, n_items: int | None = None) -> np.ndarray:
    m = categories.n_items if n_items is None else n_items
    if m <= 0:
        raise ValueError("item count must be positive")
    return categories.category_sizes() / m


def group_category_counts(source, users, categories: CategoryMap) -> tuple[np.ndarray, int]:
    """
    Interaction counts of a user set per category, and in total.

    An item with several categories adds to every one of its categories'
    counts but only once to the total.
    """
    X = as_binary(source)
    mask = _user_mask(users, X.shape[0]).astype(np.int64)
    per_item = X.T @ mask
    return categories.matrix.T @ per_item, int(per_item.sum())


def preference_ratios(source, users, categories: CategoryMap) -> np.ndarray | None:
    """Preference ratio of a user set for every category, or ``None`` if the
    users have no interactions at all."""
    counts, total = group_category_counts(source, users, categories)
    if total == 0:
        return None
    return counts / total


def preference_ratio(source, users, category: str, categories: CategoryMap) -> float | None:
    pr = preference_ratios(source, users, categories)
    if pr is None:
        return None
    return float(pr[categories.label_index[category]])


def bias(pr: float | None, fraction: float) -> float | None:
    """Preference ratio relative to the category's catalog share."""
    if fraction <= 0:
        raise ValueError("category fraction must be positive")
    if pr is None:
        return None
    return pr / fraction


def bias_disparity(train_bias: float | None, rec_bias: float | None) -> float | None:
    """Relative change from training bias to recommendation bias.
    Undefined (``None``) when the training bias is zero or missing."""
    if train_bias is None or rec_bias is None or train_bias == 0:
        return None
    return (rec_bias - train_bias) / train_bias


def average_disparity(train, recs, groups: GroupAssignment, categories: CategoryMap,
                      normalized: bool = False) -> float:
    """
    Mean over categories of the absolute gap between the unprotected and
    the protected group's change in category counts from training data to
    recommendations.

    With ``normalized=True`` each count is divided by the group's total
    interaction count in the same source first, which removes the effect
    of group size.
    """
    if groups.protected is None or groups.unprotected is None:
        raise ValueError("protected and unprotected groups must be designated")
    if categories.n_categories == 0:
        raise ValueError("no categories")
    delta = []
    for g in (groups.unprotected, groups.protected):
        mask = groups.mask(g)
        nt, tt = group_category_counts(train, mask, categories)
        nr, tr = group_category_counts(recs, mask, categories)
        nt = nt.astype(np.float64)
        nr = nr.astype(np.float64)
        if normalized:
            nt = nt / tt if tt else np.zeros_like(nt)
            nr = nr / tr if tr else np.zeros_like(nr)
        delta.append(nr - nt)
    return float(np.mean(np.abs(delta[0] - delta[1])))


def item_coverage(recs: RecommendationSet, n_items: int | None = None) -> float:
    """Percentage of catalog items recommended to at least one user."""
    m = recs.n_items if n_items is None else n_items
    if m <= 0:
        raise ValueError("item count must be positive")
    return 100.0 * len(recs.recommended_items()) / m


def ndcg_per_user(recs: RecommendationSet, test: RatingMatrix, k: int = 10) -> np.ndarray:
    """nDCG@k of every user with test items (binary relevance, log2
    discount); users without test items get NaN."""
    if k < 1:
        raise ValueError("k must be >= 1")
    T = test.csr
    discount = 1.0 / np.log2(np.arange(2, k + 2))
    ideal = np.concatenate([[0.0], np.cumsum(discount)])
    out = np.full(recs.n_users, np.nan)
    for u in range(recs.n_users):
        rel = T.indices[T.indptr[u]:T.indptr[u + 1]]
        if len(rel) == 0:
            continue
        lst = recs.items[u][:k]
        hits = np.isin(lst, rel)
        out[u] = float(discount[:len(lst)][hits].sum()) / ideal[min(k, len(rel))]
    return out


def ndcg_at_k(recs: RecommendationSet, test: RatingMatrix, k: int = 10) -> float:
    """Mean nDCG@k over users that have test items."""
    v = ndcg_per_user(recs, test, k)
    v = v[~np.isnan(v)]
    return float(v.mean()) if len(v) else 0.0


def top_preferred_categories(train, users, categories: CategoryMap, count: int = 10,
                             by: str = "pr") -> list[str]:
    """
    Categories a user set interacts with most in training data.

    Ranked by preference ratio (``by="pr"``) or by bias (``by="bias"``),
    descending, ties by label.
    """
    pr = preference_ratios(train, users, categories)
    if pr is None:
        return []
    if by == "bias":
        frac = category_fractions(categories)
        key = np.divide(pr, frac, out=np.zeros_like(pr), where=frac > 0)
    elif by == "pr":
        key = pr
    else:
        raise ValueError(f"unknown ranking {by!r}")
    order = sorted(range(categories.n_categories), key=lambda c: (-key[c], categories.labels[c]))
    return [categories.labels[c] for c in order[:count]]


@dataclass(frozen=True)
class CategoryBiasRecord:
    group: str
    category: str
    fraction: float
    pr_train: float | None
    pr_rec: float | None
    bias_train: float | None
    bias_rec: float | None
    disparity: float | None


def category_bias_table(train, recs, groups: GroupAssignment, categories: CategoryMap,
                        labels=None) -> list[CategoryBiasRecord]:
    """Bias of each group on each category in training data and in the
    recommendations, plus the bias disparity."""
    frac = category_fractions(categories)
    out = []
    for g in labels or (groups.unprotected, groups.protected):
        mask = groups.mask(g)
        pt = preference_ratios(train, mask, categories)
        pr = preference_ratios(recs, mask, categories)
        for c, label in enumerate(categories.labels):
            if frac[c] == 0:
                continue
            prt = None if pt is None else float(pt[c])
            prr = None if pr is None else float(pr[c])
            bt = bias(prt, float(frac[c]))
            br = bias(prr, float(frac[c]))
            out.append(CategoryBiasRecord(g, label, float(frac[c]), prt, prr, bt, br,
                                          bias_disparity(bt, br)))
    return out


@dataclass
class FoldMetrics:
    fold: int
    ndcg: float
    coverage: float
    average_disparity: float
    average_disparity_normalized: float
    bias: list[CategoryBiasRecord] = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> FoldMetrics:
        d = dict(d)
        d["bias"] = [CategoryBiasRecord(**b) for b in d.get("bias", [])]
        return cls(**d)


def evaluate_fold(fold: int, train: RatingMatrix, test: RatingMatrix, recs: RecommendationSet,
                  groups: GroupAssignment, categories: CategoryMap, k: int = 10) -> FoldMetrics:
    """All metrics for one fold's recommendations."""
    return FoldMetrics(
        fold=fold,
        ndcg=ndcg_at_k(recs, test, k),
        coverage=item_coverage(recs),
        average_disparity=average_disparity(train, recs, groups, categories),
        average_disparity_normalized=average_disparity(train, recs, groups, categories, normalized=True),
        bias=category_bias_table(train, recs, groups, categories),
    )


def _mean_defined(values):
    v = [x for x in values if x is not None]
    return math.fsum(v) / len(v) if v else None


@dataclass
class MetricReport:
    """Per-fold metrics of one algorithm configuration and their means."""

    algorithm: str
    params: dict
    folds: list[FoldMetrics]

    @property
    def ndcg(self) -> float:
        return float(np.mean([f.ndcg for f in self.folds]))

    @property
    def coverage(self) -> float:
        return float(np.mean([f.coverage for f in self.folds]))

    @property
    def average_disparity(self) -> float:
        return float(np.mean([f.average_disparity for f in self.folds]))

    @property
    def average_disparity_normalized(self) -> float:
        return float(np.mean([f.average_disparity_normalized for f in self.folds]))

    def mean_bias(self) -> list[CategoryBiasRecord]:
        """Fold-averaged bias records.  Bias values are averaged over the
        folds where they are defined and the disparity is recomputed from
        the averaged biases."""
        keyed: dict[tuple[str, str], list[CategoryBiasRecord]] = {}
        for f in self.folds:
            for b in f.bias:
                keyed.setdefault((b.group, b.category), []).append(b)
        out = []
        for (g, c), recs in keyed.items():
            bt = _mean_defined([r.bias_train for r in recs])
            br = _mean_defined([r.bias_rec for r in recs])
            out.append(CategoryBiasRecord(
                g, c, recs[0].fraction,
                _mean_defined([r.pr_train for r in recs]),
                _mean_defined([r.pr_rec for r in recs]),
                bt, br, bias_disparity(bt, br),
            ))
        return out

    def summary(self) -> dict:
        return {
            "ndcg": self.ndcg,
            "coverage": self.coverage,
            "average_disparity": self.average_disparity,
            "average_disparity_normalized": self.average_disparity_normalized,
        }

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "params": self.params,
            "folds": [f.as_dict() for f in self.folds],
            "mean": {**self.summary(), "bias": [asdict(b) for b in self.mean_bias()]},
        }

    def rows(self) -> list[dict]:
        """Flat rows: one per fold x metric (x group x category for bias)."""
        out = []
        base = {"algorithm": self.algorithm,
                "params": ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))}

        def emit(fold, metric, value, group="", category=""):
            out.append({**base, "fold": fold, "metric": metric, "group": group,
                        "category": category, "value": "n/a" if value is None else repr(value)})

        for f in self.folds:
            for name in ("ndcg", "coverage", "average_disparity", "average_disparity_normalized"):
                emit(f.fold, name, getattr(f, name))
            for b in f.bias:
                for name in ("bias_train", "bias_rec", "disparity"):
                    emit(f.fold, name, getattr(b, name), b.group, b.category)
        for name, v in self.summary().items():
            emit("mean", name, v)
        return out
