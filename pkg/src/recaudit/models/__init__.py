"""Recommendation algorithms and the registry used by the experiment harness."""

from .base import (
    ConfigError,
    MostPopular,
    Random,
    RecommendationSet,
    Recommender,
    TrainingError,
    hash_uniform,
    rank_scores,
    top_n,
)
from .factorization import BiasedMF, FactorState, ListRankMF, SocialMF, SoReg, SVDpp
from .neighborhood import ItemKNN, SimilarityTable, TrustKNN, UserKNN, cosine, pearson
from .slim import SLIM

ALGORITHMS: dict[str, type[Recommender]] = {
    cls.name: cls
    for cls in (
        Random, MostPopular, UserKNN, ItemKNN, TrustKNN,
        BiasedMF, SVDpp, ListRankMF, SLIM, SoReg, SocialMF,
    )
}


def make_model(name: str, params: dict | None = None) -> Recommender:
    """Instantiate a registered algorithm; unknown names or hyperparameter
    keys raise :class:`ConfigError`."""
    try:
        cls = ALGORITHMS[name]
    except KeyError:
        raise ConfigError(f"unknown algorithm {name!r}") from None
    return cls(**(params or {}))


__all__ = [
    "ALGORITHMS", "BiasedMF", "ConfigError", "FactorState", "ItemKNN", "ListRankMF",
    "MostPopular", "Random", "RecommendationSet", "Recommender", "SLIM", "SVDpp",
    "SimilarityTable", "SoReg", "SocialMF", "TrainingError", "TrustKNN", "UserKNN",
    "cosine", "hash_uniform", "make_model", "pearson", "rank_scores", "top_n",
]
