"""
Auditing popularity and group bias in top-N recommendation.

The package loads rating, trust, group and category data
(:mod:`recaudit.dataset`), trains baseline, neighborhood, factorization and
trust-aware recommenders (:mod:`recaudit.models`), measures ranking
quality, coverage and group bias disparity of their top-N lists
(:mod:`recaudit.metrics`), and runs cross-validated sweeps whose ledgers
feed the report files (:mod:`recaudit.harness`, :mod:`recaudit.report`).
"""

from .dataset import (
    CategoryMap,
    Dataset,
    DatasetError,
    FoldSplit,
    GroupAssignment,
    RatingMatrix,
    TrustGraph,
    density,
    kfold_split,
    load_dataset,
    ratings_from_arrays,
)
from .models import ALGORITHMS, make_model, top_n

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "CategoryMap", "Dataset", "DatasetError", "FoldSplit", "GroupAssignment",
    "RatingMatrix", "TrustGraph", "density", "kfold_split", "load_dataset", "make_model",
    "ratings_from_arrays", "top_n",
]
