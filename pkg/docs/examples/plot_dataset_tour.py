"""
A tour of the bundled dataset
=============================

Load the synthetic core-40 fixture, look at its statistics and split it
into cross-validation folds.
"""

# %%
# The fixture ships with the package and loads like any on-disk dataset.
import numpy as np

from recaudit.dataset import kfold_split
from recaudit.synthetic import load_bundled

data = load_bundled()
for key, value in data.report.as_dict().items():
    print(f"{key:>24}: {value}")

# %%
# Ratings live in a sparse user-item matrix.  Per-user counts show the
# core-40 property: nobody has fewer than 40 ratings.
R = data.ratings
per_user = np.diff(R.csr.indptr)
print("ratings per user: min", per_user.min(), "median", int(np.median(per_user)))

# %%
# Category membership is many-to-many.  Catalog shares are what the bias
# metrics normalize by.
cats = data.categories
for label in cats.labels[:5]:
    print(f"{label:>10}: {len(cats.items_in(label)):4d} items")

# %%
# Folds are stratified per user and fully determined by the seed.
split = kfold_split(R, 5, seed=0)
for f in range(split.k):
    print("fold", f, "train", split.train(R, f).nnz, "test", split.test(R, f).nnz)
