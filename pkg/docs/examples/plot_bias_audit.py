"""
Auditing one fold by hand
=========================

Train two recommenders on a single fold and compare how far their top-10
lists move each group away from its training preferences.
"""

# %%
from recaudit.dataset import kfold_split
from recaudit.metrics import evaluate_fold, top_preferred_categories
from recaudit.models import make_model, top_n
from recaudit.synthetic import load_bundled

data = load_bundled()
split = kfold_split(data.ratings, 5, seed=0)
train, test = split.train(data.ratings, 0), split.test(data.ratings, 0)

# %%
# Popularity ranking against an item-based neighborhood model.
results = {}
for name, params in [("MostPopular", {}), ("ItemKNN", {"neighbors": 50, "similarity": "cos"})]:
    model = make_model(name, params).fit(train, data.trust)
    recs = top_n(model, train, 10)
    results[name] = evaluate_fold(0, train, test, recs, data.groups, data.categories)
    m = results[name]
    print(f"{name:<12} nDCG@10 {m.ndcg:.4f}  coverage {m.coverage:6.2f}%  "
          f"avg disparity {m.average_disparity:.2f}")

# %%
# Bias disparity on the three categories female users prefer most.
# Negative values mean the recommender under-serves the category.
female = data.groups.mask("female")
for label in top_preferred_categories(train, female, data.categories, 3):
    cells = []
    for name, m in results.items():
        rec = next(b for b in m.bias if b.group == "female" and b.category == label)
        cells.append(f"{name} {rec.disparity:+.3f}")
    print(f"{label:>10}: " + "  ".join(cells))
