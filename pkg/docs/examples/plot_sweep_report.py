"""
Sweep, report, verify
=====================

Run a small grid on a generated dataset, build the report and check it
against its ledger.
"""

# %%
import tempfile
from pathlib import Path

from recaudit.harness import parse_config, run_sweep, select_equal_ndcg
from recaudit.report import verify_report, write_report
from recaudit.synthetic import Shape, make_yelp_like

shape = Shape(n_users=120, n_items=80, n_ratings=2500, core=12, n_edges=400,
              n_trustors=80, n_trustees=90, n_categories=6, n_factors=3)
data = make_yelp_like(seed=1, shape=shape)

config = parse_config("""
[sweep]
folds = 3

[algorithms.MostPopular]

[algorithms.UserKNN]
neighbors = [10, 30]

[algorithms.BiasedMF]
factors = 5
iterations = [10, 30]
""")

# %%
# Every (grid point, fold) becomes one JSON file; rerunning skips them.
out = Path(tempfile.mkdtemp())
ledger = run_sweep(config, data, out / "ledger", progress=print)
rerun = run_sweep(config, data, out / "ledger")
print("second run executed", rerun.executed, "cached", rerun.cached)

# %%
# Wide bands so each algorithm has a selectable point on this tiny data.
bands = {"model": (0.2, 0.2), "neighborhood": (0.2, 0.2)}
for alg, s in select_equal_ndcg(ledger, bands=bands).items():
    print(alg, s.status, None if s.point is None else s.point.params)

# %%
# Reports are plain CSV and SVG; verification rebuilds and diffs them.
files = write_report(ledger, out / "report", bands)
print(sorted(files))
print("problems:", verify_report(out / "report", out / "ledger"))
