"""
Cross-validated hyperparameter sweeps and operating-point selection.

A sweep trains every grid point of every algorithm on every fold, builds
top-N lists and evaluates them.  Results go to a ledger directory::

    out/
      ledger.json               index of all grid points, in sweep order
      runs/<algorithm>/<key>.json        one file per (grid point, fold)
      aggregates/<algorithm>/<key>.json  fold-averaged report per point
      timing.log                wall-clock times (not part of the ledger)

File keys hash the algorithm, hyperparameters, fold, split settings and
the dataset digest, so an interrupted sweep resumes by skipping files that
already exist and a finished ledger does not depend on execution order.

Sweep config grammar (TOML)::

    [sweep]
    folds = 5            # default 5
    seed = 0
    list_size = 10
    workers = 1

    [data]               # optional; otherwise given by the caller
    bundled = true       # or ratings/trust/groups/categories paths
    protected = "female"
    unprotected = "male"

    [bands]              # family = [center, halfwidth]
    model = [0.023, 0.001]
    neighborhood = [0.074, 0.01]

    [algorithms.UserKNN]          # lists expand to a cartesian product
    neighbors = [10, 50]
    similarity = ["pcc", "cos"]

    [[algorithms.BiasedMF.grid]]  # or several explicit product blocks
    factors = [10]
    learn_rate = [0.01, 0.005]
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, FoldSplit, kfold_split, load_dataset
from .metrics import FoldMetrics, MetricReport, evaluate_fold
from .models import ALGORITHMS, ConfigError, TrainingError, make_model, top_n

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_log = logging.getLogger(__name__)

DEFAULT_BANDS = {"model": (0.023, 0.001), "neighborhood": (0.074, 0.01)}


@dataclass
class SweepConfig:
    algorithms: dict[str, list[dict]]
    folds: int = 5
    seed: int = 0
    list_size: int = 10
    workers: int = 1
    bands: dict[str, tuple[float, float]] = field(default_factory=lambda: dict(DEFAULT_BANDS))
    data: dict = field(default_factory=dict)
    base_dir: Path | None = None

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.list_size < 1:
            raise ConfigError("list_size must be >= 1")
        if not self.algorithms:
            raise ConfigError("no algorithms configured")
        for name, points in self.algorithms.items():
            if not points:
                raise ConfigError(f"{name}: empty grid")
            for p in points:
                make_model(name, p)

    def points(self) -> list[tuple[str, dict]]:
        return [(name, p) for name, pts in self.algorithms.items() for p in pts]

    def load_data(self) -> Dataset:
        """Dataset named in the ``[data]`` section."""
        d = self.data
        if not d:
            raise ConfigError("config has no [data] section")
        kw = {k: d[k] for k in ("protected", "unprotected") if k in d}
        if d.get("bundled"):
            from .synthetic import bundled_paths

            p = bundled_paths()
        else:
            base = self.base_dir or Path(".")
            try:
                p = {k: base / d[k] for k in ("ratings", "trust", "groups", "categories")}
            except KeyError as e:
                raise ConfigError(f"[data] is missing {e.args[0]!r}") from None
        return load_dataset(p["ratings"], p["trust"], p["groups"], p["categories"], **kw)


def expand_grid(block: dict) -> list[dict]:
    """Cartesian product of a ``{key: value-or-list}`` block, in key order
    as written."""
    keys = list(block)
    values = [v if isinstance(v, list) else [v] for v in block.values()]
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def parse_config(text: str, base_dir=None) -> SweepConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"bad config: {e}") from None
    unknown = set(raw) - {"sweep", "data", "bands", "algorithms"}
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    sweep = dict(raw.get("sweep", {}))
    bad = set(sweep) - {"folds", "seed", "list_size", "workers"}
    if bad:
        raise ConfigError(f"unknown [sweep] key(s): {', '.join(sorted(bad))}")
    algos = {}
    for name, section in raw.get("algorithms", {}).items():
        if name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {name!r}")
        blocks = section["grid"] if "grid" in section else [section]
        seen, pts = set(), []
        for p in (p for b in blocks for p in expand_grid(b)):
            if _canon(p) not in seen:
                seen.add(_canon(p))
                pts.append(p)
        algos[name] = pts
    bands = dict(DEFAULT_BANDS)
    for fam, v in raw.get("bands", {}).items():
        if not (isinstance(v, list) and len(v) == 2):
            raise ConfigError(f"band {fam!r} must be [center, halfwidth]")
        bands[fam] = (float(v[0]), float(v[1]))
    return SweepConfig(
        algorithms=algos, bands=bands, data=dict(raw.get("data", {})),
        base_dir=None if base_dir is None else Path(base_dir), **sweep,
    )


def load_config(path) -> SweepConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def bundled_config(name: str = "full") -> Path:
    """Path of a config shipped with the package (``full`` or ``quick``)."""
    from importlib import resources

    return Path(str(resources.files("recaudit") / "configs" / f"{name}.toml"))


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def point_key(algorithm: str, params: dict, config: SweepConfig, digest: str) -> str:
    return hashlib.sha256(_canon({
        "algorithm": algorithm, "params": params, "folds": config.folds,
        "seed": config.seed, "list_size": config.list_size, "dataset": digest,
    }).encode()).hexdigest()[:20]


def run_key(pkey: str, fold: int) -> str:
    return hashlib.sha256(f"{pkey}/{fold}".encode()).hexdigest()[:20]


def effective_params(algorithm: str, params: dict, seed: int) -> dict:
    """Grid point with the sweep seed filled in for seeded models."""
    p = dict(params)
    if "seed" in ALGORITHMS[algorithm].params and "seed" not in p:
        p["seed"] = seed
    return p


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def run_one(data: Dataset, split: FoldSplit, algorithm: str, params: dict, fold: int,
            list_size: int) -> dict:
    """Train, recommend and evaluate a single (grid point, fold)."""
    train = split.train(data.ratings, fold)
    test = split.test(data.ratings, fold)
    record = {"algorithm": algorithm, "params": params, "fold": fold}
    try:
        model = make_model(algorithm, params).fit(train, data.trust)
        recs = top_n(model, train, list_size)
    except (TrainingError, FloatingPointError) as e:
        record.update(status="failed", error=str(e))
        return record
    m = evaluate_fold(fold, train, test, recs, data.groups, data.categories, list_size)
    record.update(status="ok", metrics=m.as_dict())
    return record


_worker_state: dict = {}


def _init_worker(data, split):
    _worker_state["data"] = data
    _worker_state["split"] = split


def _run_task(task):
    algorithm, params, fold, list_size = task
    t0 = time.perf_counter()
    rec = run_one(_worker_state["data"], _worker_state["split"], algorithm, params, fold, list_size)
    return rec, time.perf_counter() - t0


@dataclass
class Aggregate:
    """Fold-averaged outcome of one grid point."""

    algorithm: str
    params: dict
    index: int
    key: str
    status: str
    report: MetricReport | None

    @property
    def family(self) -> str:
        return ALGORITHMS[self.algorithm].family

    @property
    def ndcg(self) -> float | None:
        return None if self.report is None else self.report.ndcg

    def as_dict(self) -> dict:
        d = {"algorithm": self.algorithm, "params": self.params, "index": self.index,
             "key": self.key, "status": self.status, "family": self.family}
        if self.report is not None:
            d["report"] = self.report.as_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Aggregate:
        rep = None
        if "report" in d:
            r = d["report"]
            rep = MetricReport(r["algorithm"], r["params"],
                               [FoldMetrics.from_dict(f) for f in r["folds"]])
        return cls(d["algorithm"], d["params"], d["index"], d["key"], d["status"], rep)


@dataclass
class RunLedger:
    """Completed sweep: aggregates in sweep order plus counters from the run
    that produced this object."""

    directory: Path
    aggregates: list[Aggregate]
    executed: int = 0
    cached: int = 0
    failed: int = 0
    summary: dict | None = None

    @classmethod
    def load(cls, directory) -> RunLedger:
        directory = Path(directory)
        index = json.loads((directory / "ledger.json").read_text())
        aggs = []
        for entry in index["points"]:
            p = directory / "aggregates" / entry["algorithm"] / f"{entry['key']}.json"
            aggs.append(Aggregate.from_dict(json.loads(p.read_text())))
        return cls(directory, aggs, summary=index.get("dataset_summary"))

    def fold_records(self) -> list[dict]:
        out = []
        for p in sorted((self.directory / "runs").glob("*/*.json")):
            out.append(json.loads(p.read_text()))
        return out

    def by_algorithm(self) -> dict[str, list[Aggregate]]:
        out: dict[str, list[Aggregate]] = {}
        for a in self.aggregates:
            out.setdefault(a.algorithm, []).append(a)
        return out


def run_sweep(config: SweepConfig, data: Dataset, out_dir, workers: int | None = None,
              progress=None) -> RunLedger:
    """
    Run (or resume) a sweep and write its ledger under ``out_dir``.

    Grid points whose fold files already exist are not recomputed.  A
    model that diverges is recorded as failed and the sweep continues.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = config.workers if workers is None else workers
    split = kfold_split(data.ratings, config.folds, config.seed)
    digest = data.digest

    points = []
    tasks = []
    cached = 0
    for name, raw in config.points():
        params = effective_params(name, raw, config.seed)
        pkey = point_key(name, params, config, digest)
        paths = []
        for fold in range(config.folds):
            path = out / "runs" / name / f"{run_key(pkey, fold)}.json"
            paths.append(path)
            if path.exists():
                cached += 1
            else:
                tasks.append(((name, params, fold, config.list_size), path))
        points.append((name, params, pkey, paths))

    def report(msg):
        if progress is not None:
            progress(msg)

    report(f"{len(tasks)} runs to do, {cached} skipped (cached)")
    timing = open(out / "timing.log", "a", encoding="utf-8")
    failed = 0
    try:
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(workers, initializer=_init_worker,
                                     initargs=(data, split)) as pool:
                results = pool.map(_run_task, [t for t, _ in tasks])
                for (task, path), (rec, secs) in zip(tasks, results):
                    failed += rec["status"] != "ok"
                    _write_json(path, rec)
                    timing.write(f"{task[0]}\t{_canon(task[1])}\t{task[2]}\t{secs:.3f}\n")
                    report(f"{task[0]} fold {task[2]}: {rec['status']} ({secs:.1f}s)")
        else:
            _init_worker(data, split)
            for task, path in tasks:
                rec, secs = _run_task(task)
                failed += rec["status"] != "ok"
                _write_json(path, rec)
                timing.write(f"{task[0]}\t{_canon(task[1])}\t{task[2]}\t{secs:.3f}\n")
                report(f"{task[0]} fold {task[2]}: {rec['status']} ({secs:.1f}s)")
    finally:
        timing.close()

    aggs = []
    for index, (name, params, pkey, paths) in enumerate(points):
        recs = [json.loads(p.read_text()) for p in paths]
        ok = all(r["status"] == "ok" for r in recs)
        rep = None
        if ok:
            rep = MetricReport(name, params, [FoldMetrics.from_dict(r["metrics"]) for r in recs])
        agg = Aggregate(name, params, index, pkey, "ok" if ok else "failed", rep)
        _write_json(out / "aggregates" / name / f"{pkey}.json", agg.as_dict())
        aggs.append(agg)

    _write_json(out / "ledger.json", {
        "dataset": digest, "folds": config.folds, "seed": config.seed,
        "dataset_summary": None if data.report is None else data.report.as_dict(),
        "list_size": config.list_size,
        "points": [{"algorithm": a.algorithm, "key": a.key, "params": a.params,
                    "status": a.status} for a in aggs],
    })
    return RunLedger(out, aggs, executed=len(tasks), cached=cached, failed=failed,
                     summary=None if data.report is None else data.report.as_dict())


@dataclass(frozen=True)
class Selection:
    algorithm: str
    family: str
    status: str            # "selected" or "excluded"
    band: tuple[float, float]
    point: Aggregate | None = None
    reason: str = ""


def _aggregates(ledger) -> list[Aggregate]:
    return ledger.aggregates if isinstance(ledger, RunLedger) else list(ledger)


def select_equal_ndcg(ledger, center: float | None = None, halfwidth: float | None = None,
                      bands: dict | None = None) -> dict[str, Selection]:
    """
    Per algorithm, the grid point with the highest nDCG inside its band.

    Either a single ``center``/``halfwidth`` applies to every algorithm,
    or ``bands`` maps model family to ``(center, halfwidth)``.  Algorithms
    with no point in band are returned with status ``"excluded"``.  Ties
    go to the earlier grid point.
    """
    aggs = _aggregates(ledger)
    if not aggs:
        raise ValueError("empty ledger")
    if center is not None:
        bands = None
    elif bands is None:
        bands = DEFAULT_BANDS
    out: dict[str, Selection] = {}
    by_alg: dict[str, list[Aggregate]] = {}
    for a in aggs:
        by_alg.setdefault(a.algorithm, []).append(a)
    for alg, pts in by_alg.items():
        fam = pts[0].family
        band = (center, halfwidth) if bands is None else bands[fam]
        c, h = band
        best = None
        for a in sorted(pts, key=lambda a: a.index):
            if a.status != "ok":
                continue
            # tolerate float noise at the band edge
            if abs(a.ndcg - c) <= h + 1e-12 and (best is None or a.ndcg > best.ndcg):
                best = a
        if best is None:
            ok = [a.ndcg for a in pts if a.status == "ok"]
            why = "all runs failed" if not ok else (
                f"nDCG range [{min(ok):.4f}, {max(ok):.4f}] misses band {c}±{h}")
            out[alg] = Selection(alg, fam, "excluded", band, None, why)
        else:
            out[alg] = Selection(alg, fam, "selected", band, best)
    return out


@dataclass(frozen=True)
class FrontierRecord:
    algorithm: str
    which: str             # "best" or "worst"
    ndcg: float
    coverage: float
    average_disparity: float
    params: dict


def frontier(ledger) -> dict[str, tuple[FrontierRecord, FrontierRecord]]:
    """Best- and worst-nDCG grid point of every algorithm (earliest grid
    point wins ties)."""
    out = {}
    by_alg: dict[str, list[Aggregate]] = {}
    for a in _aggregates(ledger):
        if a.status == "ok":
            by_alg.setdefault(a.algorithm, []).append(a)
    for alg, pts in by_alg.items():
        pts = sorted(pts, key=lambda a: a.index)
        best = max(pts, key=lambda a: (a.ndcg, -a.index))
        worst = min(pts, key=lambda a: (a.ndcg, a.index))

        def rec(a, which):
            r = a.report
            return FrontierRecord(alg, which, r.ndcg, r.coverage, r.average_disparity, a.params)

        out[alg] = (rec(best, "best"), rec(worst, "worst"))
    return out


def fold_means_consistent(agg: Aggregate, tol: float = 1e-12) -> bool:
    """Aggregate metrics equal the plain mean of their folds."""
    r = agg.report
    for name in ("ndcg", "coverage", "average_disparity"):
        if abs(getattr(r, name) - float(np.mean([getattr(f, name) for f in r.folds]))) > tol:
            return False
    return True
