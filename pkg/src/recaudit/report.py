"""
Report files built from a sweep ledger.

``write_report`` produces, in one directory:

``summary.json``
    dataset statistics recorded by the sweep.
``selection.csv``
    equal-nDCG band outcome of every algorithm (selected or excluded).
``bias_<family>_<group>.csv``
    training and recommendation bias plus bias disparity of each selected
    algorithm on the group's most preferred categories.  ``lowest`` marks
    the smallest absolute disparity per category; undefined disparities
    are written as ``n/a``.
``bias_<family>_<group>.svg``
    the same table as a bar chart.
``frontier.csv``
    best- and worst-nDCG grid point of every algorithm with coverage and
    average disparity.

Floats are written with ``repr`` so every number can be recomputed from
the ledger bit for bit, and reruns produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .harness import DEFAULT_BANDS, RunLedger, frontier, select_equal_ndcg
from .metrics import CategoryBiasRecord, bias_disparity

NA = "n/a"


def _fmt(x) -> str:
    if x is None:
        return NA
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _params(p: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(p.items()))


def _csv(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


@dataclass
class BiasRow:
    family: str
    group: str
    rank: int
    category: str
    algorithm: str
    bias_train: float | None
    bias_rec: float | None
    disparity: float | None
    lowest: bool


BIAS_HEADER = ["group", "rank", "category", "algorithm", "bias_train", "bias_rec",
               "disparity", "lowest"]


def top_categories(records: list[CategoryBiasRecord], group: str, count: int = 10,
                   by: str = "pr") -> list[str]:
    """Most preferred categories of ``group`` in the (fold-averaged)
    training data, by preference ratio or by bias."""
    recs = [r for r in records if r.group == group]
    if by == "pr":
        key = {r.category: r.pr_train for r in recs}
    elif by == "bias":
        key = {r.category: r.bias_train for r in recs}
    else:
        raise ValueError(f"unknown ranking {by!r}")
    cats = sorted((c for c, v in key.items() if v is not None), key=lambda c: (-key[c], c))
    return cats[:count]


def bias_rows(selected: dict, family: str, group: str, count: int = 10,
              by: str = "pr") -> list[BiasRow]:
    """Bias table of one family and group over the selected grid points."""
    algs = [s for s in selected.values() if s.family == family and s.status == "selected"]
    if not algs:
        return []
    tables = {s.algorithm: {r.category: r for r in s.point.report.mean_bias() if r.group == group}
              for s in algs}
    ref = algs[0].point.report.mean_bias()
    rows = []
    for rank, cat in enumerate(top_categories(ref, group, count, by), start=1):
        cells = [(s.algorithm, tables[s.algorithm].get(cat)) for s in algs]
        defined = [abs(r.disparity) for _, r in cells if r is not None and r.disparity is not None]
        best = min(defined) if defined else None
        for alg, r in cells:
            bd = None if r is None else r.disparity
            rows.append(BiasRow(
                family, group, rank, cat, alg,
                None if r is None else r.bias_train,
                None if r is None else r.bias_rec,
                bd, bd is not None and abs(bd) == best,
            ))
    return rows


def bias_svg(rows: list[BiasRow], title: str) -> str:
    """Grouped bar chart: one cluster per category, the training bias and
    one bar per algorithm, each algorithm bar annotated with its bias
    disparity (bold where lowest)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cats = list(dict.fromkeys(r.category for r in rows))
    algs = list(dict.fromkeys(r.algorithm for r in rows))
    cell = {(r.category, r.algorithm): r for r in rows}
    width = 0.8 / (len(algs) + 1)
    with matplotlib.rc_context({"svg.hashsalt": "recaudit", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(cats)), 4))
        x = np.arange(len(cats))
        train = [next((cell[c, a].bias_train for a in algs
                       if cell.get((c, a)) and cell[c, a].bias_train is not None), 0.0) for c in cats]
        ax.bar(x - 0.4 + width / 2, train, width, label="training", color="0.7")
        for k, a in enumerate(algs):
            pos = x - 0.4 + width * (k + 1.5)
            h = [(cell[c, a].bias_rec or 0.0) if (c, a) in cell else 0.0 for c in cats]
            ax.bar(pos, h, width, label=a)
            for xp, c, hv in zip(pos, cats, h):
                r = cell.get((c, a))
                txt = NA if r is None or r.disparity is None else f"{r.disparity:.2f}"
                ax.annotate(txt, (xp, hv), ha="center", va="bottom", fontsize=6, rotation=90,
                            fontweight="bold" if r is not None and r.lowest else "normal")
        ax.set_xticks(x)
        ax.set_xticklabels(cats, rotation=45, ha="right", fontsize=7)
        ax.set_ylabel("bias")
        ax.set_title(title)
        ax.legend(fontsize=6, ncol=2)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)
    return buf.getvalue()


def build_report(ledger: RunLedger, bands: dict | None = None, top: int = 10,
                 by: str = "pr") -> dict[str, str]:
    """Report file contents keyed by file name."""
    bands = dict(DEFAULT_BANDS if bands is None else bands)
    sel = select_equal_ndcg(ledger, bands=bands)
    files: dict[str, str] = {}
    files["summary.json"] = json.dumps(ledger.summary, indent=1, sort_keys=True) + "\n"

    rows = []
    for alg, s in sel.items():
        p = s.point
        rows.append([alg, s.family, s.status, s.band[0], s.band[1],
                     None if p is None else p.report.ndcg,
                     None if p is None else p.report.coverage,
                     None if p is None else p.report.average_disparity,
                     "" if p is None else _params(p.params), s.reason])
    files["selection.csv"] = _csv(rows, ["algorithm", "family", "status", "band_center",
                                         "band_halfwidth", "ndcg", "coverage",
                                         "average_disparity", "params", "reason"])

    groups = _groups(ledger)
    for fam in sorted({s.family for s in sel.values()}):
        for g in groups:
            brows = bias_rows(sel, fam, g, top, by)
            files[f"bias_{fam}_{g}.csv"] = _csv(
                [[r.group, r.rank, r.category, r.algorithm, r.bias_train, r.bias_rec,
                  r.disparity, int(r.lowest)] for r in brows], BIAS_HEADER)
            if brows:
                files[f"bias_{fam}_{g}.svg"] = bias_svg(brows, f"{fam} / {g}")

    frows = []
    for alg, pair in frontier(ledger).items():
        for f in pair:
            frows.append([alg, f.which, f.ndcg, f.coverage, f.average_disparity, _params(f.params)])
    files["frontier.csv"] = _csv(frows, ["algorithm", "which", "ndcg", "coverage",
                                         "average_disparity", "params"])
    return files


def _groups(ledger: RunLedger) -> list[str]:
    for a in ledger.aggregates:
        if a.report is not None:
            return list(dict.fromkeys(b.group for f in a.report.folds for b in f.bias))
    return []


def write_report(ledger: RunLedger, out_dir, bands=None, top: int = 10, by: str = "pr") -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for name, text in build_report(ledger, bands, top, by).items():
        p = out / name
        p.write_text(text, encoding="utf-8")
        written[name] = p
    (out / "report.json").write_text(json.dumps(
        {"bands": {k: list(v) for k, v in sorted((bands or DEFAULT_BANDS).items())},
         "top": top, "by": by}, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return written


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def verify_report(report_dir, ledger_dir) -> list[str]:
    """
    Re-derive a report from its ledger and compare.

    Checks that every file is byte-identical to a fresh rebuild, that each
    bias disparity cell equals ``(bias_rec - bias_train) / bias_train`` of
    its own row, that ``n/a`` appears exactly where that is undefined, and
    that fold means in the ledger match their folds.  Returns a list of
    problems; empty means verified.
    """
    report_dir = Path(report_dir)
    ledger = RunLedger.load(ledger_dir)
    problems = []
    meta_path = report_dir / "report.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    bands = {k: tuple(v) for k, v in meta.get("bands", {}).items()} or None
    with tempfile.TemporaryDirectory() as tmp:
        fresh = write_report(ledger, tmp, bands, meta.get("top", 10), meta.get("by", "pr"))
        names = set(fresh) | {p.name for p in report_dir.glob("*") if p.suffix in (".csv", ".svg")}
        for name in sorted(names):
            mine = report_dir / name
            if not mine.exists():
                problems.append(f"{name}: missing")
            elif name not in fresh:
                problems.append(f"{name}: not produced by the ledger")
            elif mine.read_bytes() != fresh[name].read_bytes():
                problems.append(f"{name}: differs from rebuild")
    for p in sorted(report_dir.glob("bias_*.csv")):
        for k, row in enumerate(_read_csv(p), start=2):
            bt = None if row["bias_train"] == NA else float(row["bias_train"])
            br = None if row["bias_rec"] == NA else float(row["bias_rec"])
            expect = bias_disparity(bt, br)
            got = None if row["disparity"] == NA else float(row["disparity"])
            if expect != got:
                problems.append(f"{p.name}:{k}: disparity {row['disparity']} != recomputed {_fmt(expect)}")
    for a in ledger.aggregates:
        if a.report is None:
            continue
        r = a.report
        for name in ("ndcg", "coverage", "average_disparity"):
            if getattr(r, name) != float(np.mean([getattr(f, name) for f in r.folds])):
                problems.append(f"{a.algorithm} {a.key}: {name} mean mismatch")
    return problems
