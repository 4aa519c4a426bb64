"""
Command-line entry point.

::

    recaudit [--seed N] [--folds K] [--list-size N] [--out PATH] COMMAND ...

    inspect   load a dataset and print its statistics
    split     write the cross-validation fold of every rating
    sweep     run a hyperparameter sweep into a ledger directory
    report    build bias tables, charts and the frontier from a ledger
    verify    re-derive a report from its ledger and diff

Exit status is 0 on success, 1 when the work itself fails (every sweep
point failed, verification mismatch) and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import DatasetError, kfold_split, load_dataset, write_split
from .harness import RunLedger, bundled_config, load_config, run_sweep
from .models import ConfigError
from .report import verify_report, write_report

_log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


def _add_data_args(p: argparse.ArgumentParser, required: bool):
    g = p.add_argument_group("dataset")
    g.add_argument("--ratings")
    g.add_argument("--trust")
    g.add_argument("--groups")
    g.add_argument("--categories")
    g.add_argument("--bundled", action="store_true",
                   help="use the synthetic core-40 fixture shipped with the package")
    g.add_argument("--protected", default="female")
    g.add_argument("--unprotected", default="male")
    p.set_defaults(data_required=required)


def _has_data_args(args) -> bool:
    return args.bundled or any(getattr(args, k) for k in ("ratings", "trust", "groups", "categories"))


def _load(args):
    if args.bundled:
        from .synthetic import bundled_paths

        p = bundled_paths()
        paths = [p[k] for k in ("ratings", "trust", "groups", "categories")]
    else:
        missing = [k for k in ("ratings", "trust", "groups", "categories") if not getattr(args, k)]
        if missing:
            raise UsageError("missing --" + ", --".join(missing) + " (or pass --bundled)")
        paths = [args.ratings, args.trust, args.groups, args.categories]
    data = load_dataset(*paths, protected=args.protected, unprotected=args.unprotected)
    if data.categories.n_categories == 0:
        _log.warning("no item categories loaded; bias metrics are unavailable")
    return data


def cmd_inspect(args) -> int:
    data = _load(args)
    summary = data.report.as_dict()
    summary["digest"] = data.digest
    text = json.dumps(summary, indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_split(args) -> int:
    data = _load(args)
    if not args.out:
        raise UsageError("split needs --out FILE")
    split = kfold_split(data.ratings, args.folds or 5, args.seed or 0)
    write_split(split, data.ratings, args.out)
    print(f"wrote {data.ratings.nnz} assignments over {split.k} folds to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    if not args.out:
        raise UsageError("sweep needs --out DIR")
    path = bundled_config(args.config[len("bundled:"):]) if args.config.startswith("bundled:") \
        else Path(args.config)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    config = load_config(path)
    if args.folds is not None:
        config.folds = args.folds
    if args.seed is not None:
        config.seed = args.seed
    if args.list_size is not None:
        config.list_size = args.list_size
    config.__post_init__()
    data = _load(args) if _has_data_args(args) else config.load_data()
    if data.categories.n_categories == 0:
        raise UsageError("dataset has no item categories")
    ledger = run_sweep(config, data, args.out, workers=args.workers,
                       progress=None if args.quiet else (lambda m: print(m, file=sys.stderr)))
    n_points = len(ledger.aggregates)
    n_ok = sum(a.status == "ok" for a in ledger.aggregates)
    print(f"{n_points} grid points, {ledger.executed} runs executed, "
          f"{ledger.cached} skipped (cached), {ledger.failed} failed")
    for a in ledger.aggregates:
        if a.status == "ok":
            r = a.report
            print(f"  {a.algorithm:<12} ndcg={r.ndcg:.4f} coverage={r.coverage:6.2f} "
                  f"avg_disparity={r.average_disparity:.2f}  {a.params}")
        else:
            print(f"  {a.algorithm:<12} FAILED  {a.params}")
    return 0 if n_ok else 1


def _parse_band(text: str) -> tuple[str, tuple[float, float]]:
    try:
        fam, rest = text.split("=", 1)
        c, h = rest.split(":", 1)
        return fam, (float(c), float(h))
    except ValueError:
        raise UsageError(f"bad band {text!r}; expected FAMILY=CENTER:HALFWIDTH") from None


def cmd_report(args) -> int:
    if not args.out:
        raise UsageError("report needs --out DIR")
    ledger = _ledger(args.ledger)
    bands = None
    if args.band:
        from .harness import DEFAULT_BANDS

        bands = dict(DEFAULT_BANDS)
        bands.update(dict(_parse_band(b) for b in args.band))
    files = write_report(ledger, args.out, bands, top=args.top, by=args.rank_by)
    for name in sorted(files):
        print(files[name])
    return 0


def cmd_verify(args) -> int:
    _ledger(args.ledger)
    if not Path(args.report).is_dir():
        raise FileNotFoundError(f"no such directory: {args.report}")
    problems = verify_report(args.report, args.ledger)
    for p in problems:
        print(p)
    print("verified" if not problems else f"{len(problems)} mismatch(es)")
    return 0 if not problems else 1


def _ledger(directory) -> RunLedger:
    if not (Path(directory) / "ledger.json").exists():
        raise FileNotFoundError(f"no such file: {Path(directory) / 'ledger.json'}")
    return RunLedger.load(directory)


GLOBAL_DEFAULTS = {"seed": None, "folds": None, "list_size": None, "out": None, "verbose": False}


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS defaults let the flags appear before or after the subcommand
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    g.add_argument("--folds", type=int, default=argparse.SUPPRESS,
                   help="cross-validation folds (default 5)")
    g.add_argument("--list-size", type=int, default=argparse.SUPPRESS,
                   help="top-N list length (default 10)")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    ap = argparse.ArgumentParser(prog="recaudit", description=__doc__.split("\n\n")[0].strip(),
                                 parents=[common])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", parents=[common], help="print dataset statistics")
    _add_data_args(p, True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("split", parents=[common], help="write fold assignments")
    _add_data_args(p, True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("sweep", parents=[common], help="run a hyperparameter sweep")
    p.add_argument("config", help="TOML sweep config, or bundled:quick / bundled:full")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--quiet", action="store_true")
    _add_data_args(p, False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", parents=[common], help="build report files from a ledger")
    p.add_argument("ledger", help="sweep output directory")
    p.add_argument("--band", action="append", metavar="FAMILY=CENTER:HALFWIDTH")
    p.add_argument("--top", type=int, default=10, help="categories per group")
    p.add_argument("--rank-by", choices=("pr", "bias"), default="pr")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("verify", parents=[common], help="re-derive a report and diff")
    p.add_argument("report", help="report directory")
    p.add_argument("--ledger", required=True, help="sweep output directory")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    # set_defaults on the main parser would leak into the shared actions
    for k, v in GLOBAL_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for flag in ("folds", "list_size"):
        v = getattr(args, flag)
        if v is not None and v < (2 if flag == "folds" else 1):
            print(f"recaudit: error: --{flag.replace('_', '-')} too small: {v}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (UsageError, ConfigError, DatasetError, FileNotFoundError) as e:
        print(f"recaudit: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        _log.debug("failure", exc_info=True)
        print(f"recaudit: failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
