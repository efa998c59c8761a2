"""Command-line entry point: ``hotspot-ipp run`` and ``hotspot-ipp compare``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, bundled_config, load

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3

SUMMARY_HEADER = ["strategy", "metric", "mean", "std", "n"]


def resolve_config_path(name: str) -> Path:
    """A path on disk, or the stem of a bundled config such as ``synthetic_single``."""
    path = Path(name)
    if path.exists():
        return path
    bundled = bundled_config(name if name.endswith(".json") else name + ".json")
    if bundled.exists():
        return bundled
    raise ConfigError(f"no such config file or bundled config: {name}")


def cmd_run(args) -> int:
    from .experiment import plan_jobs, run_experiment

    exp = load(resolve_config_path(args.config))
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        exp.raw["seeds"] = list(range(args.seeds))
    out = Path(args.out) if args.out else Path(exp.raw["output_dir"])
    jobs = plan_jobs(exp)
    if args.dry_run:
        exp.build_field()
        print(json.dumps({"version": __version__, "output_dir": str(out),
                          "jobs": len(jobs), "config": exp.raw}, indent=2))
        return EXIT_OK
    run_experiment(exp, out, args.threads)
    print(f"{len(jobs)} missions written to {out}")
    print((out / "summary.csv").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def read_summary(path) -> dict[str, dict[str, tuple[float, float, int]]]:
    """Parse a summary.csv into ``{strategy: {metric: (mean, std, n)}}``."""
    path = Path(path)
    if path.is_dir():
        path = path / "summary.csv"
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SUMMARY_HEADER:
            raise ConfigError(f"{path}: not a summary file (header {header})")
        out: dict[str, dict] = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ConfigError(f"{path}:{lineno}: expected 5 columns, got {len(row)}")
            out.setdefault(row[0], {})[row[1]] = (float(row[2]), float(row[3]), int(row[4]))
    return out


def merge_summaries(paths) -> tuple[list[str], dict[str, dict]]:
    """Columns in input order; names are strategies, prefixed by source when ambiguous."""
    tables = [read_summary(p) for p in paths]
    pairs = [(str(p), s) for p, t in zip(paths, tables) for s in t]
    unique = len({s for _, s in pairs}) == len(pairs)
    columns: dict[str, dict] = {}
    for src, table in zip(paths, tables):
        for strat, metrics in table.items():
            columns[strat if unique else f"{src}:{strat}"] = metrics
    return list(columns), columns


def reference_column(name: str, names: list[str]) -> str:
    """First earlier column with the same strategy, else the first column."""
    strategy = name.rsplit(":", 1)[-1]
    for other in names[:names.index(name)]:
        if other.rsplit(":", 1)[-1] == strategy:
            return other
    return names[0]


def column_mismatches(columns: dict[str, dict]) -> list[str]:
    names = list(columns)
    ref = set(columns[names[0]])
    problems = []
    for name in names[1:]:
        metrics = set(columns[name])
        if metrics != ref:
            missing = sorted(ref - metrics)
            extra = sorted(metrics - ref)
            problems.append(f"{name}: missing {missing} extra {extra} relative to {names[0]}")
    return problems


def cmd_compare(args) -> int:
    names, columns = merge_summaries(args.summaries)
    if len(names) < 2:
        raise ConfigError("compare needs at least two strategy columns")
    problems = column_mismatches(columns)
    if problems:
        for p in problems:
            print(f"column mismatch: {p}", file=sys.stderr)
        return EXIT_FAILURE
    metrics = list(columns[names[0]])
    width = max(12, *(len(n) for n in names))
    print(f"{'metric':<22}" + "".join(f"{n:>{width + 4}}" for n in names))
    for m in metrics:
        cells = "".join(f"{columns[n][m][0]:>{width - 6}.3f} ± {columns[n][m][1]:<7.3f}" for n in names)
        print(f"{m:<22}{cells}")
    for n in names[1:]:
        ref = reference_column(n, names)
        delta = max(abs(columns[n][m][0] - columns[ref][m][0]) for m in metrics)
        print(f"max |mean difference| {n} vs {ref}: {delta:.6f}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["metric"] + [f"{n}_{s}" for n in names for s in ("mean", "std")])
            for m in metrics:
                w.writerow([m] + [f"{v:.6f}" for n in names for v in columns[n][m][:2]])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hotspot-ipp",
                                     description="GP-MCTS hotspot search experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every mission of an experiment config")
    run.add_argument("config", help="JSON config path or bundled config name")
    run.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the config's list")
    run.add_argument("--out", help="output directory (default: the config's output_dir)")
    run.add_argument("--threads", type=int, help="worker processes (default: $HOTSPOT_IPP_THREADS or CPU count)")
    run.add_argument("--dry-run", action="store_true", help="validate and print the resolved config")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="merge two or more summary.csv files")
    cmp_.add_argument("summaries", nargs="+", help="summary.csv files or run directories")
    cmp_.add_argument("--out", help="write the merged table as CSV")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
