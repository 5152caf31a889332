"""Command line entry point.

    carnot-nonlocal run CONFIG [--out DIR] [--threads N] [--backend B]
    carnot-nonlocal list-experiments
    carnot-nonlocal describe EXPERIMENT

``run`` writes ``<experiment>.csv`` (plus ``<experiment>_<table>.csv`` for
auxiliary tables) and ``summary.json`` into the output directory.  Exit
status: 0 when every criterion passes, 1 when any fails, 2 on a bad config.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .experiments import DESCRIPTIONS, EXPERIMENTS, ConvergenceReport, run_experiment

log = logging.getLogger("carnot_nonlocal")


def _cell(v):
    # repr of a Python float round-trips exactly, so reruns compare byte for byte
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c, "")) for c in columns])


def write_report(out: Path, rep: ConvergenceReport) -> None:
    write_csv(out / f"{rep.experiment}.csv", rep.columns, rep.rows)
    for tname, (cols, rows) in sorted(rep.tables.items()):
        write_csv(out / f"{rep.experiment}_{tname}.csv", cols, rows)


def summary_entry(rep: ConvergenceReport) -> dict:
    d = {
        "experiment": rep.experiment,
        "criteria": [c.as_dict() for c in rep.criteria],
        "pass": rep.passed,
    }
    if rep.slope is not None:
        d["slope"] = float(rep.slope) if rep.slope == rep.slope else "nan"
    if rep.error is not None:
        d["error"] = rep.error
    return d


def cmd_run(args) -> int:
    if args.threads:
        os.environ["CARNOT_NUM_THREADS"] = str(args.threads)
    if args.backend:
        os.environ["CARNOT_NONLOCAL_BACKEND"] = args.backend
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.out or "results")
    if not out.is_absolute() and not args.out and cfg.out:
        out = cfg.base_dir / out
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for name in cfg.experiments:
        log.info("running %s", name)
        try:
            rep = run_experiment(cfg, name)
        except ConfigError as exc:
            print(f"config error in {name}: {exc}", file=sys.stderr)
            return 2
        if rep.columns:
            write_report(out, rep)
        entries.append(summary_entry(rep))
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {name}")
        for c in rep.criteria:
            print(f"    {'pass' if c.passed else 'FAIL'} {c.name}: {c.measured:.6g} (bound {c.bound:.6g})")
        if rep.error:
            print(f"    error: {rep.error}")
    summary = {"seed": cfg.seed, "experiments": entries, "pass": all(e["pass"] for e in entries)}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0 if summary["pass"] else 1


def cmd_list(args) -> int:
    for name in EXPERIMENTS:
        print(name)
    return 0


def cmd_describe(args) -> int:
    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment {args.experiment!r}", file=sys.stderr)
        return 2
    print(f"{args.experiment}: {DESCRIPTIONS[args.experiment]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carnot-nonlocal", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiments listed in a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: [run] out, else ./results)")
    r.add_argument("--threads", type=int, help="thread count (overrides CARNOT_NUM_THREADS)")
    r.add_argument("--backend", choices=["auto", "cython", "python"])
    r.set_defaults(func=cmd_run)
    sub.add_parser("list-experiments", help="print the experiment names").set_defaults(func=cmd_list)
    d = sub.add_parser("describe", help="describe one experiment and its CSV columns")
    d.add_argument("experiment")
    d.set_defaults(func=cmd_describe)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
