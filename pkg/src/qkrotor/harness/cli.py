"""Command-line entry point: ``qkrotor {run,reproduce,validate,oracle-check}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from ..statevector import ConfigurationError
from .config import load_config, memory_estimate, resolve_workers, validate, with_defaults
from .oracle import oracle_suite
from .recipes import FIGURES, apply_overrides, recipe, write_plot_stub
from .runner import run

log = logging.getLogger("qkrotor")


def _summary(records) -> str:
    done = sum(r.completed for r in records)
    return f"{len(records)} points, {done} realizations on disk"


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    records = run(cfg, workers=args.workers, outdir=args.outdir, max_tasks=args.max_tasks,
                  log=log.info)
    print(_summary(records))
    return 0


def cmd_reproduce(args) -> int:
    configs = apply_overrides(recipe(args.figure), args.override or [])
    if args.dry_run:
        print(yaml.safe_dump([with_defaults(c) for c in configs], sort_keys=False))
        return 0
    outdir = None
    for cfg in configs:
        records = run(cfg, workers=args.workers, outdir=args.outdir, max_tasks=args.max_tasks,
                      log=log.info)
        outdir = args.outdir or with_defaults(cfg)["outdir"]
        print(f"{cfg['experiment']}: {_summary(records)}")
    stub = write_plot_stub(args.figure, outdir)
    print(f"plot stub: {stub}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    points = validate(cfg, args.workers)
    w = resolve_workers(cfg, args.workers)
    print(json.dumps({
        "experiment": cfg["experiment"],
        "kind": cfg["kind"],
        "points": len(points),
        "tasks": len(points) * int(cfg["realizations"]),
        "workers": w,
        "memory_estimate_gib": round(memory_estimate(cfg, points, w) / 2**30, 3),
    }, indent=2))
    return 0


def cmd_oracle(args) -> int:
    results = oracle_suite(args.max_n_q, args.steps)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} oracle checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qkrotor", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: QKROTOR_WORKERS, config, CPU count)")
        sp.add_argument("--outdir", type=Path, default=None)
        sp.add_argument("--max-tasks", type=int, default=None,
                        help="run at most this many tasks, then stop (resume later)")

    sp = sub.add_parser("run", help="run or resume the experiment in a YAML config")
    sp.add_argument("config", type=Path)
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("reproduce", help="run a figure recipe")
    sp.add_argument("figure", choices=FIGURES)
    sp.add_argument("--override", action="append", metavar="KEY=VALUE",
                    help="override a recipe setting, e.g. realizations=20 or grid.n_q=[8,10]")
    sp.add_argument("--dry-run", action="store_true", help="print the resolved configs only")
    common(sp)
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("validate", help="check a config and print its size")
    sp.add_argument("config", type=Path)
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("oracle-check", help="circuit vs dense-operator equivalence suite")
    sp.add_argument("--max-n-q", type=int, default=6)
    sp.add_argument("--steps", type=int, default=100)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
