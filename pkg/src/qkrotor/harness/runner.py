"""
Sweep execution, persistence and aggregation.

Output layout for one experiment::

    <outdir>/<experiment>/
        manifest.json                    resolved config, points, seeds, timings
        aggregate.csv                    per-point means over realizations
        <param-hash>/point.json          the resolved point
        <param-hash>/reference*.txt      noise-free arm shared by realizations
        <param-hash>/realization-<i>.csv one noise realization
        <param-hash>/<name>-r<i>.txt     matrices emitted by realization i

Every file is written to a temporary name and renamed into place, and a
realization CSV is written last, so its presence marks the task complete.
Rerunning skips completed tasks, which makes sweeps resumable; aggregates are
always recomputed from the realization files, in a fixed order, so they do
not depend on scheduling or worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..observables import CSV_COLUMNS, read_series_csv
from ..phasespace import load_grid
from .config import param_hash, resolve_workers, settings_of, stream_id, validate, with_defaults
from .experiments import (
    REALIZATION_KERNELS,
    REFERENCE,
    REFERENCE_KERNELS,
    REFERENCE_KINDS,
    Task,
)

AGGREGATE_COLUMNS = ("param_hash", "n_q", "K", "k", "T", "epsilon", "n0", "observable_name",
                     "t", "mean", "stderr", "count", "missing")


@dataclass
class RunRecord:
    point: dict
    param_hash: str
    seeds: list[int]
    aggregate: list[dict]
    wall_time: float = 0.0
    version: str = __version__
    completed: int = 0
    directory: str = ""


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _grid_text(values, header, fmt) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    np.savetxt(buf, np.atleast_2d(values), fmt=fmt)
    return buf.getvalue()


def _series_text(series) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for s in series:
        w.writerows(s.to_rows())
    return buf.getvalue()


def realization_path(point_dir: Path, r: int) -> Path:
    return point_dir / f"realization-{r}.csv"


def _reference_files(point_dir: Path) -> dict:
    return {p.stem: load_grid(p)[0] for p in sorted(point_dir.glob("reference*.txt"))}


def execute(task: Task, point_dir: str) -> float:
    """Run one task and write its files; returns the wall time in seconds."""
    start = time.perf_counter()
    d = Path(point_dir)
    kind = task.settings["kind"]
    if task.realization == REFERENCE:
        result = REFERENCE_KERNELS[kind](task)
        for name, (values, header, fmt) in result.files.items():
            _atomic_write(d / f"{name}.txt", _grid_text(values, header, fmt))
        _atomic_write(d / "reference.done", "")
        return time.perf_counter() - start
    kernel = REALIZATION_KERNELS[kind]
    result = kernel(task, _reference_files(d)) if kind in REFERENCE_KINDS else kernel(task)
    for name, (values, header, fmt) in result.files.items():
        _atomic_write(d / f"{name}-r{task.realization}.txt", _grid_text(values, header, fmt))
    _atomic_write(realization_path(d, task.realization), _series_text(result.series))
    return time.perf_counter() - start


def _fmt(x: float) -> str:
    return repr(float(x))


def aggregate_point(point_dir: Path, realizations: int) -> list[dict]:
    """Mean and standard error over realizations for every (observable, t)."""
    groups: dict[tuple[str, int], list[float]] = {}
    for r in range(realizations):
        path = realization_path(point_dir, r)
        if not path.exists():
            continue
        for name, s in read_series_csv(path).items():
            for t, v in zip(s.times.tolist(), s.values.tolist()):
                groups.setdefault((name, t), []).append(v)
    rows = []
    for (name, t) in sorted(groups):
        vals = np.asarray(groups[(name, t)])
        fin = vals[np.isfinite(vals)]
        n = fin.size
        mean = float(np.mean(fin)) if n else math.nan
        se = float(np.std(fin, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append({"observable_name": name, "t": t, "mean": mean, "stderr": se,
                     "count": n, "missing": int(vals.size - n)})
    return rows


def _write_aggregate(path: Path, records: list[RunRecord]) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=AGGREGATE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rec in records:
        p = rec.point
        for row in rec.aggregate:
            w.writerow({"param_hash": rec.param_hash, "n_q": "" if p["n_q"] is None else p["n_q"],
                        "K": _fmt(p["K"]), "k": _fmt(p["k"]), "T": _fmt(p["T"]),
                        "epsilon": _fmt(p["epsilon"]), "n0": "" if p["n0"] is None else p["n0"],
                        "observable_name": row["observable_name"], "t": row["t"],
                        "mean": _fmt(row["mean"]), "stderr": _fmt(row["stderr"]),
                        "count": row["count"], "missing": row["missing"]})
    _atomic_write(path, buf.getvalue())


def read_aggregate(path) -> list[dict]:
    """Rows of an aggregate CSV with numeric fields converted."""
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            for key in ("K", "k", "T", "epsilon", "mean", "stderr"):
                row[key] = float(row[key])
            for key in ("t", "count", "missing"):
                row[key] = int(row[key])
            row["n_q"] = int(row["n_q"]) if row["n_q"] else None
            row["n0"] = int(row["n0"]) if row["n0"] else None
            out.append(row)
    return out


def _run_tasks(jobs: list[tuple[Task, str]], workers: int) -> dict[tuple[str, int], float]:
    times = {}
    if not jobs:
        return times
    if workers == 1 or len(jobs) == 1:
        for task, d in jobs:
            times[(task.param_hash, task.realization)] = execute(task, d)
        return times
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        futures = {pool.submit(execute, task, d): task for task, d in jobs}
        for fut, task in futures.items():
            times[(task.param_hash, task.realization)] = fut.result()
    return times


def run(config: dict, workers: int | None = None, outdir=None,
        max_tasks: int | None = None, log=None) -> list[RunRecord]:
    """Run (or resume) an experiment and return one record per parameter point.

    ``max_tasks`` caps the number of tasks executed in this call, which lets a
    long sweep be advanced in slices; completed tasks are never recomputed.
    """
    cfg = with_defaults(config)
    if outdir is not None:
        cfg = dict(cfg, outdir=str(outdir))
    points = validate(cfg, workers)
    w = resolve_workers(cfg, workers)
    exp_dir = Path(cfg["outdir"]) / cfg["experiment"]
    exp_dir.mkdir(parents=True, exist_ok=True)
    settings = settings_of(cfg)
    seed = int(cfg["master_seed"])
    R = int(cfg["realizations"])

    dirs, hashes = [], []
    for p in points:
        h = param_hash(p, cfg)
        d = exp_dir / h
        d.mkdir(exist_ok=True)
        info = json.dumps({"param_hash": h, "point": p.to_dict()}, indent=2, sort_keys=True)
        if not (d / "point.json").exists():
            _atomic_write(d / "point.json", info + "\n")
        dirs.append(d)
        hashes.append(h)

    budget = math.inf if max_tasks is None else int(max_tasks)
    phase1, phase2 = [], []
    for p, h, d in zip(points, hashes, dirs):
        if cfg["kind"] in REFERENCE_KINDS and not (d / "reference.done").exists():
            phase1.append((Task(p, settings, seed, h, REFERENCE), str(d)))
    for p, h, d in zip(points, hashes, dirs):
        for r in range(R):
            if not realization_path(d, r).exists():
                phase2.append((Task(p, settings, seed, h, r), str(d)))
    phase1 = phase1[:int(min(budget, len(phase1)))]
    budget -= len(phase1)
    started = time.perf_counter()
    timings = _run_tasks(phase1, w)
    if budget > 0:
        # realizations of a point need its reference; skip points still lacking one
        ready = [(t, d) for t, d in phase2
                 if cfg["kind"] not in REFERENCE_KINDS or (Path(d) / "reference.done").exists()]
        ready = ready[:int(min(budget, len(ready)))]
        timings.update(_run_tasks(ready, w))
    if log:
        log(f"{cfg['experiment']}: ran {len(timings)} tasks in "
            f"{time.perf_counter() - started:.1f} s with {w} worker(s)")

    records = []
    for p, h, d in zip(points, hashes, dirs):
        agg = aggregate_point(d, R)
        done = sum(realization_path(d, r).exists() for r in range(R))
        wall = sum(v for (hh, _), v in timings.items() if hh == h)
        records.append(RunRecord(p.to_dict(), h, [stream_id(h, r) for r in range(R)], agg,
                                 wall, __version__, done, str(d)))
    _write_aggregate(exp_dir / "aggregate.csv", records)
    manifest = {
        "version": __version__,
        "config": cfg,
        "workers": w,
        "seeding": "SeedSequence([master_seed, stream_id]); stream_id = first 8 bytes (little "
                   "endian) of BLAKE2b('<param_hash>/<realization>')",
        "complete": all(r.completed == R for r in records),
        "points": [{"param_hash": r.param_hash, "point": r.point, "seeds": r.seeds,
                    "completed": r.completed, "wall_time_this_run": r.wall_time}
                   for r in records],
    }
    _atomic_write(exp_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return records


def timescales(records: list[RunRecord], name: str) -> list[tuple[dict, dict]]:
    """``(point, aggregate row)`` of a summary observable for every point."""
    out = []
    for rec in records:
        for row in rec.aggregate:
            if row["observable_name"] == name:
                out.append((rec.point, row))
    return out
