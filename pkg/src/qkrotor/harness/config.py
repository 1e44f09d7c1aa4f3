"""
Experiment configuration: loading, defaults, validation and resolution of
parameter grids into concrete points.

A config is a YAML mapping. ``grid`` is a mapping (or a list of mappings,
whose resolved points are concatenated) from point keys to a scalar or a list;
lists are expanded as a cartesian product. Point keys:

    n_q, K (or k), T (number or "2pi/N"), epsilon, n0 (int, "1" or "N/2"),
    n_bar (number or "N/2"), t_max

Everything else is experiment-wide. ``resolved_config`` returns the config
with every default written out, and that is what the manifest records.
"""
from __future__ import annotations

import copy
import hashlib
import itertools
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from ..circuits import resolve_T
from ..statevector import ConfigurationError

KINDS = ("evolve", "sweep_tq", "sweep_tf", "sweep_tw", "wigner_map", "husimi_map",
         "tunneling", "classical_portrait", "classical_density")
CLASSICAL_KINDS = ("classical_portrait", "classical_density")
POINT_KEYS = ("n_q", "K", "k", "T", "epsilon", "n0", "n_bar", "t_max")
WORKERS_ENV = "QKROTOR_WORKERS"

DEFAULTS = {
    "experiment": None,
    "kind": None,
    "grid": None,
    "t_max": 1000,
    "cadence": {"kind": "dense", "dense_until": 100, "stride": 10},
    "realizations": 1,
    "master_seed": 0,
    "tilt": "plane",
    "stop_early": True,
    "outdir": "runs",
    "workers": None,
    "memory_budget_gb": 4.0,
    "observables": ["second_moment", "fidelity"],
    "threshold": 0.5,
    "zones": None,
    "domain": None,
    "options": {},
}

# kind-specific defaults layered over DEFAULTS
KIND_DEFAULTS = {
    "sweep_tw": {"cadence": {"kind": "geometric", "growth": 1.1},
                 "zones": ["chaotic", "integrable"]},
    "wigner_map": {"stop_early": False},
    "husimi_map": {"stop_early": False},
    "tunneling": {"stop_early": False},
}


@dataclass(frozen=True)
class Point:
    """One fully resolved parameter point."""

    n_q: int | None
    K: float
    k: float
    T: float
    T_rule: str
    epsilon: float
    n0: int | None
    n_bar: float | None
    t_max: int

    @property
    def N(self) -> int | None:
        return None if self.n_q is None else 1 << self.n_q

    def to_dict(self) -> dict:
        return {"n_q": self.n_q, "N": self.N, "K": self.K, "k": self.k, "T": self.T,
                "T_rule": self.T_rule, "epsilon": self.epsilon, "n0": self.n0,
                "n_bar": self.n_bar, "t_max": self.t_max}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key != "grid":
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def with_defaults(raw: dict) -> dict:
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a mapping")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigurationError(f"kind must be one of {KINDS}, got {kind!r}")
    cfg = _merge(DEFAULTS, KIND_DEFAULTS.get(kind, {}))
    # a user cadence replaces the default one wholesale
    if "cadence" in raw:
        cfg["cadence"] = {}
    cfg = _merge(cfg, raw)
    if cfg["experiment"] is None:
        cfg["experiment"] = kind
    return cfg


def load_config(path) -> dict:
    with Path(path).open() as fh:
        raw = yaml.safe_load(fh)
    return with_defaults(raw or {})


def _listify(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _resolve_n0(rule, N: int) -> int:
    if isinstance(rule, str):
        if rule.replace(" ", "") == "N/2":
            return N // 2
        try:
            return int(rule)
        except ValueError:
            raise ConfigurationError(f"bad n0 rule {rule!r}") from None
    if isinstance(rule, bool) or not isinstance(rule, int):
        raise ConfigurationError(f"n0 must be an integer or 'N/2', got {rule!r}")
    return rule


def _resolve_point(raw: dict, cfg: dict) -> Point:
    kind = cfg["kind"]
    t_max = int(raw.get("t_max", cfg["t_max"]))
    if t_max < 1:
        raise ConfigurationError("t_max must be >= 1")
    eps = float(raw.get("epsilon", 0.0))
    if eps < 0:
        raise ConfigurationError("epsilon must be >= 0")
    if ("K" in raw) == ("k" in raw):
        raise ConfigurationError("give exactly one of K and k per grid")
    if kind in CLASSICAL_KINDS:
        # only K matters classically; run with T = 1
        K = float(raw["K"]) if "K" in raw else float(raw["k"])
        return Point(None, K, K, 1.0, "1", eps, None, None, t_max)
    if "n_q" not in raw:
        raise ConfigurationError("grid needs n_q")
    n_q = int(raw["n_q"])
    if not 1 <= n_q <= 30:
        raise ConfigurationError(f"n_q={n_q} out of range")
    N = 1 << n_q
    T_rule = raw.get("T", "2pi/N")
    T = resolve_T(T_rule, n_q)
    if "K" in raw:
        K = float(raw["K"])
        k = K / T
    else:
        k = float(raw["k"])
        K = k * T
    n0 = _resolve_n0(raw.get("n0", "N/2"), N)
    nb = raw.get("n_bar", "N/2")
    n_bar = N // 2 if isinstance(nb, str) and nb.replace(" ", "") == "N/2" else float(nb)
    if not 0 <= n0 < N:
        raise ConfigurationError(f"n0={n0} outside 0..{N - 1}")
    if not 0 <= n_bar <= N:
        raise ConfigurationError(f"n_bar={n_bar} outside 0..{N}")
    return Point(n_q, K, k, T, str(T_rule), eps, n0, n_bar, t_max)


def resolve_points(cfg: dict) -> list[Point]:
    grids = cfg["grid"]
    if grids is None:
        raise ConfigurationError("config has no grid")
    grids = grids if isinstance(grids, list) else [grids]
    points = []
    for g in grids:
        if not isinstance(g, dict):
            raise ConfigurationError("each grid must be a mapping")
        bad = set(g) - set(POINT_KEYS)
        if bad:
            raise ConfigurationError(f"unknown grid keys: {sorted(bad)}")
        keys = list(g)
        for combo in itertools.product(*(_listify(g[k]) for k in keys)):
            points.append(_resolve_point(dict(zip(keys, combo)), cfg))
    seen, unique = set(), []
    for p in points:
        if p not in seen:
            seen.add(p)
            unique.append(p)
    return unique


def settings_of(cfg: dict) -> dict:
    """The experiment-wide settings that influence numerical results."""
    keys = ("kind", "cadence", "tilt", "stop_early", "observables", "threshold",
            "zones", "domain", "options")
    return {k: cfg[k] for k in keys}


def param_hash(point: Point, cfg: dict) -> str:
    """First 12 hex digits of SHA-256 over the canonical JSON of the point,
    the result-relevant settings and the master seed."""
    blob = json.dumps({"point": point.to_dict(), "settings": settings_of(cfg),
                       "master_seed": int(cfg["master_seed"])},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def stream_id(phash: str, realization: int | str) -> int:
    """64-bit noise-stream id for one realization of one point.

    The generator is seeded with ``SeedSequence([master_seed, stream_id])``
    where ``stream_id`` is the first 8 bytes (little endian) of
    ``BLAKE2b("<param-hash>/<realization>")``. It depends only on the point and
    the realization index, never on scheduling.
    """
    digest = hashlib.blake2b(f"{phash}/{realization}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def resolve_workers(cfg: dict, override: int | None = None) -> int:
    if override is not None:
        w = override
    elif os.environ.get(WORKERS_ENV):
        w = int(os.environ[WORKERS_ENV])
    elif cfg.get("workers"):
        w = int(cfg["workers"])
    else:
        w = os.cpu_count() or 1
    if w < 1:
        raise ConfigurationError("worker count must be >= 1")
    return w


def states_per_task(kind: str) -> int:
    # noisy state, co-evolved exact state and FFT scratch
    return {"evolve": 3, "sweep_tf": 3, "sweep_tw": 3}.get(kind, 2)


def memory_estimate(cfg: dict, points: list[Point], workers: int) -> float:
    """Bytes needed by ``workers`` concurrent tasks on the largest point."""
    n_max = max((p.n_q for p in points if p.n_q is not None), default=0)
    if n_max == 0:
        return 0.0
    per_state = 2 * 16 * 2.0 ** n_max
    # chunked Wigner / Husimi row blocks are capped near 64 MiB
    scratch = 64 * 2.0 ** 20 if cfg["kind"] in ("sweep_tw", "wigner_map", "husimi_map", "tunneling") else 0
    return workers * (states_per_task(cfg["kind"]) * per_state + scratch)


def validate(cfg: dict, workers: int | None = None) -> list[Point]:
    """Resolve and check a defaulted config; returns its points."""
    if int(cfg["realizations"]) < 1:
        raise ConfigurationError("realizations must be >= 1")
    if cfg["tilt"] not in ("plane", "sphere"):
        raise ConfigurationError(f"unknown tilt {cfg['tilt']!r}")
    cad = cfg["cadence"]
    if cad.get("kind", "dense") not in ("dense", "geometric", "every"):
        raise ConfigurationError(f"unknown cadence {cad!r}")
    if not 0 < float(cfg["threshold"]):
        raise ConfigurationError("threshold must be positive")
    points = resolve_points(cfg)
    if not points:
        raise ConfigurationError("grid resolves to no points")
    kind = cfg["kind"]
    if kind == "sweep_tw" and not cfg["zones"]:
        raise ConfigurationError("sweep_tw needs at least one zone")
    if kind == "sweep_tf" and any(p.epsilon == 0 for p in points):
        raise ConfigurationError("sweep_tf needs epsilon > 0 at every point")
    w = resolve_workers(cfg, workers)
    need = memory_estimate(cfg, points, w)
    budget = float(cfg["memory_budget_gb"]) * 2.0 ** 30
    if need > budget:
        raise ConfigurationError(
            f"estimated memory {need / 2**30:.2f} GiB with {w} workers exceeds the "
            f"{budget / 2**30:.2f} GiB budget; lower n_q, reduce workers "
            f"(--workers or {WORKERS_ENV}) or raise memory_budget_gb")
    if any(not math.isfinite(p.T) or p.T <= 0 for p in points):
        raise ConfigurationError("T must be positive")
    return points
