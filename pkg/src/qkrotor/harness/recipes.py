"""
Named desk-scale recipes for figures 1-13.

Each recipe is a list of experiment configs plus a plotting-script stub that
reads the emitted files. Defaults trade realization counts and the largest
registers for runtime; ``apply_overrides`` restores any full-size setting.
"""
from __future__ import annotations

import copy
import math
from pathlib import Path

import yaml

from ..classical import K_GOLDEN
from ..observables import C_Q, predicted_tq
from ..statevector import ConfigurationError

FIGURES = tuple(f"fig{i}" for i in range(1, 14))

# kicks before the exact second moment saturates at T = 0.5
SATURATION_TIME = {5.0: 50, 15.0: 200}


def feasible_tq_points(n_qs=range(10, 17), epsilons=(1e-4, 1e-3), Ks=(5.0, 15.0),
                       T: float = 0.5, t_limit: int = 1500) -> list[dict]:
    """Grid points whose predicted t_q lies between saturation and ``t_limit``.

    Below saturation there is no plateau to double; far above ``t_limit``
    the run is beyond desk scale. Each point gets a horizon of about four
    predicted doubling times.
    """
    pts = []
    for K in Ks:
        k = K / T
        for n in n_qs:
            for eps in epsilons:
                tq = predicted_tq(k, eps, n, C_Q)
                if SATURATION_TIME[K] <= tq <= t_limit:
                    t_max = int(min(4000, max(4 * tq, 4 * SATURATION_TIME[K], 400)))
                    pts.append({"n_q": n, "K": K, "T": T, "epsilon": eps, "n0": "N/2",
                                "t_max": t_max})
    return pts


def recipe(fig: str) -> list[dict]:
    if fig not in FIGURES:
        raise ConfigurationError(f"unknown figure {fig!r}; choose from {', '.join(FIGURES)}")
    return copy.deepcopy(_RECIPES[fig]())


def _fig1():
    return [{"experiment": "fig1", "kind": "classical_portrait", "grid": {"K": K_GOLDEN},
             "t_max": 10_000, "options": {"n_trajectories": 200, "bins": 64}}]


def _fig2():
    base = {"K": 15.0, "T": 0.5, "n0": "N/2"}
    return [{"experiment": "fig2", "kind": "evolve", "observables": ["second_moment"],
             "grid": [dict(base, n_q=[13, 14, 15, 16], epsilon=1e-4),
                      dict(base, n_q=14, epsilon=0.0)],
             "t_max": 2000, "realizations": 3}]


def _fig3():
    # the full sweep reaches n_q = 20; desk scale stops at 16
    return [{"experiment": "fig3", "kind": "sweep_tq", "grid": feasible_tq_points(),
             "realizations": 10}]


def _fig4():
    return [{"experiment": "fig4", "kind": "evolve", "observables": ["fidelity"],
             "grid": [{"n_q": 14, "K": 1.3, "T": "2pi/N", "n0": 1, "epsilon": [3e-3, 1e-2, 0.03]},
                      {"n_q": 14, "K": 5.0, "T": 0.5, "n0": "N/2", "epsilon": [3e-3, 1e-2]}],
             "t_max": 1000, "realizations": 3}]


def _fig5():
    n_qs = [4, 6, 8, 10, 12, 14]
    eps = [3e-3, 1e-2, 3e-2]
    return [{"experiment": "fig5", "kind": "sweep_tf",
             "grid": [{"n_q": n_qs, "K": 1.3, "T": "2pi/N", "n0": 1, "epsilon": eps},
                      {"n_q": n_qs, "K": 5.0, "T": 0.5, "n0": "N/2", "epsilon": eps}],
             "t_max": 6000, "realizations": 10}]


def _fig6():
    grid = {"n_q": 7, "K": 1.3, "T": "2pi/N", "n0": 1, "epsilon": [0.0, 0.002, 0.004]}
    return [{"experiment": "fig6_husimi", "kind": "husimi_map", "grid": grid, "t_max": 1000,
             "options": {"n_theta": 128, "n_momentum": 128}},
            {"experiment": "fig6_wigner", "kind": "wigner_map", "grid": grid, "t_max": 1000}]


def _fig7():
    eps = [0.0, 0.002, 0.004]
    return [{"experiment": "fig7_husimi", "kind": "husimi_map", "t_max": 1005,
             "grid": {"n_q": [9, 12, 14], "K": 1.3, "T": "2pi/N", "n0": 1, "epsilon": eps},
             "options": {"times": [1000], "average": 10}},
            {"experiment": "fig7_classical", "kind": "classical_density", "t_max": 1000,
             "grid": {"K": 1.3, "epsilon": eps},
             "options": {"average": 10, "count": 10_000, "p0": -math.pi + 2 * math.pi / 512}}]


def _fig8():
    return [{"experiment": "fig8", "kind": "sweep_tw", "zones": ["chaotic"],
             "grid": {"n_q": 10, "K": K_GOLDEN, "T": "2pi/N", "n0": "N/2",
                      "epsilon": [1e-4, 10 ** -3.5, 1e-3]},
             "t_max": 1000, "realizations": 10, "stop_early": False}]


def _fig9():
    return [{"experiment": "fig9", "kind": "sweep_tw", "zones": ["chaotic", "integrable"],
             "grid": {"n_q": list(range(5, 12)), "K": K_GOLDEN, "T": "2pi/N", "n0": "N/2",
                      "epsilon": 2e-3},
             "t_max": 4000, "realizations": 10},
            {"experiment": "fig9_localized", "kind": "sweep_tw",
             "zones": {"localized": {"shape": "band", "half_width": 25}},
             "grid": {"n_q": list(range(8, 15)), "K": 5.0, "T": 0.5, "n0": "N/2", "epsilon": 2e-3},
             "t_max": 4000, "realizations": 10}]


def _fig10():
    return [{"experiment": "fig10", "kind": "wigner_map", "t_max": 1000,
             "grid": {"n_q": list(range(4, 13)), "K": [0.5, 0.9, 1.3, 2.0], "T": "2pi/N", "n0": 1},
             "options": {"max_grid_N": 0}}]


def _fig11():
    return [{"experiment": "fig11", "kind": "wigner_map", "t_max": 1000,
             "grid": [{"n_q": list(range(4, 13)), "K": 2.0, "T": "2pi/N", "n0": 1},
                      {"n_q": list(range(4, 13)), "K": 5.0, "T": 0.5, "n0": 1}],
             "options": {"max_grid_N": 0}}]


def _fig12():
    return [{"experiment": "fig12", "kind": "tunneling", "t_max": 1000,
             "grid": {"n_q": 14, "K": 1.3, "T": "2pi/N", "n0": 1, "epsilon": 1e-3},
             "cadence": {"kind": "every", "stride": 10}, "realizations": 3},
            {"experiment": "fig12_inset", "kind": "classical_density", "t_max": 10_000,
             "grid": {"K": 1.3}, "options": {"count": 100, "average": 1, "bins": 128,
                                             "p0": -math.pi + 2 * math.pi / 2 ** 14}}]


def _fig13():
    return [{"experiment": "fig13", "kind": "tunneling", "t_max": 1050,
             "grid": {"n_q": list(range(8, 15)), "K": 1.3, "T": "2pi/N", "n0": 1,
                      "epsilon": [0.0, 3e-3]},
             "cadence": {"kind": "every", "stride": 50},
             "options": {"window": {"center": 1000, "width": 100}}, "realizations": 3}]


_RECIPES = {f"fig{i}": f for i, f in enumerate(
    [_fig1, _fig2, _fig3, _fig4, _fig5, _fig6, _fig7, _fig8, _fig9, _fig10, _fig11, _fig12,
     _fig13], start=1)}


def _set_path(cfg: dict, path: list[str], value) -> None:
    node = cfg
    for i, key in enumerate(path[:-1]):
        nxt = path[i + 1]
        if isinstance(node, list):
            node = node[int(key)]
            continue
        if key not in node or node[key] is None:
            node[key] = [] if nxt.isdigit() else {}
        node = node[key]
    last = path[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def apply_overrides(configs: list[dict], overrides: list[str]) -> list[dict]:
    """Apply ``key=value`` overrides (values parsed as YAML) to every config.

    Keys are dotted paths (``options.times``, ``grid.0.n_q``); a leading
    ``<experiment>:`` restricts the override to one config of the recipe.
    Grid keys given without an index (``grid.n_q=[8,10]``) apply to every grid.
    """
    out = copy.deepcopy(configs)
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        target = None
        if ":" in key:
            target, key = key.split(":", 1)
        path = key.strip().split(".")
        hit = False
        for cfg in out:
            if target is not None and cfg.get("experiment") != target:
                continue
            hit = True
            if path[0] == "grid" and len(path) == 2:
                grids = cfg["grid"] if isinstance(cfg["grid"], list) else [cfg["grid"]]
                for g in grids:
                    g[path[1]] = value
            else:
                _set_path(cfg, path, value)
        if not hit:
            raise ConfigurationError(f"override {item!r} matches no experiment")
    return out


_PLOT_HEADER = '''"""Plotting stub for {fig}; edit freely. Reads the files emitted by the harness."""
import csv
import glob
import json
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent


def aggregate(experiment):
    with open(HERE / experiment / "aggregate.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def matrix(path):
    with open(path) as fh:
        header = json.loads(fh.readline()[2:])
    return np.loadtxt(path, ndmin=2), header

'''

_PLOT_BODY = {
    "curves": '''
rows = [r for r in aggregate("{exp}") if r["observable_name"] == "{obs}" and r["t"] != "0"]
for key in sorted({{r["param_hash"] for r in rows}}):
    sel = [r for r in rows if r["param_hash"] == key]
    label = f"n_q={{sel[0]['n_q']}} eps={{sel[0]['epsilon']}} K={{float(sel[0]['K']):.3g}}"
    plt.plot([int(r["t"]) for r in sel], [float(r["mean"]) for r in sel], label=label)
plt.xscale("{xscale}")
plt.yscale("{yscale}")
plt.xlabel("t")
plt.ylabel("{obs}")
plt.legend(fontsize=6)
plt.savefig(HERE / "{fig}.png", dpi=150)
''',
    "scaling": '''
rows = [r for r in aggregate("{exp}") if r["observable_name"].startswith("{obs}") and r["t"] == "0"]
for r in rows:
    if r["mean"] == "nan":
        continue
    n, eps, K = int(r["n_q"]), float(r["epsilon"]), float(r["K"])
    x = {xexpr}
    plt.loglog(x, float(r["mean"]) * {yexpr}, "o", label=f"{{r['observable_name']}} K={{K:.3g}}")
plt.xlabel("{xlabel}")
plt.ylabel("rescaled {obs}")
plt.savefig(HERE / "{fig}.png", dpi=150)
''',
    "ipr": '''
rows = [r for r in aggregate("{exp}") if r["observable_name"] == "ipr"]
for K in sorted({{r["K"] for r in rows}}, key=float):
    sel = sorted((r for r in rows if r["K"] == K), key=lambda r: int(r["n_q"]))
    plt.semilogy([int(r["n_q"]) for r in sel], [float(r["mean"]) for r in sel], label=f"K={{float(K):.2g}}")
plt.xlabel("n_q")
plt.ylabel("xi")
plt.legend()
plt.savefig(HERE / "{fig}.png", dpi=150)
''',
    "maps": '''
files = sorted(glob.glob(str(HERE / "{exp}" / "*" / "{pattern}")))
fig, axes = plt.subplots(1, max(1, len(files)), figsize=(4 * max(1, len(files)), 4))
for ax, f in zip(np.atleast_1d(axes), files):
    values, header = matrix(f)
    ax.imshow(values, origin="lower", aspect="auto", cmap="{cmap}")
    ax.set_title(Path(f).parent.name, fontsize=7)
plt.savefig(HERE / "{fig}.png", dpi=150)
''',
    "portrait": '''
for f in sorted(glob.glob(str(HERE / "{exp}" / "*" / "portrait-r0.txt"))):
    data, header = matrix(f)
    plt.plot(data[:, 0], data[:, 1], ",k")
plt.xlabel("theta")
plt.ylabel("p = T n (folded)")
plt.savefig(HERE / "{fig}.png", dpi=150)
''',
    "nq": '''
rows = [r for r in aggregate("{exp}") if r["observable_name"] == "tunneling_window_mean"]
for eps in sorted({{r["epsilon"] for r in rows}}, key=float):
    sel = sorted((r for r in rows if r["epsilon"] == eps), key=lambda r: int(r["n_q"]))
    plt.semilogy([int(r["n_q"]) for r in sel], [float(r["mean"]) for r in sel], "o-", label=f"eps={{eps}}")
plt.xlabel("n_q")
plt.ylabel("I")
plt.legend()
plt.savefig(HERE / "{fig}.png", dpi=150)
''',
}

_PLOTS = {
    "fig1": ("portrait", {"exp": "fig1"}),
    "fig2": ("curves", {"exp": "fig2", "obs": "second_moment", "xscale": "linear", "yscale": "log"}),
    "fig3": ("scaling", {"exp": "fig3", "obs": "t_q", "xexpr": "n", "xlabel": "n_q",
                         "yexpr": "eps ** 2 * n * 4.0 ** n / (K / 0.5) ** 4"}),
    "fig4": ("curves", {"exp": "fig4", "obs": "fidelity", "xscale": "linear", "yscale": "log"}),
    "fig5": ("scaling", {"exp": "fig5", "obs": "t_f", "xexpr": "eps ** 2 * n ** 2",
                         "xlabel": "eps^2 n_q^2", "yexpr": "1.0"}),
    "fig6": ("maps", {"exp": "fig6_husimi", "pattern": "husimi-t*-r0.txt", "cmap": "viridis"}),
    "fig7": ("maps", {"exp": "fig7_husimi", "pattern": "husimi-t*-r0.txt", "cmap": "viridis"}),
    "fig8": ("curves", {"exp": "fig8", "obs": "deltaW:chaotic", "xscale": "log", "yscale": "log"}),
    "fig9": ("scaling", {"exp": "fig9", "obs": "t_W", "xexpr": "n ** 1.5 * eps ** 2",
                         "xlabel": "n_q^1.5 eps^2", "yexpr": "1.0"}),
    "fig10": ("ipr", {"exp": "fig10"}),
    "fig11": ("ipr", {"exp": "fig11"}),
    "fig12": ("curves", {"exp": "fig12", "obs": "tunneling", "xscale": "linear", "yscale": "linear"}),
    "fig13": ("nq", {"exp": "fig13"}),
}


def plot_stub(fig: str) -> str:
    kind, fields = _PLOTS[fig]
    return _PLOT_HEADER.format(fig=fig) + _PLOT_BODY[kind].format(fig=fig, **fields)


def write_plot_stub(fig: str, outdir) -> Path:
    path = Path(outdir) / f"plot_{fig}.py"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(plot_stub(fig))
    return path
