"""
Per-task numerical kernels of the experiment kinds.

A task is one (parameter point, realization) pair, or the per-point
reference task (``realization = -1``) that precomputes the noise-free arm
shared by all realizations of a point. Kernels are pure functions of the
task: they return time series and auxiliary matrices, and the runner owns
all file output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..circuits import Propagator, RotatorParams, prepare_momentum_state
from ..classical import (
    ClassicalEnsemble,
    DensityGrid,
    classical_density,
    occupied_fraction,
    phase_portrait,
)
from ..observables import (
    DEFAULT_TUNNELING_DOMAIN,
    PhaseSpaceDomain,
    TimeSeries,
    extract_doubling_time,
    extract_fidelity_time,
    extract_wigner_time,
    fidelity,
    geometric_times,
    measurement_times,
    plateau_value,
    second_moment,
    tunneling_probability,
)
from ..phasespace import (
    DEFAULT_ZONES,
    Zone,
    band_zone_points,
    default_husimi_size,
    husimi,
    sample_zone_points,
    wigner,
    wigner_at,
    wigner_error,
    wigner_moments,
)
from ..statevector import ConfigurationError, NoiseModel
from .config import Point, stream_id

EXACT = NoiseModel.exact()
REFERENCE = -1
# summary values (time scales, window means) are stored at this kick count
SUMMARY_T = 0
# kinds whose realizations share a precomputed noise-free reference
REFERENCE_KINDS = ("sweep_tq", "sweep_tw")


@dataclass(frozen=True)
class Task:
    point: Point
    settings: dict
    master_seed: int
    param_hash: str
    realization: int


@dataclass
class Result:
    series: list = field(default_factory=list)
    # name -> (matrix, header, printf format)
    files: dict = field(default_factory=dict)


def cadence_times(cadence: dict, t_max: int) -> np.ndarray:
    kind = cadence.get("kind", "dense")
    if kind == "dense":
        return measurement_times(t_max, int(cadence.get("dense_until", 100)),
                                 int(cadence.get("stride", 10)))
    if kind == "geometric":
        return geometric_times(t_max, float(cadence.get("growth", 1.05)))
    stride = int(cadence.get("stride", 1))
    times = np.arange(stride, t_max + 1, stride)
    return times if times.size and times[-1] == t_max else np.append(times, t_max)


def _params(p: Point) -> RotatorParams:
    return RotatorParams(p.n_q, p.k, p.T, n_bar=p.n_bar, n0=p.n0)


def _noise(task: Task) -> NoiseModel:
    return NoiseModel(task.point.epsilon, task.master_seed,
                      stream_id(task.param_hash, task.realization), task.settings["tilt"])


def _meta(task: Task, name: str) -> dict:
    p = task.point
    return {"n_q": "" if p.n_q is None else p.n_q, "k": repr(p.k), "T": repr(p.T),
            "epsilon": repr(p.epsilon), "realization": task.realization, "observable": name}


def _series(task: Task, name: str, times, values) -> TimeSeries:
    return TimeSeries(np.asarray(times), np.asarray(values, float), _meta(task, name))


def _summary(task: Task, name: str, value) -> TimeSeries:
    v = math.nan if value is None else float(value)
    return _series(task, name, [SUMMARY_T], [v])


def _walk(times, step):
    """Call ``step()`` once per kick and yield at each sampled time."""
    t = 0
    for target in times:
        while t < target:
            step()
            t += 1
        yield t


# --- evolve ------------------------------------------------------------------

def evolve(task: Task) -> Result:
    p, s = task.point, task.settings
    params, noise = _params(p), _noise(task)
    obs = list(s["observables"])
    bad = set(obs) - {"second_moment", "fidelity", "norm"}
    if bad:
        raise ConfigurationError(f"unknown observables {sorted(bad)}")
    state = prepare_momentum_state(p.n_q, p.n0)
    exact = state.copy() if "fidelity" in obs and not noise.is_exact else None
    prop, ref = Propagator(params), Propagator(params, "fft")

    def one():
        prop.step(state, noise)
        if exact is not None:
            ref.step(exact, EXACT)

    times = cadence_times(s["cadence"], p.t_max)
    values = {o: [] for o in obs}
    for _ in _walk(times, one):
        for o in obs:
            if o == "second_moment":
                values[o].append(second_moment(state, p.n0))
            elif o == "fidelity":
                values[o].append(1.0 if exact is None else fidelity(state, exact))
            else:
                values[o].append(state.norm())
    res = Result([_series(task, o, times, values[o]) for o in obs])
    if s["options"].get("save_state"):
        a = state.amplitudes
        res.files["state"] = (np.column_stack([a.real, a.imag]),
                              {"t": p.t_max, "columns": ["re", "im"]}, "%.17e")
    return res


# --- t_q -------------------------------------------------------------------

def tq_reference(task: Task) -> Result:
    p = task.point
    state = prepare_momentum_state(p.n_q, p.n0)
    prop = Propagator(_params(p), "fft")
    times = cadence_times(task.settings["cadence"], p.t_max)
    vals = [second_moment(state, p.n0) for _ in _walk(times, lambda: prop.step(state, EXACT))]
    return Result(files={"reference": (np.column_stack([times, vals]),
                                       {"columns": ["t", "second_moment"]}, "%.17g")})


def tq_realization(task: Task, reference: dict) -> Result:
    p, s = task.point, task.settings
    ref = reference["reference"]
    exact = TimeSeries(ref[:, 0].astype(np.int64), ref[:, 1])
    plateau = plateau_value(exact)
    state = prepare_momentum_state(p.n_q, p.n0)
    prop, noise = Propagator(_params(p)), _noise(task)
    times, vals = [], []
    for t in _walk(exact.times, lambda: prop.step(state, noise)):
        times.append(t)
        vals.append(second_moment(state, p.n0))
        if s["stop_early"] and vals[-1] >= 2 * plateau:
            break
    noisy = _series(task, "second_moment", times, vals)
    tq = extract_doubling_time(exact, noisy) if len(noisy) >= 2 else None
    return Result([noisy, _summary(task, "t_q", tq)])


# --- t_f -------------------------------------------------------------------

def tf_realization(task: Task) -> Result:
    p, s = task.point, task.settings
    params, noise = _params(p), _noise(task)
    state = prepare_momentum_state(p.n_q, p.n0)
    exact = state.copy()
    prop, ref = Propagator(params), Propagator(params, "fft")
    level = float(s["threshold"])

    def one():
        prop.step(state, noise)
        ref.step(exact, EXACT)

    times, vals = [0], [1.0]
    for t in _walk(cadence_times(s["cadence"], p.t_max), one):
        times.append(t)
        vals.append(fidelity(state, exact))
        if s["stop_early"] and vals[-1] <= level:
            break
    f = _series(task, "fidelity", times, vals)
    return Result([f, _summary(task, "t_f", extract_fidelity_time(f, level))])


# --- t_W -------------------------------------------------------------------

def zone_points(task: Task) -> dict[str, np.ndarray]:
    """Lattice sample points of every configured zone, fixed per parameter point."""
    p, zones = task.point, task.settings["zones"]
    if isinstance(zones, (list, tuple)):
        zones = {name: {} for name in zones}
    seed = stream_id(task.param_hash, "zones") % 2**32
    out = {}
    for name, spec in zones.items():
        spec = dict(spec or {})
        count = spec.pop("count", None)
        if spec.get("shape") == "band" or (not spec and name == "localized"):
            center = spec.get("center", "n0")
            center = p.n0 if center == "n0" else int(center)
            out[name] = band_zone_points(center, int(spec.get("half_width", 25)), p.N,
                                         count, seed)
        else:
            zone = Zone.from_dict(dict(spec, name=name)) if spec else DEFAULT_ZONES[name]
            out[name] = sample_zone_points(zone, p.N, p.T, p.n_bar, count, seed)
    return out


def _all_points(points: dict[str, np.ndarray]):
    names = list(points)
    stacked = np.concatenate([points[n] for n in names])
    bounds = np.cumsum([0] + [len(points[n]) for n in names])
    return names, stacked, bounds


def tw_reference(task: Task) -> Result:
    p = task.point
    names, stacked, bounds = _all_points(zone_points(task))
    state = prepare_momentum_state(p.n_q, p.n0)
    prop = Propagator(_params(p), "fft")
    times = cadence_times(task.settings["cadence"], p.t_max)
    rows = [wigner_at(state, stacked) for _ in _walk(times, lambda: prop.step(state, EXACT))]
    W = np.asarray(rows)
    files = {}
    for i, n in enumerate(names):
        files[f"reference-{n}"] = (np.column_stack([times, W[:, bounds[i]:bounds[i + 1]]]),
                                   {"zone": n, "columns": "t then one column per point"}, "%.17g")
    return Result(files=files)


def tw_realization(task: Task, reference: dict) -> Result:
    p, s = task.point, task.settings
    names, stacked, bounds = _all_points(zone_points(task))
    refs = {n: reference[f"reference-{n}"] for n in names}
    times = refs[names[0]][:, 0].astype(np.int64)
    state = prepare_momentum_state(p.n_q, p.n0)
    prop, noise = Propagator(_params(p)), _noise(task)
    level = float(s["threshold"])
    out_t, dw = [], {n: [] for n in names}
    for i, t in enumerate(_walk(times, lambda: prop.step(state, noise))):
        w = wigner_at(state, stacked)
        out_t.append(t)
        for j, n in enumerate(names):
            dw[n].append(wigner_error(refs[n][i, 1:], w[bounds[j]:bounds[j + 1]]))
        if s["stop_early"] and all(v[-1] >= level for v in dw.values()):
            break
    res = Result()
    for n in names:
        ser = _series(task, f"deltaW:{n}", out_t, dw[n])
        res.series += [ser, _summary(task, f"t_W:{n}", extract_wigner_time(ser, level))]
    return res


# --- phase-space maps --------------------------------------------------------

def _sample_times(task: Task) -> list[int]:
    times = sorted(int(t) for t in task.settings["options"].get("times", [task.point.t_max]))
    if not times or times[0] < 0 or times[-1] > task.point.t_max:
        raise ConfigurationError("map times must lie in 0..t_max")
    return times


def wigner_map(task: Task) -> Result:
    p, opts = task.point, task.settings["options"]
    state = prepare_momentum_state(p.n_q, p.n0)
    prop, noise = Propagator(_params(p)), _noise(task)
    times = _sample_times(task)
    max_n = int(opts.get("max_grid_N", 256))
    res, ipr = Result(), []
    t = 0
    for target in times:
        while t < target:
            prop.step(state, noise)
            t += 1
        ipr.append(1.0 / (p.N ** 2 * wigner_moments(state, (4,))[4]))
        if p.N <= max_n:
            res.files[f"wigner-t{t}"] = (wigner(state).values, {"N": p.N, "T": p.T, "t": t,
                                                                "axes": ["Theta", "n"]}, "%.12e")
    res.series.append(_series(task, "ipr", times, ipr))
    return res


def _domain(task: Task) -> PhaseSpaceDomain:
    d = task.settings["domain"]
    return DEFAULT_TUNNELING_DOMAIN if d is None else PhaseSpaceDomain.from_dict(d)


def _husimi(task: Task, state):
    opts = task.settings["options"]
    size = default_husimi_size(task.point.n_q)
    return husimi(state, task.point.T, opts.get("n_theta", size), opts.get("n_momentum", size))


def husimi_map(task: Task) -> Result:
    """Husimi grids at the requested times, each averaged over ``average`` kicks around it."""
    p, opts = task.point, task.settings["options"]
    avg = int(opts.get("average", 1))
    state = prepare_momentum_state(p.n_q, p.n0)
    prop, noise = Propagator(_params(p)), _noise(task)
    domain = _domain(task)
    res, inside = Result(), []
    times = _sample_times(task)
    t = 0
    for target in times:
        start = max(0, target - avg // 2)
        if start < t:
            raise ConfigurationError("husimi averaging windows overlap")
        acc = None
        while t < start + avg:
            if t >= start:
                h = _husimi(task, state)
                acc = h.values.copy() if acc is None else acc + h.values
            prop.step(state, noise)
            t += 1
        h.values = acc / avg
        inside.append(tunneling_probability(h, domain, p.n_bar))
        res.files[f"husimi-t{target}"] = (h.values, {
            "N": p.N, "T": p.T, "t": target, "average": avg, "thetas": h.thetas.tolist(),
            "momenta": h.momenta.tolist(), "normalized": True}, "%.10e")
    res.series.append(_series(task, "tunneling", times, inside))
    return res


def tunneling(task: Task) -> Result:
    p, s = task.point, task.settings
    window = s["options"].get("window")
    times = set(cadence_times(s["cadence"], p.t_max).tolist())
    lo = hi = None
    if window:
        lo = int(window["center"]) - int(window["width"]) // 2
        hi = lo + int(window["width"])
        if lo < 1 or hi - 1 > p.t_max:
            raise ConfigurationError("tunneling window must lie in 1..t_max")
        times |= set(range(lo, hi))
    times = np.array(sorted(times))
    state = prepare_momentum_state(p.n_q, p.n0)
    prop, noise = Propagator(_params(p)), _noise(task)
    domain = _domain(task)
    vals = [tunneling_probability(_husimi(task, state), domain, p.n_bar)
            for _ in _walk(times, lambda: prop.step(state, noise))]
    res = Result([_series(task, "tunneling", times, vals)])
    if window:
        sel = (times >= lo) & (times < hi)
        res.series.append(_summary(task, "tunneling_window_mean", np.mean(np.asarray(vals)[sel])))
    return res


# --- classical -------------------------------------------------------------

def _classical_rng(task: Task) -> np.random.Generator:
    sid = stream_id(task.param_hash, task.realization)
    return np.random.default_rng(np.random.SeedSequence([task.master_seed % 2**64, sid]))


def portrait(task: Task) -> Result:
    p, opts = task.point, task.settings["options"]
    seed = int(_classical_rng(task).integers(2**63))
    theta, pp = phase_portrait(p.K, int(opts.get("n_trajectories", 200)), p.t_max, seed,
                               opts.get("initial", "random"))
    frac = occupied_fraction(theta, pp, int(opts.get("bins", 64)))
    return Result([_summary(task, "occupied_fraction", frac)],
                  {"portrait": (np.column_stack([theta, pp]),
                                {"K": p.K, "columns": ["theta", "p"], "t": p.t_max}, "%.6g")})


def density(task: Task) -> Result:
    """Classical density of a line ensemble averaged over ``average`` kicks
    around ``t_max``, with the classical noise strength taken from ``epsilon``."""
    p, opts = task.point, task.settings["options"]
    p0 = float(opts.get("p0", -math.pi + 0.05))
    avg = int(opts.get("average", 10))
    bins = int(opts.get("bins", 64))
    ens = ClassicalEnsemble.line(p0, int(opts.get("count", 2000)), p.K, 1.0,
                                 noise_epsilon=p.epsilon, rng=_classical_rng(task))
    grid = DensityGrid(bins, bins, -math.pi, math.pi)
    ens.evolve(max(0, p.t_max - avg // 2))
    acc = np.zeros((bins, bins))
    for _ in range(avg):
        acc += classical_density(ens, grid)
        ens.step()
    acc /= avg
    th = (np.arange(bins) + 0.5) * 2 * math.pi / bins
    pm = -math.pi + (np.arange(bins) + 0.5) * 2 * math.pi / bins
    TH, PM = np.meshgrid(th, pm)
    weight = float(acc[_domain(task).contains(TH, PM)].sum())
    return Result([_summary(task, "island_weight", weight)],
                  {"density": (acc, {"K": p.K, "epsilon": p.epsilon, "t": p.t_max,
                                     "average": avg, "axes": ["p", "theta"],
                                     "p_range": [-math.pi, math.pi]}, "%.8e")})


REALIZATION_KERNELS = {
    "evolve": evolve, "sweep_tq": tq_realization, "sweep_tf": tf_realization,
    "sweep_tw": tw_realization, "wigner_map": wigner_map, "husimi_map": husimi_map,
    "tunneling": tunneling, "classical_portrait": portrait, "classical_density": density,
}
REFERENCE_KERNELS = {"sweep_tq": tq_reference, "sweep_tw": tw_reference}
