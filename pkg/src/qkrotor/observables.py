"""
Scalar diagnostics along trajectories and the error time scales built on them.

Time-scale extractors return ``None`` when the series never crosses its
threshold within the sampled horizon.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .phasespace import HusimiGrid
from .statevector import QuantumState, Representation

CSV_COLUMNS = ("t", "value", "n_q", "k", "T", "epsilon", "realization", "observable_name")

# Reference constants of the three time-scale laws.
C_Q = 0.23
C_F = 0.35
C_W_CHAOTIC = 0.02
C_W_INTEGRABLE = 0.03
C_W_LOCALIZED = 0.012


@dataclass
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    def to_rows(self) -> list[dict]:
        m = self.meta
        return [{"t": int(t), "value": repr(float(v)), "n_q": m.get("n_q", ""),
                 "k": m.get("k", ""), "T": m.get("T", ""), "epsilon": m.get("epsilon", ""),
                 "realization": m.get("realization", ""), "observable_name": m.get("observable", "")}
                for t, v in zip(self.times, self.values)]


def write_series_csv(path, series: list[TimeSeries]) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for s in series:
            w.writerows(s.to_rows())


def read_series_csv(path) -> dict[str, TimeSeries]:
    """Series in ``path`` keyed by observable name."""
    rows: dict[str, list[dict]] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["observable_name"], []).append(row)
    out = {}
    for name, rs in rows.items():
        meta = {"observable": name}
        for key in ("n_q", "k", "T", "epsilon", "realization"):
            meta[key] = rs[0][key]
        out[name] = TimeSeries([int(r["t"]) for r in rs], [float(r["value"]) for r in rs], meta)
    return out


# --- instantaneous observables ----------------------------------------------

def second_moment(state, n0: float) -> float:
    """``sum_n (n - n0)^2 |a_n|^2`` with plain (non-modular) distances."""
    if isinstance(state, QuantumState):
        if state.representation is not Representation.MOMENTUM:
            raise ValueError("second_moment needs the momentum representation")
        amps = state.amplitudes
    else:
        amps = np.asarray(state)
    n = np.arange(amps.size, dtype=float)
    return float(np.sum((n - n0) ** 2 * (amps.real ** 2 + amps.imag ** 2)))


def fidelity(state_noisy, state_exact) -> float:
    a = state_noisy.amplitudes if isinstance(state_noisy, QuantumState) else np.asarray(state_noisy)
    b = state_exact.amplitudes if isinstance(state_exact, QuantumState) else np.asarray(state_exact)
    if a.shape != b.shape:
        raise ValueError("states differ in dimension")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


@dataclass(frozen=True)
class PhaseSpaceDomain:
    """Circle or rectangle in ``(theta, p)`` with ``p = T (n - nbar)``, in radians.

    For a circle ``size`` is the radius; for a rectangle it is the pair of
    half extents ``(d_theta, d_p)``.
    """

    shape: str
    center: tuple[float, float]
    size: float | tuple[float, float]

    def __post_init__(self):
        if self.shape not in ("circle", "rectangle"):
            raise ValueError(f"unknown domain shape {self.shape!r}")
        extent = self.size if self.shape == "rectangle" else (self.size, self.size)
        if max(extent) > math.pi or min(extent) <= 0:
            raise ValueError("domain must fit inside one phase-space cell")

    def contains(self, theta, p) -> np.ndarray:
        dth = np.mod(np.asarray(theta) - self.center[0] + np.pi, 2 * np.pi) - np.pi
        dp = np.mod(np.asarray(p) - self.center[1] + np.pi, 2 * np.pi) - np.pi
        if self.shape == "circle":
            return dth ** 2 + dp ** 2 <= self.size ** 2
        return (np.abs(dth) <= self.size[0]) & (np.abs(dp) <= self.size[1])

    def to_dict(self) -> dict:
        size = list(self.size) if isinstance(self.size, tuple) else self.size
        return {"shape": self.shape, "center": list(self.center), "size": size}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseSpaceDomain":
        size = d["size"]
        return cls(d["shape"], tuple(d["center"]), tuple(size) if isinstance(size, list) else size)


# Interior of the main island at K = 1.3: the elliptic fixed point sits at
# (theta, p) = (pi, 0) and invariant curves survive out to |p| ~ 1.2.
DEFAULT_TUNNELING_DOMAIN = PhaseSpaceDomain("circle", (math.pi, 0.0), 0.6)


def domain_mask(husimi: HusimiGrid, domain: PhaseSpaceDomain, n_bar: float) -> np.ndarray:
    p = husimi.T * (husimi.momenta - n_bar)
    th, pp = np.meshgrid(husimi.thetas, p)
    return domain.contains(th, pp)


def tunneling_probability(husimi: HusimiGrid, domain: PhaseSpaceDomain,
                          n_bar: float) -> float:
    """Normalized Husimi weight of the cells whose centers lie in ``domain``."""
    mask = domain_mask(husimi, domain, n_bar)
    if not mask.any():
        raise ValueError("domain contains no Husimi grid point")
    vals = husimi.values
    total = vals.sum() if not husimi.normalized else 1.0
    return float(vals[mask].sum() / total)


# --- time scales ------------------------------------------------------------

def crossing_time(times, values, level: float, scale: str = "linear",
                  direction: str = "up") -> float | None:
    """First time the sampled curve reaches ``level``, interpolated between samples.

    ``scale`` picks the interpolation: ``"linear"`` (value vs t), ``"log"``
    (log value vs t) or ``"loglog"`` (log value vs log t).
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    hit = y >= level if direction == "up" else y <= level
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        return None
    i = int(idx[0])
    if i == 0:
        return float(t[0])
    t0, t1, y0, y1 = t[i - 1], t[i], y[i - 1], y[i]
    if scale in ("log", "loglog") and y0 > 0 and y1 > 0 and level > 0:
        y0, y1, lv = math.log(y0), math.log(y1), math.log(level)
    else:
        lv = level
    if scale == "loglog" and t0 > 0:
        x0, x1 = math.log(t0), math.log(t1)
    else:
        x0, x1 = t0, t1
    x = x0 + (lv - y0) * (x1 - x0) / (y1 - y0) if y1 != y0 else x1
    return float(math.exp(x)) if (scale == "loglog" and t0 > 0) else float(x)


def plateau_value(exact: TimeSeries, tail_fraction: float = 0.5) -> float:
    """Mean over the samples in the last ``tail_fraction`` of the time span.

    Selecting by time rather than by sample count keeps the estimate
    independent of a cadence that is denser at early times.
    """
    t = exact.times
    cut = t[-1] - tail_fraction * (t[-1] - t[0])
    return float(np.mean(exact.values[t >= cut]))


def extract_doubling_time(exact: TimeSeries, noisy: TimeSeries,
                          reference: str = "plateau") -> float | None:
    """First ``t`` where the noisy second moment reaches twice the exact one.

    ``reference="plateau"`` compares with the saturated exact value (mean of
    the second half of ``exact``); ``"instantaneous"`` with ``exact(t)``.
    """
    if len(exact) < 2 or len(noisy) < 2:
        return None
    if reference == "plateau":
        ratio = noisy.values / plateau_value(exact)
        times = noisy.times
    else:
        common, ia, ib = np.intersect1d(exact.times, noisy.times, return_indices=True)
        if common.size < 2:
            return None
        ratio = noisy.values[ib] / exact.values[ia]
        times = common
    return crossing_time(times, ratio, 2.0, scale="linear")


def extract_fidelity_time(f_series: TimeSeries, level: float = 0.5) -> float | None:
    return crossing_time(f_series.times, f_series.values, level, scale="log", direction="down")


def extract_wigner_time(deltaW_series: TimeSeries, threshold: float = 0.5) -> float | None:
    return crossing_time(deltaW_series.times, deltaW_series.values, threshold, scale="loglog")


def predicted_tq(k: float, epsilon: float, n_q: int, C_q: float = C_Q) -> float:
    return C_q * k ** 4 / (epsilon ** 2 * n_q * 2.0 ** (2 * n_q))


def predicted_tf(epsilon: float, n_q: int, C_f: float = C_F) -> float:
    return C_f / (epsilon ** 2 * n_q ** 2)


def predicted_tw(epsilon: float, n_q: int, C_w: float, alpha: float) -> float:
    return C_w / (n_q ** alpha * epsilon ** 2)


def measurement_times(t_max: int, dense_until: int = 100, stride: int = 10) -> np.ndarray:
    """Every kick up to ``dense_until``, then every ``stride`` kicks, always ending at ``t_max``."""
    head = np.arange(1, min(dense_until, t_max) + 1)
    tail = np.arange(dense_until + stride, t_max + 1, stride)
    times = np.concatenate([head, tail])
    if times.size == 0 or times[-1] != t_max:
        times = np.append(times, t_max)
    return np.unique(times)


def geometric_times(t_max: int, growth: float = 1.05) -> np.ndarray:
    """Every kick up to 20, then roughly geometric spacing up to ``t_max``."""
    ts = list(range(1, min(20, t_max) + 1))
    t = float(ts[-1]) if ts else 1.0
    while t < t_max:
        t = max(t + 1, t * growth)
        ts.append(min(int(round(t)), t_max))
    return np.unique(np.array(ts, dtype=np.int64))


def fit_power_law(x, y) -> tuple[float, float]:
    """Least-squares ``log y = slope log x + intercept``; returns ``(slope, exp(intercept))``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, icpt = np.polyfit(lx, ly, 1)
    return float(slope), float(math.exp(icpt))
