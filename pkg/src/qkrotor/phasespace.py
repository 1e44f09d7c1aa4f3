"""
Discrete Wigner and Husimi distributions of momentum-basis wave functions.

Wigner function on the ``2N x 2N`` lattice::

    W[Th, n] = 1/(2N) sum_{m=0}^{N-1} exp(-2 pi i n (m - Th/2) / N) psi*(Th - m) psi(m)

with ``Th, n = 0 .. 2N-1`` and ``psi`` indices taken mod N. ``Th/2`` is the
momentum coordinate and ``n`` the conjugate angle coordinate. The lattice
carries each physical point together with its "ghost" images, and with this
normalization ``sum W = 1`` and ``sum W**2 = 1/N`` for pure states. Marginals:
summing over ``n`` at ``Th = 2m`` gives ``|psi(m)|^2`` (0 at odd ``Th``);
summing over ``Th`` at ``n = 2v`` gives ``|F psi|^2`` at angle
``theta = -2 pi v / N`` (0 at odd ``n``).

Husimi amplitude (Gaussian truncated to ``-N/2 <= m - n < N/2``)::

    h(theta, n) = sum_m (T/pi)^{1/4} psi(m) / sqrt(N) exp(-T (m - n)^2 / 2) exp(i m theta)
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .statevector import QuantumState, Representation


def _momentum_amplitudes(state) -> np.ndarray:
    if isinstance(state, QuantumState):
        if state.representation is not Representation.MOMENTUM:
            raise ValueError("phase-space transforms need the momentum representation")
        return state.amplitudes
    return np.asarray(state, dtype=np.complex128)


@dataclass
class WignerGrid:
    values: np.ndarray
    N: int

    def __post_init__(self):
        if self.values.shape != (2 * self.N, 2 * self.N):
            raise ValueError(f"Wigner grid must be {2 * self.N}x{2 * self.N}")


@dataclass
class HusimiGrid:
    """``values[j, i]`` at momentum ``momenta[j]`` and angle ``thetas[i]``."""

    values: np.ndarray
    thetas: np.ndarray
    momenta: np.ndarray
    N: int
    T: float
    normalized: bool = True


def _wigner_rows(psi: np.ndarray, rows: np.ndarray, real: bool = True) -> np.ndarray:
    """Rows ``W[Th, :]`` for the given ``Th`` values, shape ``(len(rows), 2N)``."""
    N = psi.size
    m = np.arange(N)
    rows = np.asarray(rows)
    f = np.conj(psi[(rows[:, None] - m[None, :]) % N]) * psi[None, :]
    F = np.fft.fft(f, axis=1)                           # sum_m f e^{-2 pi i n m / N}, n mod N
    n = np.arange(2 * N)
    phase = np.exp(1j * np.pi * np.outer(rows, n) / N)  # e^{+i pi n Th / N}
    out = phase * F[:, n % N] / (2 * N)
    return out.real if real else out


def wigner(state, chunk: int | None = None) -> WignerGrid:
    """Full ``2N x 2N`` Wigner grid, built row block by row block with FFTs."""
    psi = _momentum_amplitudes(state)
    N = psi.size
    chunk = chunk or max(1, min(2 * N, (1 << 22) // N))
    W = np.empty((2 * N, 2 * N))
    for start in range(0, 2 * N, chunk):
        rows = np.arange(start, min(2 * N, start + chunk))
        W[rows] = _wigner_rows(psi, rows)
    return WignerGrid(W, N)


def wigner_imaginary_residue(state) -> float:
    """Largest imaginary part of the defining sum (should vanish)."""
    psi = _momentum_amplitudes(state)
    vals = _wigner_rows(psi, np.arange(2 * psi.size), real=False)
    return float(np.abs(vals.imag).max())


def wigner_at(state, points: np.ndarray) -> np.ndarray:
    """Wigner values at integer lattice points ``points[:, 0] = Th``, ``points[:, 1] = n``.

    Points sharing a ``Th`` row are served by one FFT row.
    """
    psi = _momentum_amplitudes(state)
    pts = np.asarray(points, dtype=np.int64)
    rows, inverse = np.unique(pts[:, 0], return_inverse=True)
    out = np.empty(len(pts))
    N = psi.size
    chunk = max(1, (1 << 21) // N)
    for start in range(0, rows.size, chunk):
        sel = slice(start, start + chunk)
        block = _wigner_rows(psi, rows[sel])
        hit = (inverse >= start) & (inverse < start + block.shape[0])
        out[hit] = block[inverse[hit] - start, pts[hit, 1]]
    return out


def wigner_moments(state, powers=(1, 2, 4)) -> dict[int, float]:
    """``sum W**p`` over the full lattice without holding it in memory."""
    psi = _momentum_amplitudes(state)
    N = psi.size
    chunk = max(1, (1 << 22) // N)
    sums = {p: 0.0 for p in powers}
    for start in range(0, 2 * N, chunk):
        block = _wigner_rows(psi, np.arange(start, min(2 * N, start + chunk)))
        for p in powers:
            sums[p] += float(np.sum(block ** p))
    return sums


def wigner_marginals(grid: WignerGrid) -> tuple[np.ndarray, np.ndarray]:
    """(momentum marginal at even ``Th``, angle marginal at even ``n``), each length N."""
    W = grid.values
    return W.sum(axis=1)[0::2], W.sum(axis=0)[0::2]


def ipr_wigner(grid: WignerGrid | np.ndarray, N: int | None = None) -> float:
    """Inverse participation ratio ``1 / (N^2 sum W^4)``."""
    if isinstance(grid, WignerGrid):
        values, N = grid.values, grid.N
    else:
        values = np.asarray(grid)
        if N is None:
            raise ValueError("N is required for a bare array")
    s4 = float(np.sum(values ** 4))
    if s4 == 0:
        raise ValueError("all-zero Wigner grid")
    return 1.0 / (N ** 2 * s4)


def ipr_of_state(state) -> float:
    psi = _momentum_amplitudes(state)
    return 1.0 / (psi.size ** 2 * wigner_moments(psi, (4,))[4])


# --- Husimi ------------------------------------------------------------------

def default_husimi_size(n_q: int) -> int:
    """Grid points per axis: full N for small registers, ~4 points per coherent width beyond."""
    return 1 << min(n_q, (n_q + 1) // 2 + 2)


def husimi(state, T: float, n_theta: int | None = None, n_momentum: int | None = None,
           normalize: bool = True) -> HusimiGrid:
    """``|h(theta, n)|^2`` on ``n_theta`` angles ``2 pi i / n_theta`` and
    ``n_momentum`` evenly spaced integer momenta ``j N / n_momentum``.

    Both sizes must divide N. With ``normalize`` the grid sums to 1.
    """
    psi = _momentum_amplitudes(state)
    N = psi.size
    n_q = N.bit_length() - 1
    n_theta = default_husimi_size(n_q) if n_theta is None else n_theta
    n_momentum = default_husimi_size(n_q) if n_momentum is None else n_momentum
    if n_theta <= 0 or n_momentum <= 0 or N % n_theta or N % n_momentum:
        raise ValueError(f"grid sizes must be positive divisors of N={N}")
    d = np.arange(-N // 2, N // 2)
    g = (T / np.pi) ** 0.25 / np.sqrt(N) * np.exp(-0.5 * T * d.astype(float) ** 2)
    momenta = np.arange(n_momentum) * (N // n_momentum)
    values = np.empty((n_momentum, n_theta))
    chunk = max(1, (1 << 21) // N)
    for start in range(0, n_momentum, chunk):
        rows = momenta[start:start + chunk]
        x = psi[(rows[:, None] + d[None, :]) % N] * g[None, :]
        # e^{i m theta_i} depends on m mod n_theta only, and m runs over N
        # consecutive integers: fold, then one short FFT. The leftover phase
        # e^{i m_start theta_i} drops out of the modulus.
        folded = x.reshape(rows.size, N // n_theta, n_theta).sum(axis=1)
        h = np.fft.ifft(folded, axis=1) * n_theta
        values[start:start + rows.size] = np.abs(h) ** 2
    if normalize:
        total = values.sum()
        if total > 0:
            values /= total
    return HusimiGrid(values, 2 * np.pi * np.arange(n_theta) / n_theta, momenta, N, T, normalize)


def husimi_point(state, T: float, theta: float, n: float) -> float:
    """Unnormalized ``|h(theta, n)|^2`` by direct summation (reference path)."""
    psi = _momentum_amplitudes(state)
    N = psi.size
    d = np.arange(-N // 2, N // 2)
    m = int(round(n)) + d
    amp = np.sum((T / np.pi) ** 0.25 * psi[m % N] / np.sqrt(N)
                 * np.exp(-0.5 * T * d.astype(float) ** 2) * np.exp(1j * m * theta))
    return float(abs(amp) ** 2)


# --- zones and Wigner error ----------------------------------------------------

@dataclass(frozen=True)
class Zone:
    """Elliptical or rectangular region in ``(theta, p)`` with ``p = T (m - nbar)``.

    ``half_widths`` are semi-axes (ellipse) or half side lengths (rectangle),
    in radians. Angles wrap mod ``2 pi`` and ``p`` mod ``2 pi``.
    """

    name: str
    center: tuple[float, float]
    half_widths: tuple[float, float]
    shape: str = "ellipse"

    def contains(self, theta, p) -> np.ndarray:
        dth = np.mod(np.asarray(theta) - self.center[0] + np.pi, 2 * np.pi) - np.pi
        dp = np.mod(np.asarray(p) - self.center[1] + np.pi, 2 * np.pi) - np.pi
        u, v = dth / self.half_widths[0], dp / self.half_widths[1]
        if self.shape == "ellipse":
            return u * u + v * v <= 1.0
        return (np.abs(u) <= 1.0) & (np.abs(v) <= 1.0)

    def to_dict(self) -> dict:
        return {"name": self.name, "center": list(self.center),
                "half_widths": list(self.half_widths), "shape": self.shape}

    @classmethod
    def from_dict(cls, d: dict) -> "Zone":
        return cls(d["name"], tuple(d["center"]), tuple(d["half_widths"]), d.get("shape", "ellipse"))


# Defaults for K = K_g (and the localized K = 5, T = 0.5 runs): the chaotic
# layer around the hyperbolic point (0, 0), the interior of the main island
# around (pi, 0), and a band around the initial momentum.
DEFAULT_ZONES = {
    "chaotic": Zone("chaotic", (0.0, 0.0), (0.6, 0.6), "ellipse"),
    "integrable": Zone("integrable", (np.pi, 0.0), (0.8, 0.8), "ellipse"),
}


def lattice_phase_coordinates(Th, n, N: int, T: float, n_bar: float):
    """``(theta, p)`` of Wigner lattice points: momentum ``Th/2``, angle ``-2 pi (n/2) / N``."""
    theta = np.mod(-np.pi * np.asarray(n) / N, 2 * np.pi)
    p = T * (np.asarray(Th) / 2.0 - n_bar)
    return theta, p


def sample_zone_points(zone: Zone, N: int, T: float, n_bar: float, count: int | None = None,
                       seed: int = 0) -> np.ndarray:
    """``count`` (default 2N) distinct even-even lattice points inside ``zone``."""
    count = 2 * N if count is None else count
    rng = np.random.default_rng(seed)
    Th, n = np.meshgrid(np.arange(0, 2 * N, 2), np.arange(0, 2 * N, 2), indexing="ij")
    theta, p = lattice_phase_coordinates(Th, n, N, T, n_bar)
    inside = np.flatnonzero(zone.contains(theta, p).ravel())
    if inside.size == 0:
        raise ValueError(f"zone {zone.name!r} contains no lattice point for N={N}")
    pick = rng.choice(inside, size=min(count, inside.size), replace=False)
    pick.sort()
    return np.column_stack([Th.ravel()[pick], n.ravel()[pick]])


def band_zone_points(center_momentum: int, half_width: int, N: int, count: int | None = None,
                     seed: int = 0) -> np.ndarray:
    """Even-even lattice points in the momentum band ``|m - center| <= half_width`` (all angles)."""
    count = 2 * N if count is None else count
    rng = np.random.default_rng(seed)
    ms = np.arange(center_momentum - half_width, center_momentum + half_width + 1) % N
    Th = np.repeat(2 * ms, N)
    n = np.tile(np.arange(0, 2 * N, 2), ms.size)
    pick = rng.choice(Th.size, size=min(count, Th.size), replace=False)
    pick.sort()
    return np.column_stack([Th[pick], n[pick]])


def wigner_error(exact, noisy, region=None) -> float:
    """Relative error ``<|W - W_eps|> / <|W|>`` over ``region``.

    ``exact`` and ``noisy`` are WignerGrids (``region`` an ``(k, 2)`` array of
    lattice points, default the whole grid) or 1-D arrays of values already
    sampled on the region.
    """
    if isinstance(exact, WignerGrid) and isinstance(noisy, WignerGrid):
        if exact.values.shape != noisy.values.shape:
            raise ValueError("Wigner grids differ in shape")
        if region is None:
            a, b = exact.values.ravel(), noisy.values.ravel()
        else:
            region = np.asarray(region)
            if region.size == 0:
                raise ValueError("empty region")
            a = exact.values[region[:, 0], region[:, 1]]
            b = noisy.values[region[:, 0], region[:, 1]]
    else:
        a, b = np.asarray(exact, dtype=float), np.asarray(noisy, dtype=float)
        if a.shape != b.shape:
            raise ValueError("sampled values differ in shape")
        if a.size == 0:
            raise ValueError("empty region")
    denom = np.mean(np.abs(a))
    if denom == 0:
        raise ValueError("exact Wigner values vanish on the region")
    return float(np.mean(np.abs(a - b)) / denom)


# --- persistence -------------------------------------------------------------

def save_grid(path, values: np.ndarray, header: dict, fmt: str = "%.12e") -> None:
    """Plain-text matrix preceded by one ``# {json}`` header line."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(fh, values, fmt=fmt)


def load_grid(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path} lacks a grid header")
        header = json.loads(first[2:])
        values = np.loadtxt(fh, ndmin=2)
    return values, header
