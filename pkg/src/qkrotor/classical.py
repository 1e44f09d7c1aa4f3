"""
Chirikov standard map

    n' = n + k sin(theta),   theta' = theta + T n'   (theta mod 2 pi)

for single points and vectorized ensembles, with an optional additive noise
model, phase portraits and coarse-grained densities.

Only ``K = kT`` matters classically. In the rescaled momentum ``p = T n`` the
map is periodic with period ``2 pi`` in ``p``, i.e. ``2 pi / T`` in ``n``.
To compare with the quantum register, a level index ``m`` corresponds to the
classical momentum ``n = m - nbar``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, sin, tau

import numpy as np

K_GOLDEN = 0.971635406


@dataclass(frozen=True)
class ClassicalPoint:
    n: float
    theta: float


def _wrap(theta):
    return np.mod(theta, tau)


def iterate(point: ClassicalPoint, k: float, T: float) -> ClassicalPoint:
    n = point.n + k * sin(point.theta)
    theta = (point.theta + T * n) % tau
    return ClassicalPoint(n, theta)


def iterate_inverse(point: ClassicalPoint, k: float, T: float) -> ClassicalPoint:
    theta = (point.theta - T * point.n) % tau
    return ClassicalPoint(point.n - k * sin(theta), theta)


def jacobian(point: ClassicalPoint, k: float, T: float) -> np.ndarray:
    """d(n', theta') / d(n, theta) of one iterate."""
    c = k * cos(point.theta)
    return np.array([[1.0, c], [T, 1.0 + T * c]])


def iterate_noisy(point: ClassicalPoint, k: float, T: float, eps_classical: float,
                  rng: np.random.Generator) -> ClassicalPoint:
    """Exact iterate followed by uniform kicks of size ``pi eps`` in ``theta`` and ``p = T n``."""
    p = iterate(point, k, T)
    if eps_classical == 0:
        return p
    a = np.pi * eps_classical
    d_theta, d_p = rng.uniform(-a, a, 2)
    return ClassicalPoint(p.n + d_p / T, (p.theta + d_theta) % tau)


@dataclass
class ClassicalEnsemble:
    n: np.ndarray
    theta: np.ndarray
    k: float
    T: float
    noise_epsilon: float = 0.0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float).copy()
        self.theta = _wrap(np.asarray(self.theta, dtype=float))
        if self.n.shape != self.theta.shape:
            raise ValueError("n and theta must have the same shape")

    def __len__(self) -> int:
        return self.n.size

    @property
    def K(self) -> float:
        return self.k * self.T

    @property
    def p(self) -> np.ndarray:
        return self.T * self.n

    @classmethod
    def line(cls, n0: float, count: int, k: float, T: float, **kw) -> "ClassicalEnsemble":
        """``count`` points at momentum ``n0`` spread evenly in angle."""
        theta = tau * (np.arange(count) + 0.5) / count
        return cls(np.full(count, float(n0)), theta, k, T, **kw)

    def step(self) -> "ClassicalEnsemble":
        self.n += self.k * np.sin(self.theta)
        self.theta = _wrap(self.theta + self.T * self.n)
        if self.noise_epsilon > 0:
            a = np.pi * self.noise_epsilon
            self.theta = _wrap(self.theta + self.rng.uniform(-a, a, self.n.size))
            self.n += self.rng.uniform(-a, a, self.n.size) / self.T
        return self

    def evolve(self, t: int) -> "ClassicalEnsemble":
        for _ in range(t):
            self.step()
        return self


def fold_momentum(p: np.ndarray) -> np.ndarray:
    """Rescaled momentum folded into ``[-pi, pi)``."""
    return np.mod(np.asarray(p) + np.pi, tau) - np.pi


def phase_portrait(K: float, n_trajectories: int, t: int, seed: int = 0,
                   initial: str = "random") -> tuple[np.ndarray, np.ndarray]:
    """All iterates of ``n_trajectories`` orbits, as ``(theta, p)`` with ``p`` folded.

    Orbits start uniformly at random in the cell (``initial="random"``) or on
    the vertical line ``theta = 0`` (``"line"``). Uses ``T = 1`` so ``p = n``.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    rng = np.random.default_rng(seed)
    if initial == "random":
        theta = rng.uniform(0, tau, n_trajectories)
        p = rng.uniform(-np.pi, np.pi, n_trajectories)
    else:
        theta = np.zeros(n_trajectories)
        p = np.linspace(-np.pi, np.pi, n_trajectories, endpoint=False)
    ens = ClassicalEnsemble(p, theta, K, 1.0)
    thetas = np.empty((t, n_trajectories))
    ps = np.empty((t, n_trajectories))
    for i in range(t):
        ens.step()
        thetas[i] = ens.theta
        ps[i] = ens.n
    return thetas.ravel(), fold_momentum(ps.ravel())


def occupied_fraction(theta: np.ndarray, p: np.ndarray, bins: int = 64) -> float:
    """Fraction of a ``bins x bins`` coarse grid of the folded cell holding any point."""
    h, _, _ = np.histogram2d(theta, fold_momentum(p), bins=bins,
                             range=[[0, tau], [-np.pi, np.pi]])
    return float(np.count_nonzero(h)) / h.size


@dataclass(frozen=True)
class DensityGrid:
    """Histogram axes: ``n_theta`` angle bins over ``[0, 2 pi)`` and
    ``n_momentum`` bins over ``[n_min, n_max)`` (classical momentum units)."""

    n_theta: int
    n_momentum: int
    n_min: float
    n_max: float

    def __post_init__(self):
        if self.n_theta <= 0 or self.n_momentum <= 0:
            raise ValueError("grid dimensions must be positive")
        if not self.n_max > self.n_min:
            raise ValueError("empty momentum range")


def classical_density(ensemble: ClassicalEnsemble, grid: DensityGrid,
                      fold: bool = True) -> np.ndarray:
    """Occupancy histogram of shape ``(n_momentum, n_theta)`` normalized to sum 1.

    With ``fold`` momenta are first reduced into ``[n_min, n_min + 2 pi / T)``.
    """
    if len(ensemble) == 0:
        raise ValueError("empty ensemble")
    n = ensemble.n
    if fold:
        n = grid.n_min + np.mod(n - grid.n_min, tau / ensemble.T)
    h, _, _ = np.histogram2d(n, ensemble.theta, bins=[grid.n_momentum, grid.n_theta],
                             range=[[grid.n_min, grid.n_max], [0, tau]])
    total = h.sum()
    if total == 0:
        raise ValueError("no ensemble point falls inside the grid")
    return h / total


def diffusion_rate(ensemble: ClassicalEnsemble, t: int) -> float:
    """``<(n - n_start)^2> / t`` after ``t`` iterations (ensemble evolved in place)."""
    start = ensemble.n.copy()
    ensemble.evolve(t)
    return float(np.mean((ensemble.n - start) ** 2) / t)


def write_columns(path, columns: dict[str, np.ndarray]) -> None:
    """Plain whitespace-separated columns with a ``#`` header line."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[c], dtype=float) for c in names])
    np.savetxt(path, data, header=" ".join(names), fmt="%.10g")
