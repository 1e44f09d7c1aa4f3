"""
Quantum algorithm for one period of the kicked rotator,

    psi -> exp(-i k cos(theta)) exp(-i T (n - nbar)^2 / 2) psi,

built from Hadamard and controlled-phase gates (free rotation and QFT) plus
an exact diagonal kick in the angle basis.

Two equivalent execution paths exist for the noisy gates. ``*_gates``
functions apply the gate list one gate at a time through the statevector
API; the default path fuses runs of commuting diagonal gates sharing a
control qubit into one pass. Both draw noise angles in the same order, so
they agree to rounding for the same seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np

from .statevector import (
    ConfigurationError,
    NoiseModel,
    QuantumState,
    Representation,
    apply_controlled_phase,
    apply_hadamard,
    apply_matrix_1q,
    apply_phase_fan,
    apply_phase_single,
)


@dataclass(frozen=True)
class RotatorParams:
    n_q: int
    k: float
    T: float
    n_bar: float | None = None
    n0: int = 0

    def __post_init__(self):
        if self.n_q < 1:
            raise ConfigurationError("n_q must be >= 1")
        N = 1 << self.n_q
        if self.n_bar is None:
            object.__setattr__(self, "n_bar", N // 2)
        if not 0 <= self.n0 < N:
            raise ConfigurationError(f"n0={self.n0} outside [0, {N})")
        if not 0 <= self.n_bar <= N:
            raise ConfigurationError(f"n_bar={self.n_bar} outside [0, {N}]")

    @classmethod
    def from_chaos(cls, n_q: int, K: float, T: float | str, n0: int | str = 0,
                   n_bar: float | None = None) -> "RotatorParams":
        """Build from the classical parameter ``K = kT``.

        ``T`` may be ``"2pi/N"`` and ``n0`` may be ``"N/2"``.
        """
        N = 1 << n_q
        T = resolve_T(T, n_q)
        if n0 == "N/2":
            n0 = N // 2
        return cls(n_q=n_q, k=K / T, T=T, n_bar=n_bar, n0=int(n0))

    @property
    def N(self) -> int:
        return 1 << self.n_q

    @property
    def K(self) -> float:
        return self.k * self.T


def resolve_T(T: float | str, n_q: int) -> float:
    if isinstance(T, str):
        if T.replace(" ", "") in ("2pi/N", "2*pi/N"):
            return 2 * math.pi / (1 << n_q)
        return float(T)
    return float(T)


class Gate(NamedTuple):
    kind: str          # "H", "P" (single-qubit phase) or "CP"
    qubits: tuple
    alpha: float = 0.0


def prepare_momentum_state(n_q: int, n0: int) -> QuantumState:
    return QuantumState.basis(n_q, n0, Representation.MOMENTUM)


# --- gate schedules -------------------------------------------------------

def qft_schedule(n_q: int, inverse: bool = False) -> list[Gate]:
    """Gate list of the forward (or inverse) QFT, excluding the bit reversal."""
    gates = []
    for j in reversed(range(n_q)):
        gates.append(Gate("H", (j,)))
        for m in range(j):
            gates.append(Gate("CP", (j, m), math.pi / (1 << (j - m))))
    if inverse:
        gates = [g if g.kind == "H" else g._replace(alpha=-g.alpha) for g in reversed(gates)]
    return gates


def free_rotation_angles(params: RotatorParams) -> tuple[np.ndarray, np.ndarray]:
    """Nominal single-qubit and pair angles of ``exp(-i T (n - nbar)^2 / 2)``.

    ``(n - nbar)^2 = sum_j b_j 4^j + 2 sum_{j<l} b_j b_l 2^{j+l} - 2 nbar n + nbar^2``;
    the constant is a global phase and is dropped. Powers of two keep every
    angle an exact float multiple of ``T``.
    """
    n, T, nb = params.n_q, params.T, params.n_bar
    single = np.array([-T * 2.0 ** (2 * j - 1) + T * nb * 2.0 ** j for j in range(n)])
    pair = np.zeros((n, n))
    for j in range(n):
        for l in range(j + 1, n):
            pair[j, l] = -T * 2.0 ** (j + l)
    return single, pair


def free_rotation_schedule(params: RotatorParams) -> list[Gate]:
    single, pair = free_rotation_angles(params)
    gates = []
    for j in range(params.n_q):
        gates.append(Gate("P", (j,), single[j]))
        for l in range(j + 1, params.n_q):
            gates.append(Gate("CP", (j, l), pair[j, l]))
    return gates


def run_schedule(state: QuantumState, gates: list[Gate], noise: NoiseModel) -> QuantumState:
    for g in gates:
        if g.kind == "H":
            apply_hadamard(state, g.qubits[0], noise)
        elif g.kind == "P":
            apply_phase_single(state, g.qubits[0], g.alpha, noise)
        else:
            apply_controlled_phase(state, g.qubits[0], g.qubits[1], g.alpha, noise)
    return state


def gate_counts(gates: list[Gate]) -> dict[str, int]:
    counts = {"one_qubit": 0, "two_qubit": 0}
    for g in gates:
        counts["two_qubit" if len(g.qubits) == 2 else "one_qubit"] += 1
    return counts


# --- helpers --------------------------------------------------------------

def bit_reversal_permutation(n_q: int) -> np.ndarray:
    idx = np.arange(1 << n_q)
    rev = np.zeros_like(idx)
    for j in range(n_q):
        rev |= ((idx >> j) & 1) << (n_q - 1 - j)
    return rev


def _require(state: QuantumState, rep: Representation, what: str) -> None:
    if state.representation is not rep:
        raise ValueError(f"{what} needs the {rep.value} representation, "
                         f"state is in {state.representation.value}")


def _noise_factors(noise: NoiseModel, size: int) -> np.ndarray | None:
    if noise.is_exact or size == 0:
        return None
    return np.exp(1j * noise.draw(size))


class _Tables:
    """Per-register constants reused every period."""

    def __init__(self, n_q: int):
        self.n_q = n_q
        self.bitrev = bit_reversal_permutation(n_q)
        # fan_j[m] = exp(i pi / 2^{j-m}) for the QFT controlled phases on qubit j
        self.qft_fans = [np.exp(1j * math.pi / 2.0 ** (j - np.arange(j))) for j in range(n_q)]


_TABLE_CACHE: dict[int, _Tables] = {}


def _tables(n_q: int) -> _Tables:
    if n_q not in _TABLE_CACHE:
        _TABLE_CACHE[n_q] = _Tables(n_q)
    return _TABLE_CACHE[n_q]


# --- public operations ----------------------------------------------------

def qft(state: QuantumState, noise: NoiseModel, inverse: bool = False) -> QuantumState:
    """Circuit QFT between the momentum and angle bases, in place.

    Forward: ``b_i = N^{-1/2} sum_n a_n exp(+2 pi i n i / N)`` (momentum to
    angle). The trailing bit reversal is a relabelling of amplitudes and
    carries no gate error.
    """
    if inverse:
        _require(state, Representation.ANGLE, "inverse qft")
    else:
        _require(state, Representation.MOMENTUM, "qft")
    n = state.n_q
    tab = _tables(n)
    if not inverse:
        for j in reversed(range(n)):
            apply_hadamard(state, j, noise)
            if j:
                fan = tab.qft_fans[j]
                extra = _noise_factors(noise, j)
                apply_phase_fan(state, j, fan if extra is None else fan * extra)
        state.amplitudes[:] = state.amplitudes[tab.bitrev]
        state.representation = Representation.ANGLE
    else:
        state.amplitudes[:] = state.amplitudes[tab.bitrev]
        for j in range(n):
            if j:
                fan = tab.qft_fans[j].conj()
                # reversed gate order: the controlled phases on qubit j run m = j-1 .. 0
                extra = _noise_factors(noise, j)
                if extra is not None:
                    fan = fan * extra[::-1]
                apply_phase_fan(state, j, fan)
            apply_hadamard(state, j, noise)
        state.representation = Representation.MOMENTUM
    return state


def qft_gates(state: QuantumState, noise: NoiseModel, inverse: bool = False) -> QuantumState:
    """Gate-by-gate QFT; reference path for ``qft``."""
    tab = _tables(state.n_q)
    if not inverse:
        _require(state, Representation.MOMENTUM, "qft")
        run_schedule(state, qft_schedule(state.n_q), noise)
        state.amplitudes[:] = state.amplitudes[tab.bitrev]
        state.representation = Representation.ANGLE
    else:
        _require(state, Representation.ANGLE, "inverse qft")
        state.amplitudes[:] = state.amplitudes[tab.bitrev]
        run_schedule(state, qft_schedule(state.n_q, inverse=True), noise)
        state.representation = Representation.MOMENTUM
    return state


def free_rotation(state: QuantumState, params: RotatorParams, noise: NoiseModel,
                  _angles=None) -> QuantumState:
    """Multiply ``a_n`` by ``exp(-i T (n - nbar)^2 / 2)`` up to a global phase."""
    _require(state, Representation.MOMENTUM, "free_rotation")
    single, pair = _angles if _angles is not None else free_rotation_angles(params)
    n = state.n_q
    for j in range(n):
        fan = np.exp(1j * pair[j, j + 1:])
        z = complex(np.exp(1j * single[j]))
        extra = _noise_factors(noise, n - j)
        if extra is not None:
            z *= extra[0]
            fan = fan * extra[1:]
        apply_phase_fan(state, j, fan, others="above", scale=z)
    return state


def free_rotation_gates(state: QuantumState, params: RotatorParams,
                        noise: NoiseModel) -> QuantumState:
    _require(state, Representation.MOMENTUM, "free_rotation")
    return run_schedule(state, free_rotation_schedule(params), noise)


def kick(state: QuantumState, params: RotatorParams) -> QuantumState:
    """Exact ``exp(-i k cos theta_i)`` on the angle grid ``theta_i = 2 pi i / N``."""
    _require(state, Representation.ANGLE, "kick")
    state.amplitudes *= kick_phases(params)
    return state


def kick_phases(params: RotatorParams) -> np.ndarray:
    theta = 2 * np.pi * np.arange(params.N) / params.N
    return np.exp(-1j * params.k * np.cos(theta))


def rotation_phases(params: RotatorParams) -> np.ndarray:
    n = np.arange(params.N, dtype=float)
    return np.exp(-0.5j * params.T * (n - params.n_bar) ** 2)


def step(state: QuantumState, params: RotatorParams, noise: NoiseModel) -> QuantumState:
    """One kick period on the gate-level circuit; momentum in, momentum out."""
    _require(state, Representation.MOMENTUM, "step")
    free_rotation(state, params, noise)
    qft(state, noise)
    kick(state, params)
    qft(state, noise, inverse=True)
    return state


class Propagator:
    """Repeated periods with constants cached.

    ``method="gates"`` runs the noisy circuit (fused diagonal layers);
    ``method="fft"`` is the classical split-operator algorithm, valid only
    for exact evolution and used as the noise-free reference arm.
    """

    def __init__(self, params: RotatorParams, method: str = "gates"):
        if method not in ("gates", "fft"):
            raise ConfigurationError(f"unknown propagation method {method!r}")
        self.params = params
        self.method = method

    @cached_property
    def _kick(self) -> np.ndarray:
        return kick_phases(self.params)

    @cached_property
    def _rotation(self) -> np.ndarray:
        return rotation_phases(self.params)

    @cached_property
    def _angles(self):
        return free_rotation_angles(self.params)

    def step(self, state: QuantumState, noise: NoiseModel) -> QuantumState:
        _require(state, Representation.MOMENTUM, "step")
        if self.method == "fft":
            if not noise.is_exact:
                raise ConfigurationError("the fft propagator cannot model gate noise")
            a = state.amplitudes
            a *= self._rotation
            b = np.fft.ifft(a, norm="ortho")
            b *= self._kick
            a[:] = np.fft.fft(b, norm="ortho")
            return state
        free_rotation(state, self.params, noise, _angles=self._angles)
        qft(state, noise)
        state.amplitudes *= self._kick
        qft(state, noise, inverse=True)
        return state

    def evolve(self, state: QuantumState, noise: NoiseModel, t: int) -> QuantumState:
        for _ in range(t):
            self.step(state, noise)
        return state

    def trajectory(self, state: QuantumState, noise: NoiseModel,
                   times) -> Iterator[tuple[int, QuantumState]]:
        """Yield ``(t, state)`` at each requested kick count (ascending)."""
        t = 0
        for target in times:
            while t < target:
                self.step(state, noise)
                t += 1
            yield t, state


def dense_dft(N: int) -> np.ndarray:
    idx = np.arange(N)
    return np.exp(2j * np.pi * np.outer(idx, idx) / N) / math.sqrt(N)


def dense_period_operator(params: RotatorParams) -> np.ndarray:
    """Dense ``F^dag diag(kick) F diag(rotation)`` for small-N oracle checks."""
    F = dense_dft(params.N)
    return F.conj().T @ np.diag(kick_phases(params)) @ F @ np.diag(rotation_phases(params))


def dropped_global_phase(params: RotatorParams) -> complex:
    """Per-period phase ``exp(-i T nbar^2 / 2)`` omitted by the gate circuit."""
    return complex(np.exp(-0.5j * params.T * params.n_bar ** 2))
