"""
Dense state vector and the two elementary gates of the kicked-rotator circuit.

Qubit ``j`` carries bit ``j`` of the basis index (little endian), so the
amplitude of ``|n>`` sits at ``amplitudes[n]`` with ``n = sum_j b_j 2**j``.

Gates act in place through strided reshapes of the amplitude buffer. Each
imperfect gate draws its own random angle from the ``NoiseModel`` stream:

- Hadamard ``H = u0 . sigma`` with ``u0 = (1/sqrt2, 0, 1/sqrt2)`` becomes
  ``H' = u . sigma`` where ``u`` sits at angle ``beta`` from ``u0``;
- the phase gates ``diag(1, e^{i alpha})`` and
  ``B = diag(1, 1, 1, e^{i alpha})`` get ``alpha -> alpha + gamma``;

with ``beta``, ``gamma`` uniform in ``(-pi eps, pi eps)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import cos, pi, sin, sqrt

import numpy as np

_SQRT2_INV = 1 / sqrt(2)
# fl(1/sqrt2) is rounded down; without the tail every exact Hadamard shrinks
# the norm by ~1e-16 and long exact runs drift visibly.
_SQRT2_INV_TAIL = 6.268583589525109e-17
_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV


class ConfigurationError(ValueError):
    """Invalid physical or numerical configuration."""


class Representation(enum.Enum):
    MOMENTUM = "momentum"
    ANGLE = "angle"


@dataclass
class QuantumState:
    """Amplitudes of an ``n_q``-qubit register plus the basis they refer to."""

    amplitudes: np.ndarray
    n_q: int
    representation: Representation = Representation.MOMENTUM

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_q,):
            raise ConfigurationError(
                f"expected {1 << self.n_q} amplitudes for n_q={self.n_q}, "
                f"got shape {self.amplitudes.shape}")

    @property
    def dim(self) -> int:
        return 1 << self.n_q

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "QuantumState":
        return QuantumState(self.amplitudes.copy(), self.n_q, self.representation)

    @classmethod
    def basis(cls, n_q: int, index: int,
              representation: Representation = Representation.MOMENTUM) -> "QuantumState":
        if not 0 <= index < (1 << n_q):
            raise IndexError(f"basis index {index} outside [0, {1 << n_q})")
        amps = np.zeros(1 << n_q, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, n_q, representation)

    @classmethod
    def random(cls, n_q: int, rng: np.random.Generator,
               representation: Representation = Representation.MOMENTUM) -> "QuantumState":
        amps = rng.normal(size=1 << n_q) + 1j * rng.normal(size=1 << n_q)
        amps /= np.linalg.norm(amps)
        return cls(amps, n_q, representation)


@dataclass
class NoiseModel:
    """Strength and random stream of the unitary gate errors.

    ``tilt`` selects how the Hadamard axis is perturbed: ``"plane"`` rotates
    ``u0`` inside the x-z plane, ``"sphere"`` tilts it by ``beta`` towards a
    uniformly random azimuth around ``u0``.
    """

    epsilon: float = 0.0
    master_seed: int = 0
    stream_id: int = 0
    tilt: str = "plane"
    _rng: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ConfigurationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.tilt not in ("plane", "sphere"):
            raise ConfigurationError(f"unknown tilt mode {self.tilt!r}")

    @classmethod
    def exact(cls) -> "NoiseModel":
        return cls(0.0)

    @property
    def is_exact(self) -> bool:
        return self.epsilon == 0.0

    @property
    def rng(self) -> np.random.Generator:
        # Philox is counter based; (master_seed, stream_id) picks an independent stream.
        if self._rng is None:
            seq = np.random.SeedSequence([self.master_seed & (2**64 - 1), self.stream_id])
            self._rng = np.random.Generator(np.random.Philox(seq))
        return self._rng

    def reset(self) -> None:
        self._rng = None

    def draw(self, size: int | None = None):
        """Uniform angle(s) in (-pi eps, pi eps); zeros when exact."""
        if self.is_exact:
            return 0.0 if size is None else np.zeros(size)
        a = pi * self.epsilon
        return self.rng.uniform(-a, a, size)

    def hadamard_matrix(self) -> np.ndarray:
        if self.is_exact:
            return _HADAMARD
        beta = self.draw()
        if self.tilt == "plane":
            ux, uy, uz = sin(pi / 4 + beta), 0.0, cos(pi / 4 + beta)
        else:
            phi = self.rng.uniform(0.0, 2 * pi)
            # orthonormal frame around u0: e1 in the x-z plane, e2 = y
            c, s = cos(beta), sin(beta)
            ux = _SQRT2_INV * (c + s * cos(phi))
            uz = _SQRT2_INV * (c - s * cos(phi))
            uy = s * sin(phi)
        return np.array([[uz, ux - 1j * uy], [ux + 1j * uy, -uz]], dtype=complex)


def _phase(alpha: float, noise: NoiseModel) -> complex:
    # Nominal angles reach ~1e9 rad; adding gamma before exponentiating would round it away.
    z = complex(np.exp(1j * alpha))
    if not noise.is_exact:
        z *= complex(np.exp(1j * noise.draw()))
    return z


def _check_qubit(state: QuantumState, q: int) -> None:
    if not 0 <= q < state.n_q:
        raise IndexError(f"qubit {q} out of range for n_q={state.n_q}")


def _split(amps: np.ndarray, n_q: int, q: int) -> np.ndarray:
    """View with axis 1 running over bit ``q``."""
    return amps.reshape(1 << (n_q - 1 - q), 2, 1 << q)


def apply_matrix_1q(state: QuantumState, target: int, matrix: np.ndarray) -> QuantumState:
    _check_qubit(state, target)
    v = _split(state.amplitudes, state.n_q, target)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    (m00, m01), (m10, m11) = matrix
    v[:, 0, :] *= m00
    v[:, 0, :] += m01 * a1
    a1 *= m11
    a1 += m10 * a0
    return state


def apply_hadamard(state: QuantumState, target: int, noise: NoiseModel) -> QuantumState:
    _check_qubit(state, target)
    if not noise.is_exact:
        return apply_matrix_1q(state, target, noise.hadamard_matrix())
    v = _split(state.amplitudes, state.n_q, target)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] += a1
    a1 *= -1.0
    a1 += a0
    tail = v * _SQRT2_INV_TAIL
    v *= _SQRT2_INV
    v += tail
    return state


def apply_phase_single(state: QuantumState, target: int, alpha: float,
                       noise: NoiseModel) -> QuantumState:
    _check_qubit(state, target)
    v = _split(state.amplitudes, state.n_q, target)
    v[:, 1, :] *= _phase(alpha, noise)
    return state


def apply_controlled_phase(state: QuantumState, q1: int, q2: int, alpha: float,
                           noise: NoiseModel) -> QuantumState:
    _check_qubit(state, q1)
    _check_qubit(state, q2)
    if q1 == q2:
        raise ValueError("controlled phase needs two distinct qubits")
    hi, lo = max(q1, q2), min(q1, q2)
    n = state.n_q
    v = state.amplitudes.reshape(1 << (n - 1 - hi), 2, 1 << (hi - 1 - lo), 2, 1 << lo)
    v[:, 1, :, 1, :] *= _phase(alpha, noise)
    return state


def product_phases(factors) -> np.ndarray:
    """``prod_j factors[j]**b_j`` over all bit strings of ``len(factors)`` bits.

    Entry ``x`` of the result corresponds to bits ``b_j`` of ``x``.
    """
    out = np.ones(1, dtype=np.complex128)
    for z in factors:
        out = np.concatenate((out, out * z))
    return out


def apply_phase_fan(state: QuantumState, control: int, factors,
                    others: str = "below", scale: complex = 1.0) -> QuantumState:
    """Apply commuting controlled phases that share one control qubit, in one pass.

    With ``others="below"`` ``factors[j]`` couples ``control`` to qubit ``j``
    (``j < control``); with ``"above"`` it couples ``control`` to qubit
    ``control + 1 + j``. ``scale`` is an extra single-qubit phase on
    ``control``. Factors are unit complex numbers that already carry noise.
    """
    v = _split(state.amplitudes, state.n_q, control)
    w = product_phases(factors)
    if scale != 1.0:
        w *= scale
    if others == "below":
        v[:, 1, :] *= w[None, :]
    else:
        v[:, 1, :] *= w[:, None]
    return state
