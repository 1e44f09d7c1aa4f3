"""Small-N equivalence checks of the circuit against dense linear algebra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuits import (
    Propagator,
    RotatorParams,
    dense_dft,
    dense_period_operator,
    dropped_global_phase,
    free_rotation,
    free_rotation_gates,
    qft,
    qft_gates,
)
from ..statevector import NoiseModel, QuantumState

EXACT = NoiseModel.exact()


@dataclass
class OracleResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44s} max err {self.max_error:.2e} (tol {self.tolerance:.0e})"


def check_qft(n_q: int, seed: int = 0) -> OracleResult:
    s = QuantumState.random(n_q, np.random.default_rng(seed))
    a = s.amplitudes.copy()
    qft(s, EXACT)
    err = np.abs(s.amplitudes - dense_dft(1 << n_q) @ a).max()
    return OracleResult(f"qft vs dense DFT, n_q={n_q}", float(err), 1e-12)


def check_steps(n_q: int, steps: int = 100, seed: int = 0, K: float = 5.0,
                T: float | str = 0.5) -> OracleResult:
    """``steps`` circuit periods against powers of the dense period operator."""
    p = RotatorParams.from_chaos(n_q, K, T, n0=0)
    s = QuantumState.random(n_q, np.random.default_rng(seed))
    U = dense_period_operator(p)
    ph = dropped_global_phase(p)
    v = s.amplitudes.copy()
    prop = Propagator(p)
    worst = 0.0
    for t in range(1, steps + 1):
        prop.step(s, EXACT)
        v = U @ v
        # per-step error: compare after removing the accumulated global phase
        worst = max(worst, float(np.abs(s.amplitudes * ph ** t - v).max()))
    return OracleResult(f"{steps} steps vs dense operator, n_q={n_q}, K={K}", worst, 1e-9)


def check_fused(n_q: int, epsilon: float = 0.05, seed: int = 0) -> OracleResult:
    """Fused diagonal layers against gate-by-gate application, noise included."""
    p = RotatorParams.from_chaos(n_q, 5.0, 0.5, n0=0)
    a = QuantumState.random(n_q, np.random.default_rng(seed))
    b = a.copy()
    na, nb = NoiseModel(epsilon, seed, 1), NoiseModel(epsilon, seed, 1)
    free_rotation(a, p, na)
    free_rotation_gates(b, p, nb)
    qft(a, na)
    qft_gates(b, nb)
    qft(a, na, inverse=True)
    qft_gates(b, nb, inverse=True)
    err = np.abs(a.amplitudes - b.amplitudes).max()
    return OracleResult(f"fused vs gate-by-gate (eps={epsilon}), n_q={n_q}", float(err), 1e-12)


def oracle_suite(max_n_q: int = 6, steps: int = 100) -> list[OracleResult]:
    out = []
    for n in range(1, max_n_q + 1):
        out.append(check_qft(n, seed=n))
    for n in range(2, max_n_q + 1):
        out.append(check_steps(n, steps, seed=n))
        out.append(check_steps(n, steps, seed=n, K=1.3, T="2pi/N"))
        out.append(check_fused(n, seed=n))
    return out
