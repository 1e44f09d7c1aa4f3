import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkrotor.circuits import Propagator, RotatorParams, prepare_momentum_state
from qkrotor.observables import (
    DEFAULT_TUNNELING_DOMAIN,
    PhaseSpaceDomain,
    TimeSeries,
    crossing_time,
    extract_doubling_time,
    extract_fidelity_time,
    extract_wigner_time,
    fidelity,
    fit_power_law,
    geometric_times,
    measurement_times,
    predicted_tf,
    predicted_tq,
    predicted_tw,
    read_series_csv,
    second_moment,
    tunneling_probability,
    write_series_csv,
)
from qkrotor.phasespace import husimi
from qkrotor.statevector import NoiseModel, QuantumState, Representation


def test_second_moment_examples():
    assert second_moment(QuantumState.basis(4, 7), 7) == 0.0
    a = np.zeros(16, complex)
    a[6] = a[8] = 1 / math.sqrt(2)
    assert second_moment(QuantumState(a, 4), 7) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        second_moment(QuantumState.basis(2, 0, Representation.ANGLE), 0)


def test_second_moment_uses_plain_distance():
    # no modular wraparound: level 15 is 15 away from 0, not 1
    assert second_moment(QuantumState.basis(4, 15), 0) == 225.0


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), shift=st.integers(0, 20))
def test_second_moment_translation(seed, shift):
    rng = np.random.default_rng(seed)
    a = np.zeros(64, complex)
    a[10:30] = rng.normal(size=20) + 1j * rng.normal(size=20)
    a /= np.linalg.norm(a)
    n0 = float(rng.uniform(10, 30))
    assert second_moment(np.roll(a, shift), n0 + shift) == pytest.approx(second_moment(a, n0), rel=1e-12)


def test_fidelity_examples():
    s = QuantumState.random(3, np.random.default_rng(0))
    assert fidelity(s, s) == pytest.approx(1.0)
    assert fidelity(QuantumState.basis(3, 1), QuantumState.basis(3, 2)) == 0.0
    with pytest.raises(ValueError):
        fidelity(QuantumState.basis(3, 1), QuantumState.basis(2, 1))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), phi=st.floats(0, 2 * math.pi))
def test_fidelity_symmetric_and_phase_blind(seed, phi):
    rng = np.random.default_rng(seed)
    a, b = QuantumState.random(4, rng), QuantumState.random(4, rng)
    f = fidelity(a, b)
    assert 0.0 <= f <= 1.0
    assert fidelity(b, a) == pytest.approx(f, abs=1e-14)
    assert fidelity(a, b.amplitudes * np.exp(1j * phi)) == pytest.approx(f, abs=1e-14)


def test_fidelity_decay_rate_scales_with_nq_squared():
    # Gamma ~ eps^2 n_q^2: a short noisy run loses fidelity ~ t eps^2 n_q^2 C
    eps, t = 0.01, 60
    p = RotatorParams.from_chaos(8, 1.3, "2pi/N", n0=1)
    exact = prepare_momentum_state(8, 1)
    Propagator(p).evolve(exact, NoiseModel.exact(), t)
    losses = []
    for r in range(6):
        s = prepare_momentum_state(8, 1)
        Propagator(p).evolve(s, NoiseModel(eps, 5, r), t)
        losses.append(-math.log(fidelity(s, exact)))
    C = np.mean(losses) / (t * eps ** 2 * 64)
    assert math.log(2) / 0.35 / 2 < C < math.log(2) / 0.35 * 2


def test_domain_validation_and_round_trip():
    with pytest.raises(ValueError):
        PhaseSpaceDomain("triangle", (0, 0), 1.0)
    with pytest.raises(ValueError):
        PhaseSpaceDomain("circle", (0, 0), 4.0)
    d = PhaseSpaceDomain("rectangle", (1.0, 0.0), (0.5, 0.2))
    assert PhaseSpaceDomain.from_dict(d.to_dict()) == d
    assert PhaseSpaceDomain.from_dict(DEFAULT_TUNNELING_DOMAIN.to_dict()) == DEFAULT_TUNNELING_DOMAIN


def test_tunneling_full_cell_is_one():
    s = QuantumState.random(6, np.random.default_rng(1))
    h = husimi(s, 2 * math.pi / 64)
    full = PhaseSpaceDomain("rectangle", (math.pi, 0.0), (math.pi, math.pi))
    assert tunneling_probability(h, full, 32) == pytest.approx(1.0)


def test_tunneling_outside_state_is_zero():
    N = 256
    T = 2 * math.pi / N
    # level 1 sits at p = T (1 - N/2) ~ -pi, far from the island at p = 0
    h = husimi(QuantumState.basis(8, 1), T)
    assert tunneling_probability(h, DEFAULT_TUNNELING_DOMAIN, N / 2) < 1e-12
    # a state on the island center is mostly inside
    h = husimi(QuantumState.basis(8, N // 2), T)
    assert tunneling_probability(h, DEFAULT_TUNNELING_DOMAIN, N / 2) > 0.1


def test_tunneling_empty_domain():
    h = husimi(QuantumState.basis(3, 1), 0.5, 2, 2)
    with pytest.raises(ValueError):
        tunneling_probability(h, PhaseSpaceDomain("circle", (1.0, 1.0), 0.01), 4)


def _series(t, v):
    return TimeSeries(np.asarray(t), np.asarray(v, float))


def test_doubling_time_examples():
    t = np.arange(1, 201)
    exact = _series(t, np.full(t.size, 50.0))
    assert extract_doubling_time(exact, exact) is None
    tau = 37.5
    noisy = _series(t, 50.0 * (1 + t / tau))
    assert extract_doubling_time(exact, noisy) == pytest.approx(tau)
    assert extract_doubling_time(exact, noisy, reference="instantaneous") == pytest.approx(tau)
    assert extract_doubling_time(_series([1], [1.0]), _series([1], [1.0])) is None


def test_fidelity_time_examples():
    t = np.arange(0, 500, 7)
    assert extract_fidelity_time(_series(t, np.ones(t.size))) is None
    tau = 81.0
    assert extract_fidelity_time(_series(t, np.exp(-t / tau))) == pytest.approx(tau * math.log(2))


def test_wigner_time_examples():
    t = np.arange(1, 400, 3)
    assert extract_wigner_time(_series(t, np.zeros(t.size))) is None
    tau = 250.0
    assert extract_wigner_time(_series(t, t / tau), 0.5) == pytest.approx(tau / 2)


def test_crossing_time_interpolations():
    assert crossing_time([0, 10], [0.0, 1.0], 0.5) == pytest.approx(5.0)
    assert crossing_time([0, 10], [1.0, 100.0], 10.0, scale="log") == pytest.approx(5.0)
    assert crossing_time([1, 100], [1.0, 100.0], 10.0, scale="loglog") == pytest.approx(10.0)
    assert crossing_time([3, 4], [5.0, 6.0], 1.0) == 3.0
    assert crossing_time([3, 4], [5.0, 6.0], 1.0, direction="down") is None


def test_time_series_validation():
    with pytest.raises(ValueError):
        TimeSeries([1, 1], [0.0, 0.0])
    with pytest.raises(ValueError):
        TimeSeries([1, 2], [0.0])


def test_csv_round_trip(tmp_path):
    meta = {"n_q": 5, "k": 10.0, "T": 0.5, "epsilon": 0.001, "realization": 3}
    a = TimeSeries([1, 2, 5], [0.1, 0.2, 1 / 3], dict(meta, observable="second_moment"))
    b = TimeSeries([1, 2], [1.0, 0.9], dict(meta, observable="fidelity"))
    path = tmp_path / "r.csv"
    write_series_csv(path, [a, b])
    header = path.read_text().splitlines()[0]
    assert header == "t,value,n_q,k,T,epsilon,realization,observable_name"
    back = read_series_csv(path)
    assert np.array_equal(back["second_moment"].values, a.values)
    assert np.array_equal(back["fidelity"].times, b.times)


def test_predicted_laws():
    assert predicted_tq(15.0, 1e-3, 10) == pytest.approx(0.23 * 15 ** 4 / (1e-6 * 10 * 2 ** 20))
    assert predicted_tf(1e-2, 4) == pytest.approx(0.35 / (1e-4 * 16))
    assert predicted_tw(1e-3, 9, 0.02, 1.5) == pytest.approx(0.02 / (27 * 1e-6))


def test_cadences():
    m = measurement_times(250)
    assert m[:100].tolist() == list(range(1, 101))
    assert m[100] == 110 and m[-1] == 250
    assert measurement_times(5).tolist() == [1, 2, 3, 4, 5]
    g = geometric_times(1000)
    assert g[0] == 1 and g[-1] == 1000 and np.all(np.diff(g) > 0)


def test_fit_power_law():
    x = np.array([2.0, 4.0, 8.0, 16.0])
    slope, pref = fit_power_law(x, 3.0 * x ** 1.5)
    assert slope == pytest.approx(1.5) and pref == pytest.approx(3.0)
