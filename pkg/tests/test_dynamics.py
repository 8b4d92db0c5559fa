import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmcp.dynamics import (CompositeSequence, Pulse, StateVector, Unitary2, compose_sequence,
                           evolve_trace, fidelity_batch, pi_duration, pulse_propagator,
                           transfer_fidelity)
from dmcp.errors import InvalidArgumentError
from dmcp.robustness import resonant_sequence

from oracles import expm_composite, expm_propagator, rk4_propagator


def test_resonant_pi_pulse_inverts():
    u = pulse_propagator(Pulse(1.0, 0.0))
    assert u.u12 == pytest.approx(-1j, abs=1e-15)
    assert u.transfer_probability == pytest.approx(1.0, abs=1e-15)


def test_zero_area_limit_is_identity():
    u = pulse_propagator(Pulse(1.0, 0.0), area_scale=1e-12)
    np.testing.assert_allclose(u.as_array(), np.eye(2), atol=1e-11)


def test_detuned_pi_pulse_matches_matrix_exponential():
    p = Pulse(1.0, 1.0)
    u = pulse_propagator(p)
    assert u.u11 == pytest.approx(1j / math.sqrt(2), abs=1e-15)
    assert u.u12 == pytest.approx(-1j / math.sqrt(2), abs=1e-15)
    assert u.transfer_probability == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(u.as_array(), expm_propagator(1.0, 1.0, math.pi / math.sqrt(2)), atol=1e-13)


def test_propagator_matches_runge_kutta():
    p = Pulse(0.7, -2.3, nominal_area=2.1)
    ref = rk4_propagator(p.rabi, p.detuning, p.duration * 1.3)
    np.testing.assert_allclose(pulse_propagator(p, 1.3).as_array(), ref, atol=1e-10)


@pytest.mark.parametrize("kwargs", [
    dict(rabi=float("nan"), detuning=0.0),
    dict(rabi=1.0, detuning=float("inf")),
    dict(rabi=0.0, detuning=1.0),
    dict(rabi=-1.0, detuning=1.0),
    dict(rabi=1.0, detuning=0.0, nominal_area=0.0),
])
def test_invalid_pulses_rejected(kwargs):
    with pytest.raises(InvalidArgumentError):
        Pulse(**kwargs)


@pytest.mark.parametrize("scale", [float("nan"), float("inf"), 0.0, -1.0])
def test_invalid_area_scale_rejected(scale):
    with pytest.raises(InvalidArgumentError):
        pulse_propagator(Pulse(1.0, 0.0), scale)


@pytest.mark.parametrize("delta, expected", [
    (0.0, math.pi),
    (1.0, math.pi / math.sqrt(2)),
    (math.sqrt(3), math.pi / 2),
])
def test_pi_duration(delta, expected):
    assert pi_duration(Pulse(1.0, delta)) == pytest.approx(expected, rel=1e-15)


def test_pi_duration_numeric_value():
    assert pi_duration(Pulse(1.0, 1.0)) == pytest.approx(2.2214, abs=1e-4)


def test_compose_single_resonant():
    assert compose_sequence(resonant_sequence()).transfer_probability == pytest.approx(1.0, abs=1e-15)


def test_compose_first_order_two_pulse():
    seq = CompositeSequence.from_ratios([1.0, -1.0])
    assert compose_sequence(seq).transfer_probability == pytest.approx(1.0, abs=1e-14)


def test_compose_first_order_two_pulse_regression_at_ten_percent(fo2):
    # frozen from this implementation; matrix-exponential oracle agrees
    f = compose_sequence(fo2, 1.10).transfer_probability
    assert f == pytest.approx(0.999401133850708, abs=1e-12)
    assert abs(expm_composite([1.0, -1.0], 1.10)[0, 1]) ** 2 == pytest.approx(f, abs=1e-12)


def test_compose_order_is_right_to_left():
    seq = CompositeSequence((Pulse(1.0, 0.3, 1.0), Pulse(2.0, -1.1, 2.5), Pulse(0.5, 4.0, 0.7)))
    expected = np.eye(2, dtype=complex)
    for p in seq:
        expected = pulse_propagator(p).as_array() @ expected
    np.testing.assert_allclose(compose_sequence(seq).as_array(), expected, atol=1e-14)


def test_compose_per_pulse_scales():
    seq = CompositeSequence.from_ratios([0.5, -2.0, 1.5])
    scales = [0.9, 1.05, 1.2]
    expected = np.eye(2, dtype=complex)
    for p, s in zip(seq, scales):
        expected = pulse_propagator(p, 1.1 * s).as_array() @ expected
    np.testing.assert_allclose(compose_sequence(seq, 1.1, scales).as_array(), expected, atol=1e-14)


def test_compose_length_mismatch():
    with pytest.raises(InvalidArgumentError):
        compose_sequence(CompositeSequence.from_ratios([1.0, -1.0]), 1.0, [1.0])


def test_compose_rejects_nonpositive_per_pulse_scale():
    with pytest.raises(InvalidArgumentError):
        compose_sequence(CompositeSequence.from_ratios([1.0, -1.0]), 1.0, [1.0, 0.0])


def test_designed_sequences_transfer_fully(designs):
    for result in designs.values():
        assert transfer_fidelity(result.sequence) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("eps", [-0.3, -0.05, 0.0, 0.01, 0.2])
def test_resonant_area_error_profile(eps):
    f = transfer_fidelity(resonant_sequence(), 1.0 + eps)
    assert f == pytest.approx(math.cos(math.pi * eps / 2) ** 2, abs=1e-15)


def test_second_order_three_pulse_at_ten_percent(so3):
    assert 1.0 - transfer_fidelity(so3, 1.10) < 1e-4


def test_fidelity_with_detuning_and_coupling_errors_matches_oracle():
    ratios = [1.7, -1.7, 1.7]
    seq = CompositeSequence.from_ratios(ratios)
    d, c, a = 1.15, 0.92, 1.03
    U = np.eye(2, dtype=complex)
    for x in ratios:
        t = a * math.pi / math.hypot(1.0, x)  # durations stay at their design values
        U = expm_propagator(c, d * x, t) @ U
    assert transfer_fidelity(seq, a, d, c) == pytest.approx(abs(U[0, 1]) ** 2, abs=1e-13)


def test_resonant_pulse_ignores_relative_detuning_error():
    seq = resonant_sequence()
    assert transfer_fidelity(seq, 1.0, 3.0, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_absolute_detuning_offset_matches_oracle():
    U = expm_propagator(1.0, 0.4, math.pi)
    assert transfer_fidelity(resonant_sequence(), detuning_offset=0.4) == pytest.approx(
        abs(U[0, 1]) ** 2, abs=1e-14)


def test_zero_coupling_is_a_pure_phase():
    assert transfer_fidelity(CompositeSequence.from_ratios([0.0, 1.0]), coupling_scale=0.0) == 0.0


def test_fidelity_batch_shapes(fo3):
    f = fidelity_batch(fo3, area_scale=np.linspace(0.9, 1.1, 7))
    assert f.shape == (7,)
    with pytest.raises(InvalidArgumentError):
        fidelity_batch(fo3, area_scale=np.ones((2, 2)))


def test_trace_resonant_endpoint():
    trace = evolve_trace(resonant_sequence(), 50)
    np.testing.assert_allclose(trace[-1], [math.pi, 0.0, 1.0], atol=1e-14)


def test_trace_first_order_two_pulse(fo2):
    trace = evolve_trace(fo2, 100)
    assert trace.shape == (201, 3)
    assert trace[-1, 2] == pytest.approx(1.0, abs=1e-12)
    mid = trace[100, 2]
    assert 0.0 < mid < 1.0
    # end of the first pulse: |u12|^2 of a pi pulse with delta = omega
    assert mid == pytest.approx(0.5, abs=1e-14)


def test_trace_sampling_contract(fo3):
    trace = evolve_trace(fo3, 100)
    assert trace.shape == (100 * 3 + 1, 3)
    assert np.all(np.diff(trace[:, 0]) > 0)
    assert trace[-1, 0] == pytest.approx(fo3.durations.sum(), rel=1e-14)


def test_trace_endpoint_matches_composition():
    seq = CompositeSequence.from_ratios([0.3, -2.2, 1.1, 0.0])
    init = StateVector(math.sqrt(0.3), 1j * math.sqrt(0.7))
    final = compose_sequence(seq).apply(init)
    trace = evolve_trace(seq, 17, init)
    assert trace[-1, 1] == pytest.approx(abs(final.c1) ** 2, abs=1e-9)
    assert trace[-1, 2] == pytest.approx(abs(final.c2) ** 2, abs=1e-9)
    np.testing.assert_allclose(trace[:, 1] + trace[:, 2], 1.0, atol=1e-9)


def test_trace_rejects_too_few_steps(fo2):
    with pytest.raises(InvalidArgumentError):
        evolve_trace(fo2, 1)


def test_state_vector_normalization():
    with pytest.raises(InvalidArgumentError):
        StateVector(1.0, 1.0)


def _random_pulses(rng, n):
    rabi = rng.uniform(0.1, 10.0, n)
    delta = rng.uniform(-10.0, 10.0, n)
    area = rng.uniform(0.0, 4 * math.pi, n)
    area[area == 0.0] = 1e-3
    return rabi, delta, area


def test_unitarity_and_determinant_on_random_pulses():
    rng = np.random.default_rng(20240611)
    for rabi, delta, area in zip(*_random_pulses(rng, 10_000)):
        u = pulse_propagator(Pulse(rabi, delta, area))
        assert u.unitarity_error() < 1e-12
        assert abs(abs(u.det()) - 1.0) < 1e-12
        assert u.u21 == u.u12
        assert u.u22 == pytest.approx(u.u11.conjugate(), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(rabi=st.floats(0.1, 10.0), delta=st.floats(-10.0, 10.0), area=st.floats(1e-3, 4 * math.pi))
def test_single_pulse_composition_consistency(rabi, delta, area):
    p = Pulse(rabi, delta, area)
    a = pulse_propagator(p).as_array()
    b = compose_sequence(CompositeSequence((p,))).as_array()
    assert np.array_equal(a, b)


@settings(max_examples=200, deadline=None)
@given(rabi=st.floats(0.1, 10.0), delta=st.floats(-10.0, 10.0))
def test_pi_pulse_structure(rabi, delta):
    p = Pulse(rabi, delta)
    u = pulse_propagator(p)
    g = p.generalized_rabi
    assert abs(u.u11 - 1j * delta / g) < 1e-12
    assert abs(u.u12 + 1j * rabi / g) < 1e-12


@settings(max_examples=50, deadline=None)
@given(ratios=st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=8),
       scale=st.floats(0.2, 3.0))
def test_composite_is_unitary(ratios, scale):
    u = compose_sequence(CompositeSequence.from_ratios(ratios), scale)
    assert u.unitarity_error() < 1e-12
    assert abs(abs(u.det()) - 1.0) < 1e-12
