import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from lorentzdd.control import (
    JitterSpec,
    Pulse,
    Schedule,
    constant_schedule,
    detuning_at,
    filter_function,
    free_schedule,
    irregular_schedule,
    phase_integral,
    regular_schedule,
)
from lorentzdd.errors import DomainError, ParameterError


def _assert_well_formed(s):
    prev = 0.0
    for p in s.pulses:
        assert p.width > 0
        assert p.t_on >= prev - 1e-12
        assert p.t_off <= s.horizon * (1 + 1e-12)
        prev = p.t_off


def test_pulse_rejects_nonpositive_width():
    with pytest.raises(ParameterError):
        Pulse(0.0, 0.0, 1.0)


def test_full_duty_cycle_schedule():
    s = regular_schedule(25.0, 0.27, 0.27, 2.7)
    assert len(s.pulses) == 10
    assert s.duty_cycle == 1.0
    t = np.linspace(0, 2.69, 500)
    assert np.all(detuning_at(s, t) == 25.0)


def test_regular_pulses_exact():
    s = regular_schedule(25.0, 0.243, 0.27, 2.7)
    _assert_well_formed(s)
    for k, p in enumerate(s.pulses):
        assert p.t_on == k * 0.27
        assert p.amplitude == 25.0
    assert all(p.width == 0.243 for p in s.pulses)


def test_regular_duty_cycle_on_fraction():
    s = regular_schedule(5.0, 0.5, 1.0, 200.3)
    on = sum(p.width for p in s.pulses) / s.horizon
    assert abs(on - 0.5) <= 1 / s.horizon


@pytest.mark.parametrize("args", [(1, 0.3, 0.2, 1), (1, 0, 0.2, 1), (1, 0.1, -1, 1), (1, 0.1, 0.2, 0)])
def test_regular_rejects_bad_parameters(args):
    with pytest.raises(ParameterError):
        regular_schedule(*args)


def test_zero_jitter_equals_regular():
    reg = regular_schedule(25.0, 0.243, 0.27, 20.0)
    irr = irregular_schedule((25.0, 0.243, 0.27), JitterSpec(seed=3), 20.0)
    assert len(reg.pulses) == len(irr.pulses)
    for a, b in zip(reg.pulses, irr.pulses):
        assert a.t_on == pytest.approx(b.t_on, abs=1e-12)
        assert a.width == pytest.approx(b.width, abs=1e-12)
        assert a.amplitude == b.amplitude


def test_zero_jitter_full_duty_cycle_accepted():
    irr = irregular_schedule((25.0, 0.27, 0.27), JitterSpec(seed=1), 2.7)
    assert all(p.width == pytest.approx(0.27) for p in irr.pulses)


def test_jitter_is_deterministic_per_seed():
    base = (30.0, 0.054, 0.27)
    jspec = JitterSpec.relative(*base, seed=7)
    a = irregular_schedule(base, jspec, 20.0)
    b = irregular_schedule(base, jspec, 20.0)
    assert a.pulses == b.pulses
    c = irregular_schedule(base, JitterSpec.relative(*base, seed=8), 20.0)
    assert a.pulses != c.pulses


def test_jitter_bounds_and_mean():
    base = (30.0, 0.1, 0.27)
    s = irregular_schedule(base, JitterSpec.relative(*base, seed=11), 0.27 * 10_000)
    widths = np.array([p.width for p in s.pulses[:-1]])
    assert len(widths) > 9000
    assert widths.min() >= 0.8 * 0.1 - 1e-12
    assert widths.max() <= 1.2 * 0.1 + 1e-12
    assert abs(widths.mean() - 0.1) <= 0.01 * 0.1
    _assert_well_formed(s)
    starts = np.array([p.t_on for p in s.pulses])
    periods = np.diff(starts)
    assert np.all(widths < periods)


def test_jitter_impossible_constraint():
    with pytest.raises(ParameterError):
        irregular_schedule((1.0, 0.5, 0.5), JitterSpec(0.0, 0.6, 0.0), 5.0)


def test_jitter_negative_range_rejected():
    with pytest.raises(ParameterError):
        JitterSpec(-0.1)


def test_detuning_boundaries():
    s = regular_schedule(25.0, 0.1, 0.27, 2.7)
    assert detuning_at(s, 0.05) == 25.0
    assert detuning_at(s, 0.1) == 0.0
    assert detuning_at(s, 0.27) == 25.0
    assert np.all(detuning_at(free_schedule(5.0), np.linspace(0, 5, 11)) == 0)
    with pytest.raises(DomainError):
        detuning_at(s, 3.0)
    with pytest.raises(DomainError):
        detuning_at(s, -0.1)


def test_phase_integral_examples():
    assert phase_integral(free_schedule(4.0), 3.0) == 0.0
    c = constant_schedule(25.0, 3.0)
    assert phase_integral(c, 1.7) == pytest.approx(25 * 1.7)
    s = regular_schedule(25.0, 0.243, 0.27, 2.7)
    for n in range(10):
        assert phase_integral(s, n * 0.27) == pytest.approx(n * 25 * 0.243, abs=1e-12)
    assert phase_integral(s, 0.0) == 0.0


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95))
def test_phase_integral_matches_quadrature_of_waveform(seed, eta):
    base = (float(np.random.default_rng(seed).uniform(-10, 30)), 0.27 * eta, 0.27)
    s = irregular_schedule(base, JitterSpec.relative(*base, seed=seed), 3.0)
    _assert_well_formed(s)
    phi = phase_integral(s, np.linspace(0, 3, 7))
    edges = sorted({0.0, 3.0, *[p.t_on for p in s.pulses], *[min(p.t_off, 3.0) for p in s.pulses]})
    for t, ph in zip(np.linspace(0, 3, 7), phi):
        total = sum(quad(lambda x: detuning_at(s, x), a, min(b, t))[0]
                    for a, b in zip(edges[:-1], edges[1:]) if a < t)
        assert ph == pytest.approx(total, abs=1e-10)


def test_phase_nondecreasing_for_positive_amplitudes():
    s = regular_schedule(5.0, 0.3, 1.0, 10.0)
    phi = phase_integral(s, np.linspace(0, 10, 1001))
    assert np.all(np.diff(phi) >= 0)


def test_filter_function_free_sinc():
    T = 3.0
    w = np.array([-7.0, -1.3, 0.5, 2.0, 11.0])
    F = filter_function(free_schedule(T), w)
    assert F == pytest.approx(4 * np.sin(w * T / 2) ** 2 / w**2, rel=1e-12)
    assert filter_function(free_schedule(T), 0.0) == pytest.approx(T**2)


def test_filter_function_full_duty_is_shifted_sinc():
    T, wd = 2.7, 25.0
    s = regular_schedule(wd, 0.27, 0.27, T)
    w = np.array([-30.0, -25.0, -20.0, 0.0, 3.0])
    F = filter_function(s, w)
    k = w + wd
    expect = np.where(k == 0, T**2, 4 * np.sin(k * T / 2) ** 2 / np.where(k == 0, 1, k) ** 2)
    assert F == pytest.approx(expect, rel=1e-10)


def test_filter_function_matches_quadrature():
    s = regular_schedule(25.0, 0.243, 0.27, 2.7)
    edges = sorted({0.0, 2.7, *[p.t_on for p in s.pulses], *[p.t_off for p in s.pulses]})
    for w in (-25.0, -3.0, 0.0, 4.5, 40.0):
        re = im = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            arg = lambda t: w * t + phase_integral(s, t)
            re += quad(lambda t: np.cos(arg(t)), a, b, epsabs=1e-14, epsrel=1e-13)[0]
            im += quad(lambda t: np.sin(arg(t)), a, b, epsabs=1e-14, epsrel=1e-13)[0]
        assert filter_function(s, w) == pytest.approx(re**2 + im**2, rel=1e-8)


@given(st.floats(-100, 100))
def test_filter_function_nonnegative_and_continuous(w):
    s = regular_schedule(25.0, 0.1, 0.27, 2.7)
    F0 = filter_function(s, w)
    assert F0 >= 0
    assert abs(filter_function(s, w + 1e-7) - F0) <= 1e-4 * (1 + F0)


def test_filter_window_validated():
    with pytest.raises(DomainError):
        filter_function(free_schedule(2.0), 1.0, T=3.0)


def test_schedule_rejects_overlap():
    with pytest.raises(ParameterError):
        Schedule((Pulse(0, 1, 1), Pulse(0.5, 1, 1)), 5.0, "explicit")
