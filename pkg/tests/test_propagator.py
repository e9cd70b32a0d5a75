import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorentzdd.control import Pulse, Schedule, constant_schedule, free_schedule, regular_schedule
from lorentzdd.errors import ContractError
from lorentzdd.model import PhysicalParams, second_order_coeffs
from lorentzdd.observables import observables
from lorentzdd.propagator import (
    MatchingMode,
    default_grid,
    evaluate,
    initial_state,
    mode_ratios,
    propagate,
    solve_segment,
)

NON_MARKOV = PhysicalParams(Gamma=15.0, gamma_bath=1.0)
MARKOV = PhysicalParams(Gamma=1.0, gamma_bath=15.0)

# Reference values from a 40-digit matrix exponential of the three-variable
# (A1, A2, memory) generator, g = 0.1, T_B = 1.
FROZEN = [
    (NON_MARKOV, 1.0, 0.27603429662063406, 0.78419278182494216,
     0.18584497553238729 - 0.1664664732581545j),
    (NON_MARKOV, 5.0, 0.56993130450879819, 0.51151069836404255,
     -0.084299628511402488 + 0.523196458345664j),
    (NON_MARKOV, 10.0, 0.54103843774088311, 0.54093559999201909, None),
    (MARKOV, 1.0, 0.71599440212661407, 0.35481646996620667, None),
    (MARKOV, 5.0, 0.54224181537275748, 0.53973287348878481, None),
    (MARKOV, 10.0, 0.54098279211129808, 0.54099391471574083, None),
]


@pytest.mark.parametrize("params,t,n1,n2,A1", FROZEN)
def test_free_evolution_matches_high_precision_reference(params, t, n1, n2, A1):
    traj = propagate(params, free_schedule(10.0), np.array([0.0, t]))
    obs = observables(traj, params)
    assert obs.n1[-1] == pytest.approx(n1, abs=1e-11)
    assert obs.n2[-1] == pytest.approx(n2, abs=1e-11)
    if A1 is not None:
        assert abs(traj.A1[-1] - A1) < 1e-11


def test_regular_dd_matches_high_precision_reference():
    s = regular_schedule(25.0, 0.243, 0.27, 2.7)
    traj = propagate(NON_MARKOV, s, np.array([0.0, 2.7]))
    assert abs(traj.A1[-1] - (0.18010142723627834 - 0.35131911601287558j)) < 1e-10
    assert abs(traj.A2[-1] - (-0.75990508665949117 - 0.010162621375117746j)) < 1e-10


def test_segment_reproduces_initial_state():
    c = second_order_coeffs(NON_MARKOV)
    y0 = initial_state(NON_MARKOV)
    seg = solve_segment(c, 0.0, 5.0, y0)
    assert np.max(np.abs(evaluate(seg, 0.0) - y0)) < 1e-10
    assert seg.method == "modal"
    assert abs(seg.constants.sum() - 1) < 1e-10
    assert abs((seg.vectors[:, 1] * seg.constants).sum()) < 1e-10


def test_modal_ratio_identity():
    c = second_order_coeffs(NON_MARKOV, 7.0)
    seg = solve_segment(c, 0.0, 1.0, initial_state(NON_MARKOV, 7.0))
    lam, r = seg.lambdas, seg.vectors[:, 1]
    resid = (lam**2 + c.alpha * lam + c.beta) + c.gamma_cross * r
    assert np.max(np.abs(resid)) <= 1e-9 * (1 + np.max(np.abs(lam)) ** 2)
    assert np.all(lam.real <= 1e-10)


def test_symmetric_ratios_are_plus_minus_one():
    # without the bath the symmetric pair splits into S = A1 + A2 and D = A1 - A2
    p = PhysicalParams(Gamma=0.0, g=0.3)
    c = second_order_coeffs(p)
    lam = np.array([-1.3j, -0.7j])  # omega + g and omega - g
    ratios = mode_ratios(c, lam)
    assert ratios == pytest.approx([1, -1], abs=1e-9)


def test_evaluate_is_linear():
    c = second_order_coeffs(NON_MARKOV)
    y0 = initial_state(NON_MARKOV)
    a = evaluate(solve_segment(c, 0, 3, y0), np.linspace(0, 3, 7))
    b = evaluate(solve_segment(c, 0, 3, 2 * y0), np.linspace(0, 3, 7))
    assert np.max(np.abs(b - 2 * a)) < 1e-12


def test_isolated_oscillator():
    p = PhysicalParams(Gamma=0.0, g=0.0, omega1=1.7)
    grid = np.linspace(0, 10, 51)
    traj = propagate(p, free_schedule(10.0), grid)
    assert np.max(np.abs(traj.A1 - np.exp(-1.7j * grid))) < 1e-12
    assert traj.provenance["segment_methods"] == {"decoupled": 1}


def test_decoupled_direct_coupling_still_uses_bath():
    p = NON_MARKOV.with_(g=0.0)
    grid = np.linspace(0, 5, 11)
    traj = propagate(p, free_schedule(5.0), grid)
    ref = propagate(NON_MARKOV.with_(g=1e-9), free_schedule(5.0), grid)
    assert np.max(np.abs(traj.A1 - ref.A1)) < 1e-6


def test_ten_segment_free_schedule_equals_single_segment():
    T = 20.0
    grid = np.linspace(0, T, 2001)
    pulses = tuple(Pulse(2.0 * k, 1.0, 0.0) for k in range(10))
    split = Schedule(pulses, T, "explicit")
    assert len(split.segments()) == 20
    one = propagate(NON_MARKOV, free_schedule(T), grid)
    for mode in MatchingMode:
        many = propagate(NON_MARKOV, split, grid, matching=mode)
        assert np.max(np.abs(many.A1 - one.A1)) < 1e-9
        assert np.max(np.abs(many.A2 - one.A2)) < 1e-9


def test_full_duty_cycle_equals_constant_detuning():
    grid = np.linspace(0, 2.7, 271)
    reg = propagate(NON_MARKOV, regular_schedule(25.0, 0.27, 0.27, 2.7), grid)
    const = propagate(NON_MARKOV, constant_schedule(25.0, 2.7), grid)
    assert np.max(np.abs(reg.A1 - const.A1)) < 1e-9
    assert np.max(np.abs(reg.A2 - const.A2)) < 1e-9


def test_high_duty_cycle_keeps_excitation_in_the_pair():
    # The shared bath mediates an exchange between the detuned modes, so the
    # exact model moves the excitation into mode 2 while n1 + n2 stays high.
    p = NON_MARKOV
    s = regular_schedule(30.0, 0.98 * 0.27, 0.27, 20.0)
    grid = np.linspace(0, 20, 401)
    obs = observables(propagate(p, s, grid), p)
    assert (obs.n1 + obs.n2).min() > 0.99
    assert obs.n1.min() < 0.2
    printed = observables(propagate(p, s, grid, form="printed"), p)
    assert printed.n1.min() > 0.85


def test_switch_sample_belongs_to_later_segment():
    s = regular_schedule(25.0, 0.1, 0.27, 1.0)
    traj = propagate(NON_MARKOV, s, np.array([0.0, 0.1, 0.27, 0.5]))
    assert list(traj.detuning) == [25.0, 0.0, 25.0, 0.0]


@settings(max_examples=20)
@given(st.floats(0.05, 0.95), st.floats(0.0, 40.0), st.floats(0.0, 0.5))
def test_norm_never_exceeds_one_with_kernel_matching(eta, omega_D, g):
    p = NON_MARKOV.with_(g=g)
    s = regular_schedule(omega_D, eta * 0.27, 0.27, 5.0)
    traj = propagate(p, s, np.linspace(0, 5, 201))
    assert traj.norm.max() <= 1 + 1e-8


def test_derivative_matching_is_not_probability_preserving():
    s = regular_schedule(25.0, 0.243, 0.27, 5.0)
    traj = propagate(NON_MARKOV, s, np.linspace(0, 5, 501), matching="derivative-continuous")
    assert traj.norm.max() > 1.1


def test_mode_swap_symmetry():
    grid = np.linspace(0, 10, 201)
    s = regular_schedule(15.0, 0.2, 0.27, 10.0)
    p = NON_MARKOV.with_(n10=0.7, n20=0.2)
    q = NON_MARKOV.with_(n10=0.2, n20=0.7)
    a = observables(propagate(p, s, grid), p)
    b = observables(propagate(q, s, grid), q)
    assert np.max(np.abs(a.n1 - b.n2)) < 1e-12
    assert np.max(np.abs(a.n2 - b.n1)) < 1e-12


def test_antisymmetric_mode_decouples_from_bath():
    p = NON_MARKOV.with_(g=0.25)
    grid = np.linspace(0, 10, 101)
    traj = propagate(p, free_schedule(10.0), grid)
    D = traj.A1 - traj.A2
    assert np.max(np.abs(D - np.exp(-1j * (p.omega1 - p.g) * grid))) < 1e-8


def test_provenance_records_choices():
    traj = propagate(NON_MARKOV, regular_schedule(25, 0.2, 0.27, 1.0), np.linspace(0, 1, 11))
    prov = traj.provenance
    assert prov["matching"] == "kernel-continuous"
    assert prov["coefficient_form"] == "reduced"
    assert prov["segments"] == 7


def test_grid_contracts():
    with pytest.raises(ContractError):
        propagate(NON_MARKOV, free_schedule(1.0), np.array([0.0, 2.0]))
    with pytest.raises(ContractError):
        propagate(NON_MARKOV, free_schedule(1.0), np.array([0.5, 0.2]))
    with pytest.raises(ContractError):
        default_grid(1.0, 0.3)
    with pytest.raises(ContractError):
        MatchingMode.parse("bogus")
