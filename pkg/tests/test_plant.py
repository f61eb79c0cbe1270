import math

import pytest

from sitcontrol.plant import (
    IntegrationBlowupError,
    InvalidStateError,
    ModelParams,
    NOMINAL_PARAMS,
    SimGrid,
    SystemState,
    apply_pulse,
    derivatives,
    integrate,
    persistence_number,
    step_rk4,
    wild_equilibrium,
)

ZERO = SystemState(0.0, 0.0, 0.0, 0.0)


def test_zero_state_is_fixed_point():
    d = derivatives(ZERO, NOMINAL_PARAMS, 0.0)
    assert d == (0.0, 0.0, 0.0, 0.0)


def test_equilibrium_is_stationary():
    eq, extinct = wild_equilibrium(NOMINAL_PARAMS)
    assert not extinct
    d = derivatives(eq, NOMINAL_PARAMS, 0.0)
    for component in d:
        assert abs(component) < 1e-8 * NOMINAL_PARAMS.cap_K


def test_equilibrium_nominal_values():
    # Fixed-point values quoted to the nearest individual.
    eq, _ = wild_equilibrium(NOMINAL_PARAMS)
    assert round(eq.x1) == 21063
    assert round(eq.x2) == 5371
    assert round(eq.x3) == 3290
    assert eq.x4 == 0.0


def test_equilibrium_closed_form_cross_check():
    # Rebuild the steady state from the per-equation balance relations
    # instead of the packaged closed form.
    p = NOMINAL_PARAMS
    eq, _ = wild_equilibrium(p)
    # dx2/dt = 0  and  dx3/dt = 0 at x4 = 0:
    assert eq.x2 == pytest.approx((1 - p.nu) * p.nu_E * eq.x1 / p.delta_M, rel=1e-12)
    assert eq.x3 == pytest.approx(p.nu * p.nu_E * eq.x2 / p.delta_F, rel=1e-12)
    # dx1/dt = 0:
    assert p.beta_E * eq.x3 * (1 - eq.x1 / p.cap_K) == pytest.approx(
        (p.nu_E + p.delta_E) * eq.x1, rel=1e-12)


def test_equilibrium_extinction_regime():
    # beta_E small enough that the persistence ratio exceeds 1.
    weak = ModelParams(beta_E=0.01, cap_K=22200.0, nu_E=0.05, delta_E=0.03,
                       nu=0.49, delta_M=0.1, gamma_S=1.0, delta_F=0.04,
                       delta_S=0.12)
    assert persistence_number(weak) >= 1.0
    eq, extinct = wild_equilibrium(weak)
    assert extinct
    assert eq == ZERO


def test_equilibrium_scales_linearly_with_capacity():
    import dataclasses
    doubled = dataclasses.replace(NOMINAL_PARAMS, cap_K=2 * NOMINAL_PARAMS.cap_K)
    eq1, _ = wild_equilibrium(NOMINAL_PARAMS)
    eq2, _ = wild_equilibrium(doubled)
    assert eq2.x1 == pytest.approx(2 * eq1.x1, rel=1e-12)
    assert eq2.x2 == pytest.approx(2 * eq1.x2, rel=1e-12)
    assert eq2.x3 == pytest.approx(2 * eq1.x3, rel=1e-12)


def test_stationarity_under_random_parameters():
    # 1000 random draws satisfying the persistence condition.
    import random

    rng = random.Random(20260809)
    checked = 0
    while checked < 1000:
        p = ModelParams(
            beta_E=rng.uniform(1.0, 20.0),
            cap_K=rng.uniform(1e3, 1e6),
            nu_E=rng.uniform(0.01, 0.2),
            delta_E=rng.uniform(0.005, 0.1),
            nu=rng.uniform(0.2, 0.8),
            delta_M=rng.uniform(0.02, 0.3),
            gamma_S=rng.uniform(0.0, 3.0),
            delta_F=rng.uniform(0.01, 0.2),
            delta_S=rng.uniform(0.02, 0.3),
        )
        if persistence_number(p) >= 1.0:
            continue
        eq, extinct = wild_equilibrium(p)
        assert not extinct
        for component in derivatives(eq, p, 0.0):
            assert abs(component) < 1e-8 * p.cap_K
        checked += 1


def test_x4_derivative_equals_release_rate_at_zero_stock():
    eq, _ = wild_equilibrium(NOMINAL_PARAMS)
    d = derivatives(eq, NOMINAL_PARAMS, 1e6)
    assert d.x4 == 1e6  # x4 = 0, so -delta_S*x4 contributes nothing


def test_derivatives_rejects_non_finite_input():
    with pytest.raises(InvalidStateError):
        derivatives(SystemState(float("nan"), 0.0, 0.0, 0.0), NOMINAL_PARAMS)
    with pytest.raises(InvalidStateError):
        derivatives(ZERO, NOMINAL_PARAMS, float("inf"))


def test_rk4_linear_decay_matches_exponential():
    # From (0,0,0,1) the model reduces to dx4/dt = -delta_S*x4.
    state = SystemState(0.0, 0.0, 0.0, 1.0)
    for i in range(100):
        state = step_rk4(state, NOMINAL_PARAMS, None, i * 0.01, 0.01)
    assert state.x4 == pytest.approx(math.exp(-0.12), abs=1e-9)
    assert state[:3] == (0.0, 0.0, 0.0)


def test_rk4_zero_state_stays_zero():
    state = step_rk4(ZERO, NOMINAL_PARAMS, None, 0.0, 0.01)
    assert state == ZERO


def test_rk4_step_preserves_equilibrium():
    eq, _ = wild_equilibrium(NOMINAL_PARAMS)
    stepped = step_rk4(eq, NOMINAL_PARAMS, None, 0.0, 0.01)
    for a, b in zip(stepped, eq):
        assert abs(a - b) <= 1e-8 * max(1.0, abs(b))


def test_rk4_is_fourth_order():
    # Exact solution of dx4/dt = -delta_S*x4 over one day; halving h must
    # shrink the error by at least 12x (16x in the asymptotic regime).
    import dataclasses
    p = dataclasses.replace(NOMINAL_PARAMS, delta_S=2.0)
    exact = math.exp(-2.0)

    def error(h):
        s = integrate(SystemState(0.0, 0.0, 0.0, 1.0), p, None, 0.0, 1.0, h)
        return abs(s.x4 - exact)

    assert error(0.25) / error(0.125) >= 12.0


def test_step_rk4_agrees_with_manual_stage_evaluation():
    state = SystemState(15000.0, 4000.0, 2500.0, 1e5)
    h = 0.01
    k1 = derivatives(state, NOMINAL_PARAMS, 0.0)
    k2 = derivatives(SystemState(*(s + 0.5 * h * k for s, k in zip(state, k1))),
                     NOMINAL_PARAMS, 0.0)
    k3 = derivatives(SystemState(*(s + 0.5 * h * k for s, k in zip(state, k2))),
                     NOMINAL_PARAMS, 0.0)
    k4 = derivatives(SystemState(*(s + h * k for s, k in zip(state, k3))),
                     NOMINAL_PARAMS, 0.0)
    manual = SystemState(*(s + h / 6.0 * (a + 2 * (b + c) + d)
                           for s, a, b, c, d in zip(state, k1, k2, k3, k4)))
    assert step_rk4(state, NOMINAL_PARAMS, None, 0.0, h) == manual


def test_integrate_fast_path_matches_step_rk4():
    state = SystemState(15000.0, 4000.0, 2500.0, 1e5)
    fast = integrate(state, NOMINAL_PARAMS, None, 0.0, 2.0, 0.01)
    slow = state
    for i in range(200):
        slow = step_rk4(slow, NOMINAL_PARAMS, None, i * 0.01, 0.01)
    for a, b in zip(fast, slow):
        assert a == pytest.approx(b, rel=1e-12)


def test_integrate_with_release_rate_matches_exact_response():
    # Constant u: x4(t) = (u/delta_S)(1 - exp(-delta_S t)) from x4(0)=0.
    u0 = 1000.0
    s = integrate(SystemState(0.0, 0.0, 0.0, 0.0), NOMINAL_PARAMS,
                  lambda t: u0, 0.0, 5.0, 0.01)
    dS = NOMINAL_PARAMS.delta_S
    assert s.x4 == pytest.approx(u0 / dS * (1 - math.exp(-5 * dS)), rel=1e-9)


def test_pulse_superposition_on_x4():
    # With x1=x2=x3=0 the x4 subsystem is linear: responses to two pulses
    # are additive sample by sample.
    def x4_trace(pulses):
        state = ZERO
        trace = []
        for day in range(10):
            if day in pulses:
                state = apply_pulse(state, pulses[day])
            trace.append(state.x4)
            state = integrate(state, NOMINAL_PARAMS, None, float(day),
                              float(day + 1), 0.01)
        return trace

    a = x4_trace({0: 300.0})
    b = x4_trace({2: 500.0})
    joint = x4_trace({0: 300.0, 2: 500.0})
    for ja, sa, sb in zip(joint, a, b):
        assert ja == pytest.approx(sa + sb, rel=1e-9)


def test_apply_pulse():
    s = apply_pulse(SystemState(1.0, 2.0, 3.0, 0.0), 100.0)
    assert s == (1.0, 2.0, 3.0, 100.0)
    s = apply_pulse(SystemState(1.0, 2.0, 3.0, 50.0), 1e6)
    assert s == (1.0, 2.0, 3.0, 1000050.0)
    assert apply_pulse(s, 0.0) == s
    with pytest.raises(ValueError):
        apply_pulse(s, -1.0)


def test_integration_blowup_is_reported_with_time():
    # delta_S*h = 100 makes the step wildly unstable; x4 overflows fast.
    import dataclasses
    stiff = dataclasses.replace(NOMINAL_PARAMS, delta_S=1e4)
    with pytest.raises(IntegrationBlowupError) as err:
        integrate(SystemState(0.0, 0.0, 0.0, 1e300), stiff, None, 0.0, 10.0, 0.01)
    assert 0.0 < err.value.t <= 10.0


def test_params_validation():
    with pytest.raises(ValueError, match="delta_S"):
        ModelParams(beta_E=10.0, cap_K=22200.0, nu_E=0.05, delta_E=0.03,
                    nu=0.49, delta_M=0.1, gamma_S=1.0, delta_F=0.04,
                    delta_S=-0.12)
    with pytest.raises(ValueError, match="nu"):
        ModelParams(beta_E=10.0, cap_K=22200.0, nu_E=0.05, delta_E=0.03,
                    nu=1.2, delta_M=0.1, gamma_S=1.0, delta_F=0.04,
                    delta_S=0.12)


def test_grid_validation():
    with pytest.raises(ValueError):
        SimGrid(h=-0.01)
    with pytest.raises(ValueError):
        SimGrid(t0=10.0, t_end=5.0)
    with pytest.raises(ValueError):
        SimGrid(h=0.3, sample_every=1.0)  # 1.0/0.3 is not an integer
    g = SimGrid()
    assert g.steps_per_sample == 100
    assert g.n_samples == 400
