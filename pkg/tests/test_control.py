import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obslab.control import (DEFAULT_K, BoundSet, GainVector, adaptive_control, differentiator_control,
                            estimate_bounds, full_state_control, observer_control, phi_observer, saturate,
                            slotine_error_bound)
from obslab.errors import InvalidArgumentError
from obslab.plant import ANGLE_RANGE, DEFAULT_REFERENCE, RATE_RANGE, PendulumParams, pendulum_model
from obslab.simkit import ControllerConfig, EstimatorConfig, Scenario, run_closed_loop
from obslab import config

PLANT = pendulum_model()
G_FLOOR = 0.1 * PLANT.gain_bounds[0]
UNIT_BOUNDS = BoundSet(l_u=50, l_g=1, l_inf=1, l_sup=2, l_1=1, l_h=1, l_B=1)


def oracle_u(x, t, k=(20.0, 10.0)):
    # -K^T e convention, written out by hand
    r = [DEFAULT_REFERENCE.derivative(t, i) for i in range(3)]
    e = [x[0] - r[0], x[1] - r[1]]
    return (-PLANT.drift(np.asarray(x)) + r[2] - k[0] * e[0] - k[1] * e[1]) / PLANT.input_gain(np.asarray(x))


def test_gain_vector_validation():
    with pytest.raises(InvalidArgumentError):
        GainVector((20.0, -1.0))
    with pytest.raises(InvalidArgumentError):
        GainVector(())
    assert DEFAULT_K.decay_rate() == pytest.approx(5 - math.sqrt(5), rel=1e-8)


def test_full_state_zero_on_reference_at_rest():
    # x on the reference with f = 0 and y_d'' = 0 happens at t = 0 with x = (0, 0.1 pi)? f(0, v) = 0
    x = np.array([0.0, 0.1 * math.pi])
    assert PLANT.drift(x) == 0.0
    assert full_state_control(x, 0.0, DEFAULT_K, PLANT).u == 0.0


def test_full_state_thirty_degrees():
    cmd = full_state_control([math.pi / 6, 0.0], 0.0, DEFAULT_K, PLANT)
    assert cmd.u == pytest.approx(oracle_u([math.pi / 6, 0.0], 0.0), rel=1e-13)
    assert not cmd.saturated and not cmd.floored


def test_feedback_term_monotone_in_e1():
    us = [full_state_control([x1, 0.0], 0.0, DEFAULT_K, PLANT).u * PLANT.input_gain(np.array([x1, 0.0]))
          + PLANT.drift(np.array([x1, 0.0])) for x1 in (0.0, 0.05, 0.1)]
    assert us[0] > us[1] > us[2]  # -K^T e decreases, i.e. the K e term increases


def test_adaptive_examples():
    x = np.array([0.0, 0.1 * math.pi])  # e = 0 at t = 0, y_d'' = 0
    assert adaptive_control(0.0, x, 0.0, DEFAULT_K, 1.4).u == 0.0
    assert adaptive_control(3.0, x, 0.0, DEFAULT_K, 1.5).u == pytest.approx(-2.0)


def test_adaptive_matches_full_state_with_true_f(rng):
    for x1, x2, t in zip(rng.uniform(*ANGLE_RANGE, 100), rng.uniform(-2, 2, 100), rng.uniform(0, 10, 100)):
        x = np.array([x1, x2])
        a = adaptive_control(PLANT.drift(x), x, t, DEFAULT_K, PLANT.input_gain(x), g_floor=G_FLOOR)
        assert a.u == pytest.approx(full_state_control(x, t, DEFAULT_K, PLANT).u, abs=1e-10)


def test_differentiator_zero_example():
    xhat = [0.0, 0.1 * math.pi, 1.2 * 0.7]
    assert differentiator_control(xhat, 0.0, DEFAULT_K, 1.2, 0.7).u == pytest.approx(0.0, abs=1e-15)


def test_observer_zero_example():
    assert observer_control([0.0, 0.1 * math.pi, 0.0], 0.0, DEFAULT_K, 1.4).u == 0.0


def test_saturation_flagged():
    cmd = differentiator_control([1.0, 0.0, 0.0], 0.0, DEFAULT_K, 0.2, 0.0)
    assert cmd.saturated and abs(cmd.u) == 50.0


def test_floor_guard():
    x = np.array([math.pi / 2 - 1e-4, 0.0])
    cmd = observer_control([x[0], 0.0, 0.0], 0.0, DEFAULT_K, PLANT.input_gain(x), g_floor=G_FLOOR)
    assert cmd.floored and cmd.g_hat_used == pytest.approx(G_FLOOR)


def test_controller_equivalence_perfect_information(rng):
    for _ in range(1000):
        x = np.array([rng.uniform(*ANGLE_RANGE), rng.uniform(*RATE_RANGE)])
        t, u_prev = rng.uniform(0, 10), rng.uniform(-50, 50)
        f, g = PLANT.drift(x), PLANT.input_gain(x)
        ref_u = full_state_control(x, t, DEFAULT_K, PLANT)
        d = differentiator_control([x[0], x[1], f + g * u_prev], t, DEFAULT_K, g, u_prev, g_floor=G_FLOOR)
        o = observer_control([x[0], x[1], f], t, DEFAULT_K, g, g_floor=G_FLOOR)
        assert abs(d.u - ref_u.u) <= 1e-10 and abs(o.u - ref_u.u) <= 1e-10
        if not ref_u.saturated:
            assert ref_u.u == pytest.approx(oracle_u(x, t), rel=1e-12, abs=1e-12)


@given(st.floats(-1e6, 1e6), st.floats(0.1, 100))
def test_saturation_idempotent(u, l_u):
    once = saturate(u, l_u)
    assert saturate(once, l_u) == once
    assert abs(once) <= l_u


def test_slotine_examples():
    lam = 5 - math.sqrt(5)
    assert slotine_error_bound(0.0, lam, 2, 1) == 0.0
    assert slotine_error_bound(0.1, lam, 2, 1) == pytest.approx(0.1 / lam ** 2, rel=1e-15)
    assert slotine_error_bound(0.1, lam, 2, 1) == pytest.approx(0.01309, abs=1e-5)
    assert slotine_error_bound(0.1, lam, 2, 2) == pytest.approx(0.072362, abs=1e-5)
    with pytest.raises(InvalidArgumentError):
        slotine_error_bound(0.1, lam, 2, 3)


def test_phi_examples():
    x = np.array([0.1, 0.2])
    assert phi_observer(1.0, 1.0, x, x, DEFAULT_K, UNIT_BOUNDS) == 0.0
    assert phi_observer(1.1, 1.0, x, x, DEFAULT_K, UNIT_BOUNDS) == pytest.approx(0.1)
    xhat = x - np.array([0.01, 0.02])
    assert phi_observer(1.0, 1.0, x, xhat, DEFAULT_K, UNIT_BOUNDS) == pytest.approx(
        math.sqrt(0.0005) + 0.2 + 0.2, rel=1e-12)
    assert UNIT_BOUNDS.phi_coefficient(differentiator=True) == 51.0


def test_bound_set_validation():
    with pytest.raises(InvalidArgumentError):
        BoundSet(l_u=50, l_g=1, l_inf=3, l_sup=2, l_1=1, l_h=1, l_B=1)
    with pytest.raises(InvalidArgumentError):
        BoundSet(l_u=50, l_g=0, l_inf=1, l_sup=2, l_1=1, l_h=1, l_B=1)


def test_estimated_bounds_consistent():
    b = estimate_bounds(PendulumParams(), DEFAULT_K)
    lo, hi = PLANT.gain_bounds
    assert b.l_inf == pytest.approx(lo, rel=1e-2) and b.l_sup == pytest.approx(hi, rel=1e-2)
    assert b.g_floor == pytest.approx(0.1 * b.l_inf)


def test_full_state_closed_loop_decay():
    s = Scenario(estimator=EstimatorConfig(kind="none"), controller=ControllerConfig(kind="full_state"), t_end=7.0)
    tr = run_closed_loop(s)
    late = tr.t >= 5.0
    assert np.max(np.abs(tr["e1"][late])) < 1e-3
    assert np.max(np.abs(tr["e2"][late])) < 1e-3


def test_bound_consistency_diagnostic(capsys):
    """Soft check: report whether the logged tail errors respect the phi-based bound."""
    s = config.load_preset("fig5")
    tr = run_closed_loop(s)
    tail = tr.t > 3.0
    phi = float(np.max(tr["phi"][tail]))
    lam = DEFAULT_K.decay_rate()
    assert math.isfinite(phi)
    for i in (1, 2):
        bound = slotine_error_bound(phi, lam, 2, i)
        worst = float(np.max(np.abs(tr[f"e{i}"][tail])))
        print(f"bound diagnostic e{i}: max|e|={worst:.3g} bound={bound:.3g} {'ok' if worst <= bound else 'EXCEEDED'}")
