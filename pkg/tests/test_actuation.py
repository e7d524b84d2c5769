import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from infantsim.actuation import (
    MuscleActuator,
    MuscleControl,
    SpringDamperControl,
    action_cost,
    action_cost_weighted,
    build_muscles,
    build_spring_damper,
    force_length,
    force_velocity,
    muscle_lengths,
    muscle_torque,
    passive_force,
    spring_damper_torque,
    step_activity,
)
from infantsim.bodymodel import loads_body_spec
from infantsim.physics import StepConfig, World

HINGE = """
format 1
model hinge
root_free false

section bodies
body base parent none at 0.0 0.0 1.0 geom box 0.02 0.02 0.02 mass 1.0
body arm parent base at 0.0 0.0 0.0 geom capsule 0.015 0.1 gpos 0.0 0.0 -0.13 mass 0.4

section joints
joint swing parent base child arm axis 0.0 1.0 0.0 rom -90 90 torque -2.0 3.0

section actuators

section skin

section locks
"""


def hinge_world(**cfg):
    return World(loads_body_spec(HINGE), StepConfig(**cfg), ground=False)


def pair(**overrides):
    base = dict(
        joint="j",
        fmax_pos=100.0,
        fmax_neg=100.0,
        vmax_pos=1.0,
        vmax_neg=1.0,
        moment_arm=0.02,
        rom_min=-1.0,
        rom_max=1.0,
        l_lo=0.75,
        l_hi=1.05,
        fl_width=0.45,
        fv_shape=0.25,
        fv_ecc=1.5,
        fp_gain=3.0,
        act_tau=0.010,
        residual=0.05,
        spring_k=0.0,
        damper_b=0.0,
        equilibrium=0.0,
    )
    base.update(overrides)
    return MuscleActuator(**base)


# -- activity dynamics ---------------------------------------------------------


@pytest.mark.parametrize("multiple", [1, 2, 5])
def test_activity_matches_closed_form(multiple):
    tau = 0.010
    dt = 0.005
    steps = int(round(multiple * tau / dt))
    a = 0.0
    for _ in range(steps):
        a = step_activity(a, 1.0, dt, tau)
    assert abs(a - (1.0 - math.exp(-multiple))) < 1e-6


def test_activity_fixed_point():
    assert step_activity(0.4, 0.4, 0.005, 0.010) == pytest.approx(0.4, abs=1e-15)


def test_activity_monotone_decay():
    a = 0.5
    prev = a
    for _ in range(100):
        a = step_activity(a, 0.0, 0.005, 0.010)
        assert a < prev
        prev = a
    assert a >= 0.0


@given(st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=100))
def test_activity_stays_bounded(us):
    a = 0.0
    for u in us:
        a = step_activity(a, u, 0.005, 0.010)
        assert 0.0 <= a <= 1.0


# -- cost functions --------------------------------------------------------------


def test_cost_examples():
    assert action_cost([1.0, 1.0, 1.0]) == 1.0
    assert action_cost([0.0, 0.0]) == 0.0
    assert action_cost([1.0, 0.0]) == 0.5
    assert action_cost_weighted([0.0, 0.0], [2.0, 1.0]) == 0.0


def test_cost_weighting_favors_weak_actuators():
    # same effort costs more on the stronger actuator
    strong = action_cost_weighted([1.0, 0.0], [2.0, 1.0])
    weak = action_cost_weighted([0.0, 1.0], [2.0, 1.0])
    assert strong > weak


@given(
    st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=20),
    st.floats(min_value=0.1, max_value=10.0),
)
def test_equal_weights_reduce_to_plain_cost(us, w):
    weighted = action_cost_weighted(us, [w] * len(us))
    assert abs(weighted - action_cost(us)) < 1e-12


def test_empty_actuator_set_rejected():
    with pytest.raises(ValueError):
        action_cost([])
    with pytest.raises(ValueError):
        action_cost_weighted([], [])


# -- spring-damper motors ----------------------------------------------------------


def test_spring_damper_rest_and_full_throttle():
    w = hinge_world()
    (act,) = build_spring_damper(w)
    assert spring_damper_torque(act, 0.0, act.equilibrium, 0.0) == 0.0
    assert spring_damper_torque(act, 1.0, act.equilibrium, 0.0) == act.t_max_pos == 3.0
    assert spring_damper_torque(act, -1.0, act.equilibrium, 0.0) == act.t_max_neg == -2.0


def test_auto_spring_torque_fraction_at_full_deflection():
    w = hinge_world()
    (act,) = build_spring_damper(w)
    tau = spring_damper_torque(act, 0.0, math.radians(90.0), 0.0)
    assert abs(tau) == pytest.approx(0.10 * 2.0, rel=1e-12)  # a tenth of the weaker side
    assert act.spring_k >= 0.0 and act.damper_b >= 0.0


def test_spring_components_do_not_depend_on_motor_input():
    w = hinge_world()
    ctrl = SpringDamperControl(w)
    w.set_q("swing", 0.3)
    w.set_qd("swing", -1.0)
    ctrl.torques(np.array([0.2]))
    low = (ctrl.last_spring.copy(), ctrl.last_damper.copy())
    ctrl.torques(np.array([0.9]))
    high = (ctrl.last_spring.copy(), ctrl.last_damper.copy())
    assert np.array_equal(low[0], high[0]) and np.array_equal(low[1], high[1])


def test_control_clamped_with_warning():
    w = hinge_world()
    ctrl = SpringDamperControl(w)
    with pytest.warns(UserWarning):
        tau = ctrl.torques(np.array([2.0]))
    assert ctrl.last_u[0] == 1.0
    assert tau[w.joint_order.index("swing")] == pytest.approx(3.0)


# -- muscle curves ------------------------------------------------------------------


def test_force_length_peak():
    assert force_length(1.0, 0.45) == 1.0
    assert force_length(0.8, 0.45) == force_length(1.2, 0.45)
    assert force_length(0.8, 0.45) < 1.0


def test_force_velocity_anchors():
    assert force_velocity(0.0, 1.0, 0.25, 1.5) == 1.0
    assert force_velocity(-1.0, 1.0, 0.25, 1.5) == 0.0
    assert force_velocity(-2.0, 1.0, 0.25, 1.5) == 0.0
    assert force_velocity(50.0, 1.0, 0.25, 1.5) < 1.5


def test_force_velocity_monotone_and_continuous():
    xs = np.linspace(-1.5, 1.5, 301)
    ys = [force_velocity(x, 1.0, 0.25, 1.5) for x in xs]
    assert all(b >= a - 1e-12 for a, b in zip(ys, ys[1:]))
    # slope continuity across zero velocity
    h = 1e-7
    left = (force_velocity(0.0, 1.0, 0.25, 1.5) - force_velocity(-h, 1.0, 0.25, 1.5)) / h
    right = (force_velocity(h, 1.0, 0.25, 1.5) - force_velocity(0.0, 1.0, 0.25, 1.5)) / h
    assert left == pytest.approx(right, rel=1e-4)


def test_passive_force_one_sided():
    assert passive_force(0.9, 3.0) == 0.0
    assert passive_force(1.1, 3.0) == pytest.approx(3.0 * 0.01)


def test_muscle_torque_at_curve_maxima():
    act = pair(residual=0.0)
    span = act.l_hi - act.l_lo
    q_opt = act.rom_min + (act.l_hi - 1.0) / span * (act.rom_max - act.rom_min)
    tau, t_pos, t_neg, t_res = muscle_torque(act, 1.0, 0.0, q_opt, 0.0)
    assert t_pos == pytest.approx(act.moment_arm * act.fmax_pos, rel=1e-12)
    assert tau == pytest.approx(act.moment_arm * act.fmax_pos, rel=1e-9)  # antagonist passive is tiny here
    l_pos, _ = muscle_lengths(act, q_opt)
    assert l_pos == pytest.approx(1.0, abs=1e-12)


def test_antagonistic_symmetry():
    act = pair()
    q_mid = 0.5 * (act.rom_min + act.rom_max)
    for a in (0.0, 0.3, 1.0):
        tau, t_pos, t_neg, _ = muscle_torque(act, a, a, q_mid, 0.0)
        assert tau == pytest.approx(0.0, abs=1e-12)
        assert t_pos == pytest.approx(t_neg, rel=1e-12)
        if a > 0:
            assert t_pos > 0.0


def test_co_contraction_stiffens_joint():
    act = pair()
    q_mid = 0.5 * (act.rom_min + act.rom_max)
    delta = 0.05
    restoring = []
    for a in (0.2, 0.5, 0.8):
        tau, _, _, _ = muscle_torque(act, a, a, q_mid + delta, 0.0)
        assert tau < 0.0  # pushes back toward the hold point
        restoring.append(abs(tau))
    assert restoring[0] < restoring[1] < restoring[2]


def test_muscle_torque_continuous_in_velocity():
    act = pair()
    taus = [muscle_torque(act, 0.6, 0.4, 0.2, qd)[0] for qd in np.linspace(-5.0, 5.0, 201)]
    steps = np.abs(np.diff(taus))
    assert steps.max() < 0.2  # no jumps at the concentric/eccentric switch


# -- controllers on the full body -----------------------------------------------------


def test_controller_dimensions(mitten_spec):
    w = World(mitten_spec)
    sd = SpringDamperControl(w)
    mus = MuscleControl(w)
    assert sd.action_dim == len(w.joint_order) == 44
    assert mus.action_dim == 88
    assert sd.joints == list(w.joint_order)


def test_muscle_step_advances_activity_per_physics_step(mitten_spec):
    w = World(mitten_spec)
    ctrl = MuscleControl(w)
    u = np.zeros(ctrl.action_dim)
    u[0] = 1.0
    ctrl.step(u)
    ctrl.step(u)
    expected = 1.0 - math.exp(-2 * w.config.physics_dt / ctrl.actuators[0].act_tau)
    assert ctrl.activity[0, 0] == pytest.approx(expected, abs=1e-12)
    assert ctrl.activity[0, 1] == 0.0


def test_locked_joint_leaves_action_space(mitten_spec):
    w = World(mitten_spec)
    w.set_joint_locked("right_elbow", 0.0)
    ctrl = SpringDamperControl(w)
    assert ctrl.action_dim == 43
    assert "right_elbow" not in ctrl.joints


def test_muscle_auto_fmax_matches_torque_limits(mitten_spec):
    w = World(mitten_spec)
    for act in build_muscles(w):
        j = mitten_spec.joint(act.joint)
        assert act.fmax_pos == pytest.approx(j.torque_max / act.moment_arm)
        assert act.fmax_neg == pytest.approx(abs(j.torque_min) / act.moment_arm)


def test_springs_return_joints_to_neutral(mitten_spec):
    w = World(mitten_spec, StepConfig(gravity=(0.0, 0.0, 0.0)), ground=False)
    ctrl = SpringDamperControl(w)
    w.set_q("right_elbow", math.radians(-60.0))
    w.set_q("neck_rotation", math.radians(50.0))
    start = {j: abs(w.q(j)) for j in ("right_elbow", "neck_rotation")}
    for _ in range(600):
        ctrl.step(np.zeros(ctrl.action_dim))
    for j, s in start.items():
        assert abs(w.q(j)) < 0.2 * s
