"""Joint actuation: spring-damper motors and antagonistic muscle pairs.

Two interchangeable actuation models drive the hinge joints:

* ``SpringDamperControl`` — a direct torque motor per joint plus a passive
  spring-damper that pulls the joint back to its neutral position. One
  control value in [-1, 1] per joint.
* ``MuscleControl`` — two opposing muscles per joint with first-order
  activity dynamics and Hill-type force-length/velocity curves. Two
  control values in [0, 1] per joint (positive-torque side first).

Both models expose their intermediate quantities (component torques,
activities, lengths) so custom effort penalties can be computed, and both
provide the squared-control cost and its strength-weighted variant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

SPRING_TORQUE_FRACTION = 0.10  # spring eats this share of peak torque at full deflection
DAMPING_RATIO = 1.0


@dataclass(frozen=True)
class SpringDamperActuator:
    joint: str
    t_max_pos: float  # N*m
    t_max_neg: float  # N*m, < 0
    spring_k: float  # N*m/rad
    damper_b: float  # N*m*s/rad
    equilibrium: float  # rad


@dataclass(frozen=True)
class MuscleActuator:
    """Antagonistic muscle pair for one hinge.

    The joint angle maps affinely onto normalized muscle lengths: the
    positive-torque muscle spans ``l_hi`` at ``rom_min`` down to ``l_lo``
    at ``rom_max`` (it shortens as the joint angle grows), the opposing
    muscle mirrors this. The map's slope is the constant-moment-arm
    approximation of muscle routing.
    """

    joint: str
    fmax_pos: float  # N
    fmax_neg: float  # N
    vmax_pos: float  # normalized lengths/s
    vmax_neg: float
    moment_arm: float  # m
    rom_min: float  # rad
    rom_max: float
    l_lo: float
    l_hi: float
    fl_width: float
    fv_shape: float
    fv_ecc: float
    fp_gain: float
    act_tau: float  # s
    residual: float  # spring-damper fraction retained for stability
    spring_k: float
    damper_b: float
    equilibrium: float

    @property
    def dl_dq(self):
        return (self.l_hi - self.l_lo) / (self.rom_max - self.rom_min)


# -- torque primitives -------------------------------------------------------


def spring_damper_torque(act: SpringDamperActuator, u, q, qd):
    """tau = u * t_max(sign) - k (q - eq) - b qd, u in [-1, 1]."""
    motor = u * (act.t_max_pos if u >= 0.0 else -act.t_max_neg)
    return motor - act.spring_k * (q - act.equilibrium) - act.damper_b * qd


def step_activity(a, u, dt, tau):
    """Exact solution of da/dt = (u - a)/tau over one step of dt."""
    return u + (a - u) * math.exp(-dt / tau)


def muscle_lengths(act: MuscleActuator, q):
    """(l_pos, l_neg) normalized lengths at joint angle q."""
    frac = (q - act.rom_min) / (act.rom_max - act.rom_min)
    span = act.l_hi - act.l_lo
    return act.l_hi - frac * span, act.l_lo + frac * span


def muscle_velocities(act: MuscleActuator, qd):
    """(ldot_pos, ldot_neg); shortening is negative."""
    return -act.dl_dq * qd, act.dl_dq * qd


def force_length(l, width):
    """Smooth bump peaking at 1 at optimal length l = 1."""
    x = (l - 1.0) / width
    return math.exp(-x * x)


def force_velocity(ldot, vmax, shape, ecc):
    """Hyperbolic force-velocity curve, normalized.

    1 at rest, 0 at the maximum shortening rate (ldot = -vmax), rising
    toward the eccentric plateau ``ecc`` while lengthening. The eccentric
    branch is slope-matched at zero velocity.
    """
    x = ldot / vmax
    if x <= -1.0:
        return 0.0
    if x <= 0.0:
        return (1.0 + x) / (1.0 - x / shape)
    b = (ecc - 1.0) * shape / (shape + 1.0)
    return (1.0 + ecc * x / b) / (1.0 + x / b)


def force_velocity_slope(ldot, vmax, shape, ecc):
    """d force_velocity / d ldot, >= 0 everywhere (both branches)."""
    x = ldot / vmax
    if x <= -1.0:
        return 0.0
    if x <= 0.0:
        return (1.0 + 1.0 / shape) / (1.0 - x / shape) ** 2 / vmax
    b = (ecc - 1.0) * shape / (shape + 1.0)
    return ((ecc - 1.0) / b) / (1.0 + x / b) ** 2 / vmax


def passive_force(l, gain):
    """Passive elastic pull once stretched past optimal length."""
    return gain * max(0.0, l - 1.0) ** 2


def muscle_torque(act: MuscleActuator, a_pos, a_neg, q, qd):
    """Joint torque of the pair plus components.

    Returns ``(tau, tau_pos, tau_neg, tau_residual)`` where ``tau_pos``
    acts in the positive joint direction, ``tau_neg`` in the negative, and
    ``tau = tau_pos - tau_neg + tau_residual``.
    """
    l_pos, l_neg = muscle_lengths(act, q)
    v_pos, v_neg = muscle_velocities(act, qd)
    f_pos = force_length(l_pos, act.fl_width) * force_velocity(v_pos, act.vmax_pos, act.fv_shape, act.fv_ecc) * a_pos
    f_neg = force_length(l_neg, act.fl_width) * force_velocity(v_neg, act.vmax_neg, act.fv_shape, act.fv_ecc) * a_neg
    tau_pos = (f_pos + passive_force(l_pos, act.fp_gain)) * act.moment_arm * act.fmax_pos
    tau_neg = (f_neg + passive_force(l_neg, act.fp_gain)) * act.moment_arm * act.fmax_neg
    tau_res = act.residual * (-act.spring_k * (q - act.equilibrium) - act.damper_b * qd)
    return tau_pos - tau_neg + tau_res, tau_pos, tau_neg, tau_res


def muscle_damping(act: MuscleActuator, a_pos, a_neg, q, qd):
    """-d tau/d qd of the pair at the current state, always >= 0.

    The force-velocity slope is a physical damper strong enough to make
    explicit integration unstable at practical step sizes; integrators
    take this value to fold the damping in implicitly (World.step).
    """
    l_pos, l_neg = muscle_lengths(act, q)
    v_pos, v_neg = muscle_velocities(act, qd)
    dl = act.dl_dq
    s_pos = force_velocity_slope(v_pos, act.vmax_pos, act.fv_shape, act.fv_ecc)
    s_neg = force_velocity_slope(v_neg, act.vmax_neg, act.fv_shape, act.fv_ecc)
    d_pos = force_length(l_pos, act.fl_width) * a_pos * s_pos * act.moment_arm * act.fmax_pos * dl
    d_neg = force_length(l_neg, act.fl_width) * a_neg * s_neg * act.moment_arm * act.fmax_neg * dl
    return d_pos + d_neg + act.residual * act.damper_b


# -- action costs -------------------------------------------------------------


def action_cost(values):
    """Mean squared control effort."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no actuators")
    return float(np.mean(values * values))


def action_cost_weighted(values, weights):
    """Strength-weighted mean squared effort.

    Normalized by the total weight so that equal weights reduce this to
    ``action_cost`` exactly.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0:
        raise ValueError("no actuators")
    return float(np.sum(values * values * weights) / np.sum(weights))


# -- parameter resolution ------------------------------------------------------


def _auto_equilibrium(j):
    if j.rom_min <= 0.0 <= j.rom_max:
        return 0.0
    return 0.5 * (j.rom_min + j.rom_max)


def _resolve_spring(j, p, inertia, dt):
    """(spring_k, damper_b, equilibrium) with auto values filled in."""
    eq = p.equilibrium if p.equilibrium is not None else _auto_equilibrium(j)
    if p.spring_stiffness is not None:
        k = p.spring_stiffness
    else:
        max_defl = max(j.rom_max - eq, eq - j.rom_min)
        k = SPRING_TORQUE_FRACTION * min(abs(j.torque_min), j.torque_max) / max_defl
    if p.spring_damping is not None:
        b = p.spring_damping
    else:
        b = min(2.0 * DAMPING_RATIO * math.sqrt(k * max(inertia, 0.0)), 0.8 * inertia / dt)
    return k, b, eq


def build_spring_damper(world, spec=None):
    """One SpringDamperActuator per enabled, unlocked joint, world order."""
    spec = spec or world.spec
    out = []
    for name in world.joint_order:
        p = spec.actuators.get(name)
        if p is None or not p.enabled:
            continue
        j = spec.joint(name)
        k, b, eq = _resolve_spring(j, p, world.hinge_inertia(name), world.config.physics_dt)
        out.append(
            SpringDamperActuator(
                joint=name, t_max_pos=j.torque_max, t_max_neg=j.torque_min, spring_k=k, damper_b=b, equilibrium=eq
            )
        )
    return out


def build_muscles(world, spec=None):
    """One MuscleActuator (a muscle pair) per enabled, unlocked joint."""
    spec = spec or world.spec
    out = []
    for name in world.joint_order:
        p = spec.actuators.get(name)
        if p is None or not p.enabled:
            continue
        j = spec.joint(name)
        k, b, eq = _resolve_spring(j, p, world.hinge_inertia(name), world.config.physics_dt)
        fmax_pos = p.fmax_pos if p.fmax_pos is not None else j.torque_max / p.moment_arm
        fmax_neg = p.fmax_neg if p.fmax_neg is not None else abs(j.torque_min) / p.moment_arm
        out.append(
            MuscleActuator(
                joint=name,
                fmax_pos=fmax_pos,
                fmax_neg=fmax_neg,
                vmax_pos=p.vmax_pos,
                vmax_neg=p.vmax_neg,
                moment_arm=p.moment_arm,
                rom_min=j.rom_min,
                rom_max=j.rom_max,
                l_lo=p.l_lo,
                l_hi=p.l_hi,
                fl_width=p.fl_width,
                fv_shape=p.fv_shape,
                fv_ecc=p.fv_ecc,
                fp_gain=p.fp_gain,
                act_tau=p.act_tau,
                residual=p.residual,
                spring_k=k,
                damper_b=b,
                equilibrium=eq,
            )
        )
    return out


def _clamped(u, lo, hi, label):
    u = np.asarray(u, dtype=float)
    if np.any(u < lo) or np.any(u > hi):
        warnings.warn(f"{label} control outside [{lo}, {hi}] clamped", stacklevel=3)
        u = np.clip(u, lo, hi)
    return u


# -- controllers ---------------------------------------------------------------


class SpringDamperControl:
    """Maps a control vector in [-1, 1]^n to joint torques, one per joint."""

    def __init__(self, world, spec=None):
        self.world = world
        self.actuators = build_spring_damper(world, spec)
        self.joints = [a.joint for a in self.actuators]
        self._slot = [world.joint_order.index(j) for j in self.joints]
        self.last_motor = np.zeros(len(self.joints))
        self.last_spring = np.zeros(len(self.joints))
        self.last_damper = np.zeros(len(self.joints))
        self.last_u = np.zeros(len(self.joints))
        self.last_damping = np.zeros(len(world.joint_order))

    @property
    def action_dim(self):
        return len(self.actuators)

    def torques(self, u):
        """Full torque vector over world.joint_order for world.step()."""
        u = _clamped(u, -1.0, 1.0, "motor")
        if u.shape != (len(self.actuators),):
            raise ValueError(f"expected {len(self.actuators)} controls, got shape {u.shape}")
        tau = np.zeros(len(self.world.joint_order))
        for i, act in enumerate(self.actuators):
            q = self.world.q(act.joint)
            qd = self.world.qd(act.joint)
            self.last_motor[i] = u[i] * (act.t_max_pos if u[i] >= 0.0 else -act.t_max_neg)
            self.last_spring[i] = -act.spring_k * (q - act.equilibrium)
            self.last_damper[i] = -act.damper_b * qd
            tau[self._slot[i]] = self.last_motor[i] + self.last_spring[i] + self.last_damper[i]
            self.last_damping[self._slot[i]] = act.damper_b
        self.last_u = u.copy()
        return tau

    def step(self, u):
        """One physics step under control u; returns contact reports."""
        return self.world.step(self.torques(u), joint_damping=self.last_damping)

    def cost(self):
        return action_cost(self.last_u)

    def cost_weighted(self):
        weights = [max(a.t_max_pos, -a.t_max_neg) for a in self.actuators]
        return action_cost_weighted(self.last_u, weights)


class MuscleControl:
    """Antagonistic muscle pairs with first-order activity dynamics.

    The action vector holds two values in [0, 1] per joint, ordered
    ``[pos_0, neg_0, pos_1, neg_1, ...]`` following world.joint_order.
    Activities advance by the exact exponential solution once per physics
    step, also when the control is held between control steps.
    """

    def __init__(self, world, spec=None):
        self.world = world
        self.actuators = build_muscles(world, spec)
        self.joints = [a.joint for a in self.actuators]
        self._slot = [world.joint_order.index(j) for j in self.joints]
        n = len(self.actuators)
        self.activity = np.zeros((n, 2))
        self.last_u = np.zeros((n, 2))
        self.last_tau = np.zeros((n, 3))  # pos, neg, residual components
        self.last_damping = np.zeros(len(world.joint_order))

    @property
    def action_dim(self):
        return 2 * len(self.actuators)

    def reset(self, activity=0.0):
        self.activity[:] = activity

    def set_activity(self, joint, pos=None, neg=None):
        i = self.joints.index(joint)
        if pos is not None:
            self.activity[i, 0] = pos
        if neg is not None:
            self.activity[i, 1] = neg

    def advance_activity(self, u, dt):
        u = _clamped(u, 0.0, 1.0, "muscle").reshape(len(self.actuators), 2)
        for i, act in enumerate(self.actuators):
            self.activity[i] = u[i] + (self.activity[i] - u[i]) * math.exp(-dt / act.act_tau)
        self.last_u = u.copy()

    def torques(self):
        """Full torque vector over world.joint_order at current activities."""
        tau = np.zeros(len(self.world.joint_order))
        for i, act in enumerate(self.actuators):
            q = self.world.q(act.joint)
            qd = self.world.qd(act.joint)
            total, t_pos, t_neg, t_res = muscle_torque(act, self.activity[i, 0], self.activity[i, 1], q, qd)
            self.last_tau[i] = (t_pos, t_neg, t_res)
            tau[self._slot[i]] = total
            self.last_damping[self._slot[i]] = muscle_damping(act, self.activity[i, 0], self.activity[i, 1], q, qd)
        return tau

    def step(self, u):
        """One physics step under control u; returns contact reports."""
        self.advance_activity(u, self.world.config.physics_dt)
        return self.world.step(self.torques(), joint_damping=self.last_damping)

    def lengths(self):
        return np.array([muscle_lengths(a, self.world.q(a.joint)) for a in self.actuators])

    def velocities(self):
        return np.array([muscle_velocities(a, self.world.qd(a.joint)) for a in self.actuators])

    def cost(self):
        return action_cost(self.activity)

    def cost_weighted(self):
        weights = np.array([(a.fmax_pos, a.fmax_neg) for a in self.actuators])
        return action_cost_weighted(self.activity, weights)


def replace_actuator(controller, joint, **changes):
    """Swap in updated parameters for one joint (used by calibration)."""
    i = controller.joints.index(joint)
    controller.actuators[i] = replace(controller.actuators[i], **changes)
    return controller.actuators[i]
