"""Automated muscle parameter fitting.

Two procedures fill in the free parameters of the muscle model:

* ``calibrate_fmax`` fixes a joint in position, drives one muscle at full
  input until its activity saturates, measures the steady applied torque
  and rescales ``f_max`` until it matches the joint's torque target.
* ``calibrate_vmax`` suspends the body with gravity disabled and runs
  episodes of random bang-bang inputs; each joint's ``v_max`` chases the
  maximum speed it actually reached, with a decaying learning rate.
  Mirror-image joints are averaged afterwards and the whole set is
  rescaled so the knee matches a literature reference velocity.

Results are collected in a ``CalibrationReport`` that can be serialized
to JSON and written back into a body file.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .actuation import MuscleControl, muscle_torque, replace_actuator, step_activity
from .bodymodel import mirror_pairs
from .physics import StepConfig, World

FMAX_TOL = 0.01  # relative torque error accepted as converged
FMAX_MAX_ITERS = 8
SETTLE_TIME = 0.5  # s at full input before measuring (~50 activity time constants)
MEASURE_WINDOW = 0.1  # s averaged for the steady torque
DIVERGENCE_FACTOR = 10.0


class CalibrationError(RuntimeError):
    """Calibration failed to converge or diverged."""


@dataclass(frozen=True)
class CalibrationConfig:
    """Settings for the vmax procedure (fmax needs no configuration)."""

    episodes: int = 20
    episode_length: float = 30.0  # s
    input_hold: float = 2.0  # s between redraws of the bang-bang input
    alpha_0: float = 0.5
    alpha_decay: float = 0.9
    bernoulli_p: float = 0.5
    rng_seed: int = 0
    knee_vmax_reference: float = 12.0  # rad/s, literature peak knee speed
    simultaneous: bool = True  # False: calibrate one joint per episode set

    def __post_init__(self):
        if not 0.0 < self.alpha_0 <= 1.0:
            raise ValueError("alpha_0 must be in (0, 1]")
        if not 0.0 < self.alpha_decay <= 1.0:
            raise ValueError("alpha_decay must be in (0, 1]")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not 0.0 <= self.bernoulli_p <= 1.0:
            raise ValueError("bernoulli_p must be a probability")
        n = self.episode_length / self.input_hold
        if abs(n - round(n)) > 1e-9 or n < 1:
            raise ValueError("input_hold must divide episode_length")


@dataclass
class JointCalibration:
    """Fitted values and measurement history for one joint."""

    joint: str
    fmax_pos: float | None = None  # N
    fmax_neg: float | None = None
    vmax: float | None = None  # rad/s at the joint
    target_torque_pos: float | None = None  # N*m
    achieved_torque_pos: float | None = None
    target_torque_neg: float | None = None
    achieved_torque_neg: float | None = None
    fmax_trace_pos: list = field(default_factory=list)  # (measured, fmax) per iteration
    fmax_trace_neg: list = field(default_factory=list)
    vmax_trace: list = field(default_factory=list)  # v_max per iteration


@dataclass
class CalibrationReport:
    joints: dict = field(default_factory=dict)  # joint name -> JointCalibration
    config: CalibrationConfig | None = None

    def entry(self, joint):
        if joint not in self.joints:
            self.joints[joint] = JointCalibration(joint=joint)
        return self.joints[joint]

    def vmax_values(self):
        return {name: jc.vmax for name, jc in self.joints.items() if jc.vmax is not None}

    def to_dict(self):
        return {
            "config": asdict(self.config) if self.config else None,
            "joints": {name: asdict(jc) for name, jc in self.joints.items()},
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)


# -- fmax -----------------------------------------------------------------------


def _measurement_actuator(spec, joint):
    """Muscle pair used for the fixed-joint torque measurement.

    The joint does not move during the measurement, so the damper (the
    only inertia-dependent parameter) never contributes and no simulation
    world is needed.
    """
    from .actuation import MuscleActuator, _resolve_spring

    j = spec.joint(joint)
    p = spec.actuators.get(joint)
    if p is None or not p.enabled:
        raise CalibrationError(f"joint {joint!r} has no enabled actuator")
    k, b, eq = _resolve_spring(j, p, 0.0, 0.005)
    fmax_pos = p.fmax_pos if p.fmax_pos is not None else j.torque_max / p.moment_arm
    fmax_neg = p.fmax_neg if p.fmax_neg is not None else abs(j.torque_min) / p.moment_arm
    return MuscleActuator(
        joint=joint,
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


def measure_steady_torque(act, side, dt=0.005, settle=SETTLE_TIME, window=MEASURE_WINDOW):
    """Steady torque magnitude with one side at full input, joint fixed mid-range."""
    if side not in ("pos", "neg"):
        raise ValueError("side must be 'pos' or 'neg'")
    q = 0.5 * (act.rom_min + act.rom_max)
    steps = round(settle / dt)
    first = steps - round(window / dt)
    a = 0.0
    total = 0.0
    count = 0
    for s in range(steps):
        a = step_activity(a, 1.0, dt, act.act_tau)
        if s >= first:
            tau, _, _, _ = muscle_torque(act, a if side == "pos" else 0.0, a if side == "neg" else 0.0, q, 0.0)
            total += tau
            count += 1
    signed = total / count
    return signed if side == "pos" else -signed


def _calibrate_fmax_entry(spec, joint, target_torque, side, trace):
    act = _measurement_actuator(spec, joint)
    if target_torque <= 0.0:
        raise CalibrationError(f"joint {joint!r} ({side}) target torque must be positive, got {target_torque}")
    fmax = act.fmax_pos if side == "pos" else act.fmax_neg
    for _ in range(FMAX_MAX_ITERS):
        act = replace(act, **{f"fmax_{side}": fmax})
        measured = measure_steady_torque(act, side)
        trace.append((measured, fmax))
        if measured <= 0.0:
            raise CalibrationError(f"joint {joint!r} ({side}) measured non-positive torque {measured:.4f} N*m")
        scale = target_torque / measured
        if abs(scale - 1.0) < FMAX_TOL:
            return fmax, measured
        fmax *= scale
    raise CalibrationError(
        f"fmax for joint {joint!r} ({side}) did not converge within {FMAX_MAX_ITERS} iterations"
    )


def calibrate_fmax(spec, joint, target_torque, side):
    """Fit one muscle's f_max (N) so its steady fixed-joint torque hits the target."""
    fmax, _ = _calibrate_fmax_entry(spec, joint, target_torque, side, [])
    return fmax


def calibrate_all_fmax(spec, report=None):
    """Run fmax for both sides of every enabled joint; returns a CalibrationReport."""
    report = report or CalibrationReport()
    for j in spec.unlocked_joints():
        p = spec.actuators.get(j.name)
        if p is None or not p.enabled:
            continue
        jc = report.entry(j.name)
        jc.target_torque_pos = j.torque_max
        jc.target_torque_neg = abs(j.torque_min)
        jc.fmax_pos, jc.achieved_torque_pos = _calibrate_fmax_entry(
            spec, j.name, jc.target_torque_pos, "pos", jc.fmax_trace_pos
        )
        jc.fmax_neg, jc.achieved_torque_neg = _calibrate_fmax_entry(
            spec, j.name, jc.target_torque_neg, "neg", jc.fmax_trace_neg
        )
    return report


# -- vmax -----------------------------------------------------------------------


def _bang_bang(rng, n, p):
    return (rng.random((n, 2)) < p).astype(float)


def calibrate_vmax(spec, cfg=None, *, trace=None):
    """Fit per-joint v_max (rad/s) by chasing observed peak speeds.

    The body is suspended (root fixed) with gravity disabled. Each
    episode drives every muscle with Bernoulli inputs redrawn every
    ``input_hold`` seconds (the same seeded program in every episode);
    afterwards v_max moves toward the observed peak joint speed by the
    current learning rate. Mirror pairs are averaged at the end. Pass a
    dict as ``trace`` to receive the per-joint iteration history.
    """
    cfg = cfg or CalibrationConfig()
    world = World(spec, StepConfig(gravity=(0.0, 0.0, 0.0)), ground=False)
    ctrl = MuscleControl(world, spec)
    joints = ctrl.joints
    n = len(joints)
    if n == 0:
        raise CalibrationError("no enabled actuators to calibrate")
    rng = np.random.default_rng(cfg.rng_seed)

    dl = np.array([a.dl_dq for a in ctrl.actuators])
    v = np.array([0.5 * (a.vmax_pos + a.vmax_neg) for a in ctrl.actuators]) / dl
    v_start = v.copy()
    vadr = np.array([world.model.vadr[world.model.joint_node[name]] for name in joints])

    steps = round(cfg.episode_length / world.config.physics_dt)
    hold = round(cfg.input_hold / world.config.physics_dt)
    # one excitation program, replayed every iteration: the observed peak
    # is then a deterministic function of v_max and the fixed-point
    # iteration converges instead of chasing resampling noise
    program = [_bang_bang(rng, n, cfg.bernoulli_p) for _ in range(-(-steps // hold))]

    q_mid = {name: 0.5 * (spec.joint(name).rom_min + spec.joint(name).rom_max) for name in joints}
    groups = [np.arange(n)] if cfg.simultaneous else [np.array([i]) for i in range(n)]
    histories = [[float(v[i])] for i in range(n)]

    for active in groups:
        for it in range(cfg.episodes):
            for i, name in enumerate(joints):
                replace_actuator(ctrl, name, vmax_pos=v[i] * dl[i], vmax_neg=v[i] * dl[i])
            world.reset()
            ctrl.reset()
            for name, q0 in q_mid.items():  # start mid-ROM, clear of both limits
                world.set_q(name, q0)
            v_obs = np.zeros(n)
            u = np.zeros((n, 2))
            for s in range(steps):
                if s % hold == 0:
                    u[:] = 0.0
                    u[active] = program[s // hold][active]
                ctrl.step(u)
                np.maximum(v_obs, np.abs(world.qvel[vadr]), out=v_obs)
            alpha = cfg.alpha_0 * cfg.alpha_decay**it
            v[active] = (1.0 - alpha) * v[active] + alpha * v_obs[active]
            for i in active:
                histories[i].append(float(v[i]))
            if not np.all(np.isfinite(v)):
                raise CalibrationError("vmax diverged to non-finite values")
            runaway = v > DIVERGENCE_FACTOR * v_start
            if np.any(runaway):
                names = [joints[i] for i in np.flatnonzero(runaway)]
                raise CalibrationError(f"vmax grew beyond {DIVERGENCE_FACTOR}x the starting value for {names}")

    values = {name: float(x) for name, x in zip(joints, v)}
    for a, b in mirror_pairs(spec):
        if a in values and b in values:
            m = 0.5 * (values[a] + values[b])
            values[a] = m
            values[b] = m
    if trace is not None:
        for i, name in enumerate(joints):
            trace[name] = histories[i]
    return values


def _base_name(joint):
    for prefix in ("right_", "left_"):
        if joint.startswith(prefix):
            return joint[len(prefix) :]
    return joint


def scale_vmax(values, knee_reference):
    """Rescale all v_max values so the calibrated knee matches the reference.

    Knee entries are set to the reference exactly (mirror averaging has
    already made them equal); everything else is multiplied by
    knee_reference / knee_value so relative ratios are preserved.
    """
    knees = [v for name, v in values.items() if _base_name(name) == "knee"]
    if not knees:
        raise CalibrationError("no knee joint among the calibrated values")
    knee_value = sum(knees) / len(knees)
    if knee_value <= 0.0:
        raise CalibrationError(f"calibrated knee v_max must be positive, got {knee_value}")
    scale = knee_reference / knee_value
    out = {}
    for name, v in values.items():
        out[name] = knee_reference if _base_name(name) == "knee" and v == knee_value else v * scale
    return out


def run_vmax_calibration(spec, cfg=None, report=None):
    """calibrate_vmax + knee reference scaling, recorded into a report."""
    cfg = cfg or CalibrationConfig()
    report = report or CalibrationReport()
    report.config = cfg
    trace = {}
    raw = calibrate_vmax(spec, cfg, trace=trace)
    scaled = scale_vmax(raw, cfg.knee_vmax_reference)
    for name, value in scaled.items():
        jc = report.entry(name)
        jc.vmax = value
        jc.vmax_trace = trace[name]
    return report


# -- write-back -------------------------------------------------------------------


def apply_calibration(spec, report):
    """New BodySpec with the report's fitted parameters filled in.

    v_max values are stored per joint in rad/s and converted to the
    muscle's normalized-length units via the joint's length-angle slope.
    """
    new = copy.deepcopy(spec)
    for name, jc in report.joints.items():
        p = new.actuators.get(name)
        if p is None:
            continue
        changes = {}
        if jc.fmax_pos is not None:
            changes["fmax_pos"] = jc.fmax_pos
        if jc.fmax_neg is not None:
            changes["fmax_neg"] = jc.fmax_neg
        if jc.vmax is not None:
            j = new.joint(name)
            dl = (p.l_hi - p.l_lo) / (j.rom_max - j.rom_min)
            changes["vmax_pos"] = changes["vmax_neg"] = jc.vmax * dl
        if changes:
            new.actuators[name] = replace(p, **changes)
    return new
