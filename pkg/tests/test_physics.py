import math

import numpy as np
import pytest

from infantsim.bodymodel import GeomPrimitive, loads_body_spec
from infantsim.physics import (
    FreeBody,
    SimulationError,
    StaticGeom,
    StepConfig,
    TrajectoryRecorder,
    UnsupportedGeomPair,
    World,
)
from infantsim.physics.kernels import get_backend
from infantsim.physics.model import DEFAULT_ARMATURE

G = 9.81

PENDULUM = """
format 1
model pendulum
root_free false

section bodies
body base parent none at 0.0 0.0 1.0 geom box 0.02 0.02 0.02 mass 1.0
body bob parent base at 0.0 0.0 0.0 geom sphere 0.02 gpos 0.0 0.0 -0.5 mass 1.0

section joints
joint swing parent base child bob axis 0.0 1.0 0.0 rom -180 180 torque -5.0 5.0

section actuators

section skin

section locks
"""


def pendulum_world(dt, q0_deg):
    w = World(loads_body_spec(PENDULUM), StepConfig(physics_dt=dt), ground=False)
    w.set_q("swing", math.radians(q0_deg))
    return w


def ball(name="ball", r=0.05, mass=0.5, pos=(0.0, 0.0, 1.0)):
    return FreeBody(name, GeomPrimitive("sphere", (r,), mass), pos=pos)


# -- ballistic and oscillatory oracles -------------------------------------


def test_free_fall_displacement():
    w = World(None, StepConfig(physics_dt=0.001), free_bodies=[ball(pos=(0.0, 0.0, 10.0))], ground=False)
    for _ in range(1000):
        w.step()
    pos, _ = w.free_body_pose("ball")
    drop = 10.0 - pos[2]
    assert abs(drop - 4.905) / 4.905 < 0.005
    assert pos[0] == 0.0 and pos[1] == 0.0


def test_free_fall_is_gravity_only():
    w = World(None, StepConfig(physics_dt=0.001), free_bodies=[ball()], ground=False)
    w.set_free_body_twist("ball", ang=(1.0, 2.0, 3.0))
    for _ in range(100):
        w.step()
    _, quat = w.free_body_pose("ball")
    assert np.linalg.norm(quat) == pytest.approx(1.0, abs=1e-12)
    v = w.qvel[:3]
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm([1.0, 2.0, 3.0]), rel=1e-12)


def test_pendulum_period_matches_closed_form():
    w = pendulum_world(dt=0.001, q0_deg=5.0)
    ts, qs = [], []
    for _ in range(3000):
        w.step()
        ts.append(w.time)
        qs.append(w.q("swing"))
    crossings = []
    for i in range(1, len(qs)):
        if (qs[i - 1] > 0.0 >= qs[i]) or (qs[i - 1] < 0.0 <= qs[i]):
            crossings.append(ts[i - 1] + (ts[i] - ts[i - 1]) * qs[i - 1] / (qs[i - 1] - qs[i]))
    measured = 2.0 * (crossings[-1] - crossings[0]) / (len(crossings) - 1)
    m, l, r = 1.0, 0.5, 0.02
    inertia = m * l * l + 0.4 * m * r * r + DEFAULT_ARMATURE
    small = 2.0 * math.pi * math.sqrt(inertia / (m * G * l))
    th0 = math.radians(5.0)
    expected = small * (1.0 + th0**2 / 16.0 + 11.0 * th0**4 / 3072.0)
    assert abs(measured - expected) / expected < 0.01


def test_pendulum_energy_drift():
    w = pendulum_world(dt=0.005, q0_deg=60.0)
    e0 = w.mechanical_energy()
    scale = 1.0 * G * 0.5 * (1.0 - math.cos(math.radians(60.0)))
    worst = 0.0
    for _ in range(200):
        w.step()
        worst = max(worst, abs(w.mechanical_energy() - e0))
    assert worst / scale < 0.02


def test_static_energy_reference():
    w = pendulum_world(dt=0.005, q0_deg=0.0)
    # bob hangs 0.5 m under a base at 1.0 m; sphere term is tiny
    assert w.mechanical_energy() == pytest.approx(1.0 * G * 0.5, rel=1e-6)


# -- two independent dynamics routes ----------------------------------------


def random_infant_world(seed, mitten_spec):
    rng = np.random.default_rng(seed)
    w = World(mitten_spec, StepConfig(), root_free=True, ground=False)
    for j in mitten_spec.unlocked_joints():
        w.set_q(j.name, rng.uniform(0.9 * j.rom_min, 0.9 * j.rom_max))
        w.set_qd(j.name, rng.uniform(-2.0, 2.0))
    quat = rng.normal(size=4)
    w.set_free_body_pose("pelvis", pos=rng.uniform(-1.0, 1.0, 3), quat=quat / np.linalg.norm(quat))
    w.set_free_body_twist("pelvis", ang=rng.uniform(-1.0, 1.0, 3), lin=rng.uniform(-1.0, 1.0, 3))
    return w, rng


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_forward_dynamics_matches_mass_matrix_route(seed, mitten_spec):
    w, rng = random_infant_world(seed, mitten_spec)
    m = w.model
    tau = rng.uniform(-2.0, 2.0, m.nv)
    f_ext = rng.uniform(-5.0, 5.0, (m.nnode, 6))
    qacc = w.forward_dynamics(tau, f_ext)

    kern = w.kern
    _, _, v_nd, R_rel, p_rel = w.kin()
    gravity = np.asarray(w.config.gravity)
    M = kern.crba(m.parent, m.jtype, m.vadr, m.axis, m.Isp, m.armature, R_rel, p_rel, m.nv)
    bias = kern.rnea_bias(m.parent, m.jtype, m.vadr, m.axis, m.Isp, R_rel, p_rel, v_nd, f_ext, gravity, m.nv)
    qacc_ref = np.linalg.solve(M, tau - bias)
    assert np.linalg.norm(qacc - qacc_ref) / max(np.linalg.norm(qacc_ref), 1.0) < 1e-8


def test_mass_matrix_properties(mitten_spec):
    w, _ = random_infant_world(7, mitten_spec)
    m = w.model
    kern = w.kern
    _, _, _, R_rel, p_rel = w.kin()
    M = kern.crba(m.parent, m.jtype, m.vadr, m.axis, m.Isp, m.armature, R_rel, p_rel, m.nv)
    assert np.allclose(M, M.T, atol=1e-12)
    eigvals = np.linalg.eigvalsh(M)
    assert eigvals.min() > 0.0


def test_point_velocity_closed_form():
    w = pendulum_world(dt=0.005, q0_deg=30.0)
    w.set_qd("swing", 2.0)
    omega, v = w.body_velocity("bob")
    assert omega == pytest.approx([0.0, 2.0, 0.0], abs=1e-12)
    # bob frame origin sits at the hinge: zero linear velocity there
    assert v == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)
    _, p_hinge = w.body_pose("bob")
    tip = p_hinge + np.array([0.5 * math.sin(math.radians(30.0)), 0.0, -0.5 * math.cos(math.radians(30.0))])
    _, v_tip = w.body_velocity("bob", point_w=tip)
    assert v_tip == pytest.approx(np.cross([0.0, 2.0, 0.0], tip - p_hinge), abs=1e-12)


# -- resting contact force balance -------------------------------------------


def settle(world, seconds):
    reports = []
    for _ in range(int(round(seconds / world.config.physics_dt))):
        reports = world.step()
    return reports


def test_sphere_rests_on_plane():
    w = World(None, free_bodies=[ball(r=0.05, mass=0.5, pos=(0.0, 0.0, 0.05))])
    reports = settle(w, 2.0)
    assert len(reports) == 1
    rep = reports[0]
    assert rep.f_normal == pytest.approx(0.5 * G, rel=0.01)
    assert rep.normal == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)
    assert {rep.body_a, rep.body_b} == {"ball", "ground"}


def test_box_rests_on_face():
    box = FreeBody("crate", GeomPrimitive("box", (0.05, 0.04, 0.03), 1.0), pos=(0.0, 0.0, 0.03))
    w = World(None, free_bodies=[box])
    reports = settle(w, 2.0)
    assert len(reports) >= 3
    total = sum(r.f_normal for r in reports)
    assert total == pytest.approx(1.0 * G, rel=0.01)
    # force centroid under the COM: no net tipping moment
    centroid = sum(r.point * r.f_normal for r in reports) / total
    assert centroid[:2] == pytest.approx([0.0, 0.0], abs=1e-6)


def test_capsule_rests_on_side():
    quat = (math.sqrt(0.5), 0.0, math.sqrt(0.5), 0.0)  # axis z -> x
    cap = FreeBody("tube", GeomPrimitive("capsule", (0.02, 0.05), 0.3), pos=(0.0, 0.0, 0.02), quat=quat)
    w = World(None, free_bodies=[cap])
    reports = settle(w, 2.0)
    assert len(reports) == 2
    assert sum(r.f_normal for r in reports) == pytest.approx(0.3 * G, rel=0.01)


def test_stacked_bodies_force_balance():
    crate = FreeBody("crate", GeomPrimitive("box", (0.06, 0.06, 0.04), 1.0), pos=(0.0, 0.0, 0.04))
    marble = FreeBody("marble", GeomPrimitive("sphere", (0.04,), 0.5), pos=(0.0, 0.0, 0.12))
    w = World(None, free_bodies=[crate, marble])
    reports = settle(w, 3.0)
    on_ground = [r for r in reports if "ground" in (r.body_a, r.body_b)]
    between = [r for r in reports if {r.body_a, r.body_b} == {"crate", "marble"}]
    assert len(between) == 1
    assert sum(r.f_normal for r in on_ground) == pytest.approx(1.5 * G, rel=0.01)
    assert between[0].f_normal == pytest.approx(0.5 * G, rel=0.01)


def test_reports_sorted_and_bounded_friction():
    crate = FreeBody("crate", GeomPrimitive("box", (0.05, 0.05, 0.03), 1.0), pos=(0.0, 0.0, 0.028))
    w = World(None, free_bodies=[crate])
    w.set_free_body_twist("crate", lin=(0.5, 0.0, 0.0))
    for _ in range(200):
        reports = w.step()
        keys = [(r.body_a, r.body_b) for r in reports]
        assert keys == sorted(keys)
        for r in reports:
            assert np.linalg.norm(r.f_tangent) <= w.config.friction * r.f_normal + 1e-9


def test_unsupported_geom_pair_raises():
    a = FreeBody("a", GeomPrimitive("box", (0.05, 0.05, 0.05), 1.0), pos=(0.0, 0.0, 0.05))
    b = FreeBody("b", GeomPrimitive("box", (0.05, 0.05, 0.05), 1.0), pos=(0.0, 0.02, 0.12))
    w = World(None, free_bodies=[a, b])
    with pytest.raises(UnsupportedGeomPair):
        settle(w, 1.0)


def test_static_geom_collides():
    shelf = StaticGeom("shelf", GeomPrimitive("box", (0.2, 0.2, 0.02), 0.0), pos=(0.0, 0.0, 0.5))
    w = World(None, free_bodies=[ball(pos=(0.0, 0.0, 0.60))], static_geoms=[shelf])
    reports = settle(w, 2.0)
    assert any({r.body_a, r.body_b} == {"ball", "shelf"} for r in reports)
    pos, _ = w.free_body_pose("ball")
    assert pos[2] == pytest.approx(0.57, abs=0.005)


# -- joint limits, locks, welds ----------------------------------------------


def test_joint_limit_clamp():
    w = pendulum_world(dt=0.005, q0_deg=0.0)
    lo, hi = math.radians(-180.0), math.radians(180.0)
    for _ in range(2000):
        w.step({"swing": 5.0})
        assert lo <= w.q("swing") <= hi
    assert w.q("swing") == pytest.approx(hi, abs=w.config.limit_margin)
    assert abs(w.qd("swing")) < 0.5


def test_lock_and_unlock(mitten_spec):
    w = World(mitten_spec)
    assert "right_elbow" in w.joint_order
    w.set_joint_locked("right_elbow", -0.5)
    assert "right_elbow" not in w.joint_order
    assert w.model.locked["right_elbow"] == -0.5
    n = len(w.joint_order)
    for _ in range(50):
        w.step(np.zeros(n))
    w.unlock_joint("right_elbow")
    assert "right_elbow" in w.joint_order
    assert w.q("right_elbow") == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        w.set_joint_locked("right_elbow", 1.0)  # outside -146..5 deg
    with pytest.raises(KeyError):
        w.set_joint_locked("no_such_joint", 0.0)


def test_weld_holds_body(mitten_spec):
    w = World(mitten_spec, root_free=True)
    w.add_weld("pelvis")
    _, p0 = w.body_pose("pelvis")
    for _ in range(200):
        w.step()
    _, p1 = w.body_pose("pelvis")
    assert np.linalg.norm(p1 - p0) < 1e-3


# -- error handling and reproducibility ---------------------------------------


def test_torque_vector_length_checked(mitten_spec):
    w = World(mitten_spec)
    with pytest.raises(ValueError):
        w.step(np.zeros(len(w.joint_order) + 1))


def test_non_finite_torque_rejected(mitten_spec):
    w = World(mitten_spec)
    tau = np.zeros(len(w.joint_order))
    tau[0] = math.nan
    with pytest.raises(SimulationError):
        w.step(tau)


def test_set_q_validates_rom(mitten_spec):
    w = World(mitten_spec)
    with pytest.raises(ValueError):
        w.set_q("right_elbow", math.radians(30.0))


def test_determinism_bit_identical(mitten_spec):
    def run():
        w = World(mitten_spec)
        rng = np.random.default_rng(42)
        for _ in range(100):
            w.step(rng.uniform(-0.5, 0.5, len(w.joint_order)))
        return w.qpos.tobytes(), w.qvel.tobytes()

    assert run() == run()


def test_adjacent_bodies_never_collide(mitten_spec):
    w = World(mitten_spec)
    pairs = {frozenset((w.model.geom_body[a], w.model.geom_body[b])) for a, b in w.model.pairs}
    assert frozenset(("right_upper_arm", "right_lower_arm")) not in pairs
    assert frozenset(("pelvis", "torso")) not in pairs


def test_trajectory_recorder(tmp_path):
    w = pendulum_world(dt=0.005, q0_deg=20.0)
    rec = TrajectoryRecorder(w)
    for _ in range(10):
        reports = w.step()
        rec.record(len(reports))
    path = tmp_path / "traj.csv"
    rec.save(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "time,q_swing,qd_swing,contacts"
    assert len(lines) == 11
    assert lines[1].split(",")[0] == "0.005"


# -- narrowphase geometry ------------------------------------------------------


def kern():
    return get_backend()


def I3():
    return np.eye(3)


def test_sphere_sphere_geometry():
    pts = kern().contact_pair(
        0, I3(), np.array([0.0, 0.0, 0.0]), np.array([0.06, 0.0, 0.0]),
        0, I3(), np.array([0.1, 0.0, 0.0]), np.array([0.06, 0.0, 0.0]),
    )
    assert len(pts) == 1
    pos, n, pen = pts[0]
    assert pen == pytest.approx(0.02, abs=1e-12)
    assert n == pytest.approx([-1.0, 0.0, 0.0], abs=1e-12)  # pushes body a away from b
    assert pos == pytest.approx([0.05, 0.0, 0.0], abs=1e-12)


def test_sphere_box_face_geometry():
    pts = kern().contact_pair(
        0, I3(), np.array([0.0, 0.0, 0.14]), np.array([0.05, 0.0, 0.0]),
        2, I3(), np.array([0.0, 0.0, 0.0]), np.array([0.1, 0.1, 0.1]),
    )
    assert len(pts) == 1
    pos, n, pen = pts[0]
    assert pen == pytest.approx(0.01, abs=1e-12)
    assert n == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)
    assert pos == pytest.approx([0.0, 0.0, 0.1], abs=1e-12)


def test_sphere_inside_box_pushed_to_nearest_face():
    pts = kern().contact_pair(
        0, I3(), np.array([0.0, 0.08, 0.0]), np.array([0.02, 0.0, 0.0]),
        2, I3(), np.array([0.0, 0.0, 0.0]), np.array([0.1, 0.1, 0.1]),
    )
    assert len(pts) == 1
    _, n, pen = pts[0]
    assert n == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)
    assert pen == pytest.approx(0.04, abs=1e-12)  # 0.02 depth to face + 0.02 radius


def test_parallel_capsules_geometry():
    pts = kern().contact_pair(
        1, I3(), np.array([0.0, 0.0, 0.0]), np.array([0.02, 0.05, 0.0]),
        1, I3(), np.array([0.03, 0.0, 0.0]), np.array([0.02, 0.05, 0.0]),
    )
    assert len(pts) == 1
    _, n, pen = pts[0]
    assert pen == pytest.approx(0.01, abs=1e-9)
    assert n == pytest.approx([-1.0, 0.0, 0.0], abs=1e-9)


def test_crossed_capsules_geometry():
    R_y = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])  # axis z -> y
    R_x = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])  # axis z -> x
    pts = kern().contact_pair(
        1, R_y, np.array([0.0, 0.0, 0.035]), np.array([0.02, 0.05, 0.0]),
        1, R_x, np.array([0.0, 0.0, 0.0]), np.array([0.02, 0.05, 0.0]),
    )
    assert len(pts) == 1
    pos, n, pen = pts[0]
    assert pen == pytest.approx(0.005, abs=1e-9)
    assert n == pytest.approx([0.0, 0.0, 1.0], abs=1e-9)


def test_capsule_box_face_geometry():
    R_x = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
    pts = kern().contact_pair(
        1, R_x, np.array([0.0, 0.0, 0.115]), np.array([0.02, 0.05, 0.0]),
        2, I3(), np.array([0.0, 0.0, 0.0]), np.array([0.1, 0.1, 0.1]),
    )
    assert len(pts) >= 2  # two support points along the lying capsule
    for _, n, pen in pts:
        assert n == pytest.approx([0.0, 0.0, 1.0], abs=1e-6)
        assert pen == pytest.approx(0.005, abs=1e-5)


def test_capsule_plane_geometry():
    R_x = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])
    pts = kern().contact_pair(
        1, R_x, np.array([0.0, 0.0, 0.015]), np.array([0.02, 0.05, 0.0]),
        3, I3(), np.zeros(3), np.zeros(3),
    )
    assert len(pts) == 2
    xs = sorted(p[0][0] for p in pts)
    assert xs == pytest.approx([-0.05, 0.05], abs=1e-9)
    for _, n, pen in pts:
        assert n == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)
        assert pen == pytest.approx(0.005, abs=1e-12)


def test_box_plane_geometry():
    pts = kern().contact_pair(
        2, I3(), np.array([0.0, 0.0, 0.025]), np.array([0.05, 0.04, 0.03]),
        3, I3(), np.zeros(3), np.zeros(3),
    )
    assert len(pts) == 4
    for _, n, pen in pts:
        assert n == pytest.approx([0.0, 0.0, 1.0], abs=1e-12)
        assert pen == pytest.approx(0.005, abs=1e-12)


def test_separated_geoms_no_contact():
    pts = kern().contact_pair(
        0, I3(), np.array([0.0, 0.0, 1.0]), np.array([0.05, 0.0, 0.0]),
        3, I3(), np.zeros(3), np.zeros(3),
    )
    assert pts == []
