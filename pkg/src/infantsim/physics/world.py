"""Simulation world: state, stepping, contacts, welds, locks.

The step pipeline is: forward kinematics -> contact forces -> joint
torques (input + soft limit restoring) -> articulated-body forward
dynamics (or a KKT solve when welds are active) -> semi-implicit Euler
-> hard joint-limit clamp -> finiteness guard.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from ..rotations import mat_to_rotvec, quat_mul, quat_normalize, quat_to_mat
from . import kernels
from .kernels import reference as refk
from .model import GEOM_BOX, GEOM_CAPSULE, GEOM_PLANE, GEOM_SPHERE, JTYPE_FREE, JTYPE_HINGE, TreeModel, build_model


class SimulationError(RuntimeError):
    """Non-finite state or other unrecoverable simulation failure."""


@dataclass(frozen=True)
class StepConfig:
    physics_dt: float = 0.005
    control_every: int = 2  # physics steps per control step
    gravity: tuple = (0.0, 0.0, -9.81)
    contact_stiffness: float = 1e4  # N/m
    contact_damping_ratio: float = 0.7
    friction: float = 1.0
    limit_margin: float = math.radians(5.0)  # soft end-feel zone; capped at 25% of span per joint
    weld_stabilization: float = 50.0  # Baumgarte gain, 1/s

    def __post_init__(self):
        if self.physics_dt <= 0.0:
            raise ValueError("physics_dt must be positive")
        if int(self.control_every) != self.control_every or self.control_every < 1:
            raise ValueError("control_every must be a positive integer")

    @property
    def control_dt(self):
        return self.physics_dt * self.control_every


@dataclass(frozen=True)
class ContactReport:
    body_a: str
    body_b: str
    point: np.ndarray  # world, m
    normal: np.ndarray  # unit, points from body_b into body_a
    f_normal: float  # N, >= 0
    f_tangent: np.ndarray  # (2,) N in the (t1, t2) basis
    t1: np.ndarray
    t2: np.ndarray

    def force_on_a(self):
        return self.normal * self.f_normal + self.t1 * self.f_tangent[0] + self.t2 * self.f_tangent[1]


@dataclass
class Weld:
    body: str
    target_R: np.ndarray
    target_p: np.ndarray


def _cross3(a, b):
    # np.cross carries heavy per-call overhead for single 3-vectors
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def _tangent_basis(n):
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = _cross3(n, a)
    t1 /= np.linalg.norm(t1)
    t2 = _cross3(n, t1)
    return t1, t2


class World:
    def __init__(
        self,
        spec=None,
        config: StepConfig | None = None,
        *,
        locks=None,
        root_free=None,
        free_bodies=(),
        static_geoms=(),
        ground=True,
        backend=None,
    ):
        self.spec = spec
        self.config = config or StepConfig()
        self.kern = kernels.get_backend(backend) if isinstance(backend, (str, type(None))) else backend
        self._build_args = dict(
            locks=locks, root_free=root_free, free_bodies=tuple(free_bodies), static_geoms=tuple(static_geoms), ground=ground
        )
        self.model = self._build(locks)
        self.qpos = self.model.qpos0.copy()
        self.qvel = np.zeros(self.model.nv)
        self.time = 0.0
        self.welds = []
        self.applied_torque = np.zeros(len(self.model.joint_order))
        self._kin = None
        self._hinge_inertia = self._diag_inertia()
        self._limit_table = self._build_limit_table()
        self._passive_table = self._build_passive_table()

    # -- construction -----------------------------------------------------

    def _build(self, locks) -> TreeModel:
        args = dict(self._build_args)
        args["locks"] = locks
        return build_model(
            self.spec,
            locks=args["locks"],
            root_free=args["root_free"],
            free_bodies=args["free_bodies"],
            static_geoms=args["static_geoms"],
            ground=args["ground"],
        )

    def _diag_inertia(self):
        """Subtree inertia about each hinge axis at the build pose.

        Used to scale limit restoring damping and available to actuation
        models for the same purpose.
        """
        m = self.model
        if m.nnode == 0:
            return np.zeros(0)
        R_rel, p_rel = self.kern.joint_transforms(m.parent, m.jtype, m.qadr, m.axis, m.Rtree, m.ptree, m.qpos0)
        M = self.kern.crba(m.parent, m.jtype, m.vadr, m.axis, m.Isp, m.armature, R_rel, p_rel, m.nv)
        out = np.zeros(m.nnode)
        for i in range(m.nnode):
            if m.jtype[i] == JTYPE_HINGE:
                out[i] = M[m.vadr[i], m.vadr[i]]
        return out

    def hinge_inertia(self, joint_name):
        return float(self._hinge_inertia[self.model.joint_node[joint_name]])

    # -- state access -------------------------------------------------------

    @property
    def joint_order(self):
        return self.model.joint_order

    def q(self, joint):
        return float(self.qpos[self.model.joint_qadr(joint)])

    def qd(self, joint):
        return float(self.qvel[self.model.joint_vadr(joint)])

    def set_q(self, joint, value):
        node = self.model.joint_node[joint]
        lo, hi = self.model.rom[node]
        if not (lo - 1e-9 <= value <= hi + 1e-9):
            raise ValueError(f"angle {value} outside range of motion for joint {joint!r}")
        self.qpos[self.model.qadr[node]] = value
        self._kin = None

    def set_qd(self, joint, value):
        self.qvel[self.model.joint_vadr(joint)] = value
        self._kin = None

    def free_body_pose(self, name):
        a = self.model.qadr[self.model.free_nodes[name]]
        return self.qpos[a : a + 3].copy(), self.qpos[a + 3 : a + 7].copy()

    def set_free_body_pose(self, name, pos=None, quat=None):
        a = self.model.qadr[self.model.free_nodes[name]]
        if pos is not None:
            self.qpos[a : a + 3] = pos
        if quat is not None:
            self.qpos[a + 3 : a + 7] = quat_normalize(quat)
        self._kin = None

    def set_free_body_twist(self, name, ang=None, lin=None):
        v = self.model.vadr[self.model.free_nodes[name]]
        if ang is not None:
            self.qvel[v : v + 3] = ang
        if lin is not None:
            self.qvel[v + 3 : v + 6] = lin
        self._kin = None

    def reset(self):
        """Restore the build pose with zero velocity; welds stay in place."""
        self.qpos = self.model.qpos0.copy()
        self.qvel = np.zeros(self.model.nv)
        self.time = 0.0
        self.applied_torque = np.zeros(len(self.model.joint_order))
        self._kin = None

    def kin(self):
        if self._kin is None:
            m = self.model
            self._kin = self.kern.fk(m.parent, m.jtype, m.qadr, m.vadr, m.axis, m.Rtree, m.ptree, self.qpos, self.qvel)
        return self._kin

    def body_pose(self, name):
        node, R_loc, p_loc = self.model.body_frame[name]
        if node < 0:
            return R_loc.copy(), p_loc.copy()
        R_w, p_w, _, _, _ = self.kin()
        return R_w[node] @ R_loc, p_w[node] + R_w[node] @ p_loc

    def body_velocity(self, name, point_w=None):
        """(omega_w, v_w) of a body-fixed point (default: body frame origin)."""
        node, R_loc, p_loc = self.model.body_frame[name]
        if node < 0:
            return np.zeros(3), np.zeros(3)
        R_w, p_w, v_nd, _, _ = self.kin()
        w_w = R_w[node] @ v_nd[node, :3]
        v_o = R_w[node] @ v_nd[node, 3:]
        if point_w is None:
            point_w = p_w[node] + R_w[node] @ p_loc
        return w_w, v_o + np.cross(w_w, point_w - p_w[node])

    def geom_world_poses(self):
        m = self.model
        R_w, p_w, _, _, _ = self.kin()
        nd = np.maximum(m.geom_node, 0)
        Rn = R_w[nd]
        R = Rn @ m.geom_R
        p = p_w[nd] + np.einsum("gij,gj->gi", Rn, m.geom_p)
        static = m.geom_node < 0
        if np.any(static):
            R[static] = m.geom_R[static]
            p[static] = m.geom_p[static]
        return R, p

    def total_mass(self):
        return float(sum(b.geom.mass for b in self.spec.bodies.values() if b.geom)) if self.spec else float(self.model.Isp[:, 3, 3].sum())

    # -- locks ---------------------------------------------------------------

    def set_joint_locked(self, joint, angle):
        """Freeze a joint at the given angle (rad); it leaves the action space."""
        if joint not in {j.name for j in self.spec.joints}:
            raise KeyError(joint)
        j = self.spec.joint(joint)
        if not (j.rom_min - 1e-9 <= angle <= j.rom_max + 1e-9):
            raise ValueError(f"lock angle {angle} outside range of motion for joint {joint!r}")
        locks = dict(self.model.locked)
        locks[joint] = float(angle)
        self._relock(locks)

    def unlock_joint(self, joint, angle=None):
        locks = dict(self.model.locked)
        start = locks.pop(joint, 0.0 if angle is None else angle)
        self._relock(locks)
        self.set_q(joint, start if angle is None else angle)

    def _relock(self, locks):
        saved_q = {name: self.q(name) for name in self.model.joint_order}
        saved_qd = {name: self.qd(name) for name in self.model.joint_order}
        saved_free = {name: (self.free_body_pose(name), self.model.vadr[node]) for name, node in self.model.free_nodes.items()}
        saved_twist = {name: self.qvel[v : v + 6].copy() for name, (pose, v) in saved_free.items()}
        self.model = self._build(locks)
        self.qpos = self.model.qpos0.copy()
        self.qvel = np.zeros(self.model.nv)
        for name in self.model.joint_order:
            if name in saved_q:
                node = self.model.joint_node[name]
                lo, hi = self.model.rom[node]
                self.qpos[self.model.qadr[node]] = min(max(saved_q[name], lo), hi)
                self.qvel[self.model.vadr[node]] = saved_qd[name]
        for name, node in self.model.free_nodes.items():
            if name in saved_free:
                (pos, quat), _ = saved_free[name]
                a = self.model.qadr[node]
                self.qpos[a : a + 3] = pos
                self.qpos[a + 3 : a + 7] = quat
                self.qvel[self.model.vadr[node] : self.model.vadr[node] + 6] = saved_twist[name]
        self.applied_torque = np.zeros(len(self.model.joint_order))
        self._kin = None
        self._hinge_inertia = self._diag_inertia()
        self._limit_table = self._build_limit_table()
        self._passive_table = self._build_passive_table()

    # -- welds ----------------------------------------------------------------

    def add_weld(self, body, target_pose=None):
        """Fix a body's full 6-DoF pose to the world (current pose by default)."""
        node, _, _ = self.model.body_frame[body]
        if node < 0:
            raise ValueError(f"body {body!r} is already static; cannot weld")
        if target_pose is None:
            R, p = self.body_pose(body)
        else:
            R, p = target_pose
        self.welds.append(Weld(body, np.array(R, dtype=float), np.array(p, dtype=float)))

    def clear_welds(self):
        self.welds = []

    # -- contacts ---------------------------------------------------------------

    def _geom_aabbs(self, R, p):
        m = self.model
        ng = len(m.geom_body)
        # half extents per kind: sphere r, capsule |axis|*hl + r, box |R| @ half
        ext = np.empty((ng, 3))
        kind = m.geom_kind
        prm = m.geom_params
        sph = kind == GEOM_SPHERE
        if np.any(sph):
            ext[sph] = prm[sph, 0:1]
        cap = kind == GEOM_CAPSULE
        if np.any(cap):
            ext[cap] = np.abs(R[cap, :, 2]) * prm[cap, 1:2] + prm[cap, 0:1]
        box = kind == GEOM_BOX
        if np.any(box):
            ext[box] = np.einsum("gij,gj->gi", np.abs(R[box]), prm[box])
        pln = kind == GEOM_PLANE
        if np.any(pln):
            ext[pln] = np.inf
        return p - ext, p + ext

    def _contact_points(self):
        m = self.model
        if m.pairs.size == 0:
            return []
        R, p = self.geom_world_poses()
        lo, hi = self._geom_aabbs(R, p)
        a = m.pairs[:, 0]
        b = m.pairs[:, 1]
        hit = np.all(lo[a] <= hi[b], axis=1) & np.all(lo[b] <= hi[a], axis=1)
        out = []
        for ga, gb in m.pairs[hit]:
            pts = self.kern.contact_pair(
                int(m.geom_kind[ga]), R[ga], p[ga], m.geom_params[ga], int(m.geom_kind[gb]), R[gb], p[gb], m.geom_params[gb]
            )
            for pos, n, pen in pts:
                out.append((int(ga), int(gb), pos, n, pen))
        return out

    def _point_velocity(self, node, point_w):
        if node < 0:
            return np.zeros(3)
        R_w, p_w, v_nd, _, _ = self.kin()
        w_w = R_w[node] @ v_nd[node, :3]
        v_o = R_w[node] @ v_nd[node, 3:]
        return v_o + _cross3(w_w, point_w - p_w[node])

    def _contact_forces(self):
        """Narrowphase + penalty forces: (reports, f_ext (n,6) world at node origins)."""
        m = self.model
        cfg = self.config
        dt = cfg.physics_dt
        f_ext = np.zeros((m.nnode, 6))
        reports = []
        pts = self._contact_points()
        if pts:
            _, p_wn, _, _, _ = self.kin()
        # stability budget is per node, so split it across simultaneous contacts
        n_contacts = {}
        for ga, gb, _, _, _ in pts:
            for node in (int(m.geom_node[ga]), int(m.geom_node[gb])):
                if node >= 0:
                    n_contacts[node] = n_contacts.get(node, 0) + 1
        for ga, gb, pos, n, pen in pts:
            node_a = int(m.geom_node[ga])
            node_b = int(m.geom_node[gb])
            ma = m.node_mass[node_a] if node_a >= 0 else np.inf
            mb = m.node_mass[node_b] if node_b >= 0 else np.inf
            m_eff = min(ma, mb) if np.isinf(max(ma, mb)) else ma * mb / (ma + mb)
            share = max(n_contacts.get(node_a, 1), n_contacts.get(node_b, 1))
            k = min(cfg.contact_stiffness, 0.8 * m_eff / (dt * dt * share))
            b_n = min(2.0 * cfg.contact_damping_ratio * math.sqrt(k * m_eff), 0.8 * m_eff / (dt * share))
            rel_v = self._point_velocity(node_a, pos) - self._point_velocity(node_b, pos)
            vn = float(rel_v @ n)
            f_n = k * pen - b_n * vn
            if f_n <= 0.0:
                continue
            vt = rel_v - n * vn
            f_t = -b_n * vt
            ft_mag = float(np.linalg.norm(f_t))
            cap = cfg.friction * f_n
            if ft_mag > cap:
                f_t *= cap / ft_mag
            force_a = n * f_n + f_t
            if node_a >= 0:
                f_ext[node_a, :3] += _cross3(pos - p_wn[node_a], force_a)
                f_ext[node_a, 3:] += force_a
            if node_b >= 0:
                f_ext[node_b, :3] -= _cross3(pos - p_wn[node_b], force_a)
                f_ext[node_b, 3:] -= force_a
            t1, t2 = _tangent_basis(n)
            reports.append(
                ContactReport(
                    body_a=m.geom_body[ga],
                    body_b=m.geom_body[gb],
                    point=pos,
                    normal=n,
                    f_normal=f_n,
                    f_tangent=np.array([float(f_t @ t1), float(f_t @ t2)]),
                    t1=t1,
                    t2=t2,
                )
            )
        reports.sort(key=lambda r: (r.body_a, r.body_b))
        return reports, f_ext

    def detect_contacts(self):
        reports, _ = self._contact_forces()
        return reports

    # -- dynamics ---------------------------------------------------------------

    def _build_limit_table(self):
        """Constant per-joint limit gains, precomputed so stepping stays vector math."""
        m = self.model
        margin = self.config.limit_margin
        dt = self.config.physics_dt
        rows = []
        for i in range(m.nnode):
            if m.jtype[i] != JTYPE_HINGE or not np.isfinite(m.rom[i][0]):
                continue
            inertia = max(self._hinge_inertia[i], 1e-10)
            mrg = min(margin, 0.25 * (m.rom[i][1] - m.rom[i][0]))
            # the spring stays explicit, so cap it inside the stability
            # bound (inertia varies with pose); the hard clamp at the exact
            # boundary is the backstop. The damper is folded into the
            # joint-space inertia by step(), so critical damping is safe
            # and the stop absorbs instead of bouncing.
            k = min(max(abs(m.tau_limit[i, 0]), m.tau_limit[i, 1]) / mrg, 0.25 * inertia / (dt * dt))
            b = 2.0 * math.sqrt(k * inertia)
            rows.append((i, m.qadr[i], m.vadr[i], m.rom[i][0], m.rom[i][1], k, b, mrg))
        if not rows:
            return None
        cols = np.array(rows, dtype=float)
        return {
            "node": cols[:, 0].astype(int),
            "qadr": cols[:, 1].astype(int),
            "vadr": cols[:, 2].astype(int),
            "lo": cols[:, 3],
            "hi": cols[:, 4],
            "k": cols[:, 5],
            "b": cols[:, 6],
            "margin": cols[:, 7],
        }

    def _build_passive_table(self):
        """(vadr, node, b) for joints with passive viscous damping."""
        m = self.model
        rows = [
            (m.vadr[m.joint_node[n]], m.joint_node[n], self.spec.joint(n).damping)
            for n in m.joint_order
            if self.spec.joint(n).damping > 0.0
        ]
        if not rows:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int), np.zeros(0)
        cols = np.array(rows, dtype=float)
        return cols[:, 0].astype(int), cols[:, 1].astype(int), cols[:, 2]

    def _limit_torques(self, tau_nv):
        """Soft one-sided limit forces near the ROM boundary.

        Returns ``(tau, nodes, b)`` where ``nodes``/``b`` list the joints
        whose limit damper is currently engaged (moving into the stop), so
        step() can integrate that damping implicitly.
        """
        t = self._limit_table
        none = np.zeros(0, dtype=int), np.zeros(0)
        if t is None:
            return (tau_nv, *none)
        margin = t["margin"]
        q = self.qpos[t["qadr"]]
        qd = self.qvel[t["vadr"]]
        over = q > t["hi"] - margin
        if np.any(over):
            tau_nv[t["vadr"][over]] += -t["k"][over] * (q[over] - (t["hi"] - margin)[over]) - t["b"][over] * np.maximum(
                qd[over], 0.0
            )
        under = q < t["lo"] + margin
        if np.any(under):
            tau_nv[t["vadr"][under]] += -t["k"][under] * (q[under] - (t["lo"] + margin)[under]) - t["b"][under] * np.minimum(
                qd[under], 0.0
            )
        engaged = (over & (qd > 0.0)) | (under & (qd < 0.0))
        if not np.any(engaged):
            return (tau_nv, *none)
        return tau_nv, t["node"][engaged], t["b"][engaged]

    def _tau_vector(self, torques):
        m = self.model
        tau = np.zeros(m.nv)
        order = m.joint_order
        if torques is None:
            self.applied_torque = np.zeros(len(order))
            return tau
        if isinstance(torques, dict):
            vec = np.zeros(len(order))
            for name, val in torques.items():
                vec[order.index(name)] = val
        else:
            vec = np.asarray(torques, dtype=float)
            if vec.shape != (len(order),):
                raise ValueError(f"expected {len(order)} torques (one per unlocked joint), got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise SimulationError("non-finite input torque")
        self.applied_torque = vec.copy()
        for k, name in enumerate(order):
            tau[m.vadr[m.joint_node[name]]] += vec[k]
        return tau

    def _weld_rows(self, f_ext):
        """(J, rhs) for all welds, or (None, None)."""
        if not self.welds:
            return None, None
        m = self.model
        R_w, p_w, v_nd, R_rel, p_rel = self.kin()
        beta = self.config.weld_stabilization
        rows = []
        rhs = []
        # zero-acceleration sweep for the velocity-product term
        a_nd = np.zeros((m.nnode, 6))
        for i in range(m.nnode):
            par = m.parent[i]
            X = refk._xup(R_rel[i].T, p_rel[i])
            a_prev = X @ a_nd[par] if par >= 0 else np.zeros(6)
            if m.jtype[i] == JTYPE_HINGE:
                vp = X @ (v_nd[par] if par >= 0 else np.zeros(6))
                vJ = v_nd[i] - vp
                a_nd[i] = a_prev + refk._crm(v_nd[i]) @ vJ
            else:
                a_nd[i] = a_prev
        for weld in self.welds:
            node, R_loc, p_loc = self.model.body_frame[weld.body]
            R_b = R_w[node] @ R_loc
            p_b = p_w[node] + R_w[node] @ p_loc
            J = np.zeros((6, m.nv))
            j = node
            while j >= 0:
                if m.jtype[j] == JTYPE_HINGE:
                    a_w = R_w[j] @ m.axis[j]
                    J[:3, m.vadr[j]] = a_w
                    J[3:, m.vadr[j]] = np.cross(a_w, p_b - p_w[j])
                else:
                    for k in range(3):
                        w_k = R_w[j][:, k]
                        J[:3, m.vadr[j] + k] = w_k
                        J[3:, m.vadr[j] + k] = np.cross(w_k, p_b - p_w[j])
                        J[3:, m.vadr[j] + 3 + k] = R_w[j][:, k]
                j = m.parent[j]
            # velocity-product acceleration of the weld point (world frame)
            w_nd = v_nd[node, :3]
            vo_nd = v_nd[node, 3:]
            alpha = a_nd[node, :3]
            a_o_cl = a_nd[node, 3:] + np.cross(w_nd, vo_nd)
            r = p_loc
            a_pt = a_o_cl + np.cross(alpha, r) + np.cross(w_nd, np.cross(w_nd, r))
            jdqd = np.concatenate([R_w[node] @ alpha, R_w[node] @ a_pt])
            w_err, v_err = self.body_velocity(weld.body)
            p_err = p_b - weld.target_p
            r_err = mat_to_rotvec(R_b @ weld.target_R.T)
            err = np.concatenate([r_err, p_err])
            vel = np.concatenate([w_err, v_err])
            rows.append(J)
            rhs.append(-jdqd - 2.0 * beta * vel - beta * beta * err)
        return np.vstack(rows), np.concatenate(rhs)

    def forward_dynamics(self, tau_nv, f_ext, armature=None):
        m = self.model
        armature = m.armature if armature is None else armature
        R_w, p_w, v_nd, R_rel, p_rel = self.kin()
        J, rhs = self._weld_rows(f_ext)
        if J is None:
            return self.kern.aba(
                m.parent, m.jtype, m.vadr, m.axis, m.Isp, armature, R_rel, p_rel, v_nd, tau_nv, f_ext, np.asarray(self.config.gravity)
            )
        M = self.kern.crba(m.parent, m.jtype, m.vadr, m.axis, m.Isp, armature, R_rel, p_rel, m.nv)
        bias = self.kern.rnea_bias(
            m.parent, m.jtype, m.vadr, m.axis, m.Isp, R_rel, p_rel, v_nd, f_ext, np.asarray(self.config.gravity), m.nv
        )
        nc = J.shape[0]
        K = np.zeros((m.nv + nc, m.nv + nc))
        K[: m.nv, : m.nv] = M
        K[: m.nv, m.nv :] = J.T
        K[m.nv :, : m.nv] = J
        K[m.nv :, m.nv :] = -1e-10 * np.eye(nc)  # regularization for redundant constraints
        b = np.concatenate([tau_nv - bias, rhs])
        sol = np.linalg.solve(K, b)
        return sol[: m.nv]

    def step(self, torques=None, joint_damping=None):
        """Advance one physics step; returns this step's contact reports.

        ``joint_damping`` holds per-joint damping coefficients (N*m*s/rad,
        world.joint_order) whose force is already part of ``torques`` at
        the current velocity. They are folded into the joint-space inertia
        so the linearized damping integrates implicitly; without this,
        strong actuator damping (e.g. the muscle force-velocity slope)
        is unstable at practical step sizes. Passive joint damping from
        the body file and the limit-stop damper are handled the same way
        internally.
        """
        m = self.model
        dt = self.config.physics_dt
        reports, f_ext = self._contact_forces()
        tau = self._tau_vector(torques)
        tau, lim_nodes, lim_b = self._limit_torques(tau)
        pd_vadr, pd_nodes, pd_b = self._passive_table
        if pd_vadr.size:
            tau[pd_vadr] -= pd_b * self.qvel[pd_vadr]
        armature = None
        if joint_damping is not None or lim_nodes.size or pd_vadr.size:
            armature = m.armature.copy()
            if joint_damping is not None:
                d = np.asarray(joint_damping, dtype=float)
                if d.shape != (len(m.joint_order),):
                    raise ValueError(f"expected {len(m.joint_order)} damping values, got shape {d.shape}")
                for k, name in enumerate(m.joint_order):
                    armature[m.joint_node[name]] += dt * max(d[k], 0.0)
            if lim_nodes.size:
                armature[lim_nodes] += dt * lim_b
            if pd_vadr.size:
                armature[pd_nodes] += dt * pd_b
        qacc = self.forward_dynamics(tau, f_ext, armature)

        self.qvel += dt * qacc
        for i in range(m.nnode):
            qa, va = m.qadr[i], m.vadr[i]
            if m.jtype[i] == JTYPE_FREE:
                quat = self.qpos[qa + 3 : qa + 7]
                Rwb = quat_to_mat(quat)
                self.qpos[qa : qa + 3] += dt * (Rwb @ self.qvel[va + 3 : va + 6])
                w = self.qvel[va : va + 3]
                angle = np.linalg.norm(w) * dt
                if angle > 1e-12:
                    axis = w / np.linalg.norm(w)
                    half = 0.5 * angle
                    dq = np.array([math.cos(half), *(math.sin(half) * axis)])
                    self.qpos[qa + 3 : qa + 7] = quat_normalize(quat_mul(quat, dq))
            else:
                self.qpos[qa] += dt * self.qvel[va]
                lo, hi = m.rom[i]
                if self.qpos[qa] > hi:
                    self.qpos[qa] = hi
                    if self.qvel[va] > 0.0:
                        self.qvel[va] = 0.0
                elif self.qpos[qa] < lo:
                    self.qpos[qa] = lo
                    if self.qvel[va] < 0.0:
                        self.qvel[va] = 0.0

        self.time += dt
        self._kin = None
        if not (np.all(np.isfinite(self.qpos)) and np.all(np.isfinite(self.qvel))):
            raise SimulationError(f"non-finite state at t={self.time:.4f}s")
        return reports

    # -- diagnostics -------------------------------------------------------------

    def mechanical_energy(self):
        """Kinetic + gravitational potential energy of all dynamic nodes."""
        m = self.model
        R_w, p_w, v_nd, _, _ = self.kin()
        g = np.asarray(self.config.gravity)
        e = 0.0
        for i in range(m.nnode):
            v = v_nd[i]
            e += 0.5 * float(v @ (m.Isp[i] @ v))
            if m.jtype[i] == JTYPE_HINGE:
                e += 0.5 * m.armature[i] * float(self.qvel[m.vadr[i]] ** 2)
            mass = m.Isp[i][3, 3]
            if mass > 0.0:
                S = m.Isp[i][:3, 3:] / mass
                com_local = np.array([S[2, 1], S[0, 2], S[1, 0]])
                com_w = p_w[i] + R_w[i] @ com_local
                e -= mass * float(g @ com_w)
        return e


class TrajectoryRecorder:
    """Per-step CSV dump: time, joint angles, velocities, contact count."""

    def __init__(self, world: World):
        self.world = world
        self.joints = list(world.joint_order)
        self.rows = []

    def record(self, n_contacts):
        w = self.world
        self.rows.append(
            [w.time] + [w.q(j) for j in self.joints] + [w.qd(j) for j in self.joints] + [int(n_contacts)]
        )

    def save(self, path):
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["time"] + [f"q_{j}" for j in self.joints] + [f"qd_{j}" for j in self.joints] + ["contacts"]
            )
            writer.writerows(self.rows)
