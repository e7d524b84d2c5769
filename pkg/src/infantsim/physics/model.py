"""Tree model construction: body spec -> flat arrays for the dynamics kernels.

The articulated tree is a forest of nodes. Each node carries exactly one
joint (free or hinge). A body connected to its parent by several hinges
becomes a chain of nodes where all but the last are massless phantoms;
a body with no unlocked joint to its parent is merged rigidly into the
parent node (locked hinge rotations are baked into the fixed transform).
Bodies rigidly attached to the world are static: their geoms collide but
never move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..bodymodel import BodySpec, GeomPrimitive
from ..rotations import quat_to_mat, rot_axis_angle, skew

JTYPE_FREE = 0
JTYPE_HINGE = 1

GEOM_SPHERE = 0
GEOM_CAPSULE = 1
GEOM_BOX = 2
GEOM_PLANE = 3
_GEOM_CODE = {"sphere": GEOM_SPHERE, "capsule": GEOM_CAPSULE, "box": GEOM_BOX, "plane": GEOM_PLANE}

DEFAULT_ARMATURE = 1e-4  # kg*m^2 rotor inertia per hinge; regularizes aligned-axis chains


@dataclass(frozen=True)
class FreeBody:
    """An unattached dynamic body (e.g. a ball dropped into the scene)."""

    name: str
    geom: GeomPrimitive
    pos: tuple = (0.0, 0.0, 1.0)
    quat: tuple = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class StaticGeom:
    """A world-fixed collision geom (ground plane, furniture)."""

    name: str
    geom: GeomPrimitive
    pos: tuple = (0.0, 0.0, 0.0)
    quat: tuple = (1.0, 0.0, 0.0, 0.0)


def geom_inertia(geom: GeomPrimitive):
    """Inertia tensor of the solid shape about its own COM, in geom frame."""
    m = geom.mass
    if geom.kind == "sphere":
        (r,) = geom.dims
        i = 0.4 * m * r * r
        return np.diag([i, i, i])
    if geom.kind == "box":
        hx, hy, hz = geom.dims
        return np.diag(
            [
                m / 3.0 * (hy * hy + hz * hz),
                m / 3.0 * (hx * hx + hz * hz),
                m / 3.0 * (hx * hx + hy * hy),
            ]
        )
    if geom.kind == "capsule":
        r, h = geom.dims  # cylinder half-length h, axis z
        v_cyl = math.pi * r * r * 2.0 * h
        v_sph = 4.0 / 3.0 * math.pi * r**3
        m_cyl = m * v_cyl / (v_cyl + v_sph)
        m_sph = m - m_cyl
        m_h = 0.5 * m_sph  # one hemisphere
        izz = 0.5 * m_cyl * r * r + 2.0 * (0.4 * m_h * r * r)
        ixx = m_cyl * (3.0 * r * r + 4.0 * h * h) / 12.0
        ixx += 2.0 * (0.4 * m_h * r * r + m_h * h * h + 0.75 * m_h * h * r)
        return np.diag([ixx, ixx, izz])
    raise ValueError(f"no inertia for geom kind {geom.kind!r}")


def spatial_inertia(mass, com, inertia_about_com):
    """6x6 spatial inertia about the frame origin, motion vectors [w; v]."""
    cx = skew(com)
    out = np.zeros((6, 6))
    out[:3, :3] = inertia_about_com + mass * (cx @ cx.T)
    out[:3, 3:] = mass * cx
    out[3:, :3] = mass * cx.T
    out[3:, 3:] = mass * np.eye(3)
    return out


class _InertiaAccum:
    """Accumulates geom inertias expressed in a common node frame."""

    def __init__(self):
        self.mass = 0.0
        self.m_com = np.zeros(3)
        self.I_origin = np.zeros((3, 3))  # about node origin

    def add(self, geom: GeomPrimitive, R, p):
        """Add a geom whose frame sits at (R, p) in the node frame."""
        g_R = R @ quat_to_mat(geom.quat)
        g_p = p + R @ np.asarray(geom.pos)
        I_com = g_R @ geom_inertia(geom) @ g_R.T
        cx = skew(g_p)
        self.mass += geom.mass
        self.m_com += geom.mass * g_p
        self.I_origin += I_com + geom.mass * (cx @ cx.T)

    def spatial(self):
        if self.mass == 0.0:
            return np.zeros((6, 6))
        com = self.m_com / self.mass
        cx = skew(com)
        I_com = self.I_origin - self.mass * (cx @ cx.T)
        return spatial_inertia(self.mass, com, I_com)


@dataclass
class TreeModel:
    nnode: int
    nq: int
    nv: int
    parent: np.ndarray  # (n,) int32, -1 for roots
    jtype: np.ndarray  # (n,) int32
    qadr: np.ndarray  # (n,) int32
    vadr: np.ndarray  # (n,) int32
    axis: np.ndarray  # (n,3) hinge axis in node frame
    Rtree: np.ndarray  # (n,3,3) node frame in parent frame at q=0
    ptree: np.ndarray  # (n,3)
    Isp: np.ndarray  # (n,6,6) spatial inertia, node frame
    armature: np.ndarray  # (n,)
    node_mass: np.ndarray  # (n,) total mass at the node (contact m_eff)
    rom: np.ndarray  # (n,2) hinge limits, rad (+-inf for free/phantom-free)
    tau_limit: np.ndarray  # (n,2) hinge torque range (min<0<max), 0 for free
    qpos0: np.ndarray  # (nq,)
    # naming and mappings
    node_name: list = field(default_factory=list)  # joint or free-body name per node
    joint_node: dict = field(default_factory=dict)  # joint name -> node index
    joint_order: list = field(default_factory=list)  # unlocked joints, spec order
    free_nodes: dict = field(default_factory=dict)  # free body name -> node index
    body_frame: dict = field(default_factory=dict)  # body -> (node, R_local, p_local)
    locked: dict = field(default_factory=dict)  # joint name -> angle (rad)
    # geoms
    geom_kind: np.ndarray = None  # (g,) int32
    geom_node: np.ndarray = None  # (g,) int32, -1 static
    geom_params: np.ndarray = None  # (g,3)
    geom_R: np.ndarray = None  # (g,3,3) geom in node (or world) frame
    geom_p: np.ndarray = None  # (g,3)
    geom_body: list = field(default_factory=list)
    pairs: np.ndarray = None  # (npair,2) int32 candidate geom pairs

    def joint_qadr(self, name):
        return self.qadr[self.joint_node[name]]

    def joint_vadr(self, name):
        return self.vadr[self.joint_node[name]]


class ModelBuilder:
    def __init__(self, spec: BodySpec | None = None, *, locks=None, root_free=None, armature=DEFAULT_ARMATURE, ground=True):
        self.spec = spec
        self.armature = armature
        self.extra_free = []
        self.statics = []
        if ground:
            self.statics.append(StaticGeom("ground", GeomPrimitive("plane", (), 0.0)))
        self.locks = {}
        self.root_free = False
        if spec is not None:
            self.locks = {name: math.radians(a) for name, a in spec.locked_joints.items()}
            self.root_free = spec.root_free
        if locks is not None:
            self.locks.update({name: float(a) for name, a in locks.items()})
        if root_free is not None:
            self.root_free = root_free

    def add_free_body(self, body: FreeBody):
        self.extra_free.append(body)
        return self

    def add_static_geom(self, geom: StaticGeom):
        self.statics.append(geom)
        return self

    def build(self) -> TreeModel:
        nodes = []  # dicts, one per node
        body_frame = {}
        accums = {}  # node index -> _InertiaAccum
        geoms = []  # (kind, node, params, R, p, body_name)
        qpos0 = []
        q_at = 0
        v_at = 0
        joint_order = []

        def new_node(parent, jtype, axis, Rt, pt, name, rom, tau_lim):
            nonlocal q_at, v_at
            idx = len(nodes)
            nq = 7 if jtype == JTYPE_FREE else 1
            nv = 6 if jtype == JTYPE_FREE else 1
            nodes.append(
                dict(
                    parent=parent,
                    jtype=jtype,
                    qadr=q_at,
                    vadr=v_at,
                    axis=np.asarray(axis, dtype=float),
                    Rtree=np.asarray(Rt, dtype=float),
                    ptree=np.asarray(pt, dtype=float),
                    name=name,
                    rom=rom,
                    tau_lim=tau_lim,
                )
            )
            accums[idx] = _InertiaAccum()
            q_at += nq
            v_at += nv
            return idx

        def add_geom(body_name, geom, node, R, p):
            if geom is None:
                return
            geoms.append((_GEOM_CODE[geom.kind], node, geom, R, p, body_name))

        spec = self.spec
        joint_node = {}
        if spec is not None:
            joints_by_child = {}
            for j in spec.joints:
                joints_by_child.setdefault(j.child, []).append(j)

            # (node, R_local, p_local) of each processed body's frame
            for body in spec.bodies.values():
                R_b = quat_to_mat(body.quat)
                p_b = np.asarray(body.pos, dtype=float)
                if body.parent is None:
                    if self.root_free:
                        idx = new_node(-1, JTYPE_FREE, np.zeros(3), np.eye(3), np.zeros(3), body.name, (-np.inf, np.inf), (0.0, 0.0))
                        qpos0.extend([*body.pos, *body.quat])
                        body_frame[body.name] = (idx, np.eye(3), np.zeros(3))
                    else:
                        body_frame[body.name] = (-1, R_b, p_b)
                    continue

                pnode, R_par, p_par = body_frame[body.parent]
                # attachment of the body in the parent NODE frame
                R_att = R_par @ R_b
                p_att = p_par + R_par @ p_b

                chain = joints_by_child.get(body.name, [])
                R_acc = R_att  # accumulated fixed transform for the next node
                p_acc = p_att
                made = None
                for j in chain:
                    axis_parent = np.asarray(j.axis, dtype=float)
                    axis_node = R_b.T @ axis_parent  # body-frame axis (R_b almost always I)
                    if j.name in self.locks:
                        angle = self.locks[j.name]
                        if not (j.rom_min - 1e-9 <= angle <= j.rom_max + 1e-9):
                            raise ValueError(f"lock angle for joint {j.name!r} outside its range of motion")
                        R_acc = R_acc @ rot_axis_angle(axis_node, angle)
                        continue
                    idx = new_node(
                        made if made is not None else pnode,
                        JTYPE_HINGE,
                        axis_node,
                        R_acc,
                        p_acc,
                        j.name,
                        (j.rom_min, j.rom_max),
                        (j.torque_min, j.torque_max),
                    )
                    joint_node[j.name] = idx
                    joint_order.append(j.name)
                    qpos0.append(0.0)
                    R_acc = np.eye(3)
                    p_acc = np.zeros(3)
                    made = idx

                if made is None:
                    # rigid: merge into the parent node with the locked rotations applied
                    body_frame[body.name] = (pnode, R_acc, p_acc)
                else:
                    body_frame[body.name] = (made, np.eye(3), np.zeros(3))

            for body in spec.bodies.values():
                node, R, p = body_frame[body.name]
                if node >= 0:
                    if body.geom is not None:
                        accums[node].add(body.geom, R, p)
                add_geom(body.name, body.geom, node, R, p)

        for fb in self.extra_free:
            idx = new_node(-1, JTYPE_FREE, np.zeros(3), np.eye(3), np.zeros(3), fb.name, (-np.inf, np.inf), (0.0, 0.0))
            qpos0.extend([*fb.pos, *fb.quat])
            body_frame[fb.name] = (idx, np.eye(3), np.zeros(3))
            accums[idx].add(fb.geom, np.eye(3), np.zeros(3))
            add_geom(fb.name, fb.geom, idx, np.eye(3), np.zeros(3))

        for sg in self.statics:
            R = quat_to_mat(sg.quat)
            p = np.asarray(sg.pos, dtype=float)
            body_frame.setdefault(sg.name, (-1, R, p))
            add_geom(sg.name, sg.geom, -1, R, p)

        n = len(nodes)
        model = TreeModel(
            nnode=n,
            nq=q_at,
            nv=v_at,
            parent=np.array([nd["parent"] for nd in nodes], dtype=np.int32),
            jtype=np.array([nd["jtype"] for nd in nodes], dtype=np.int32),
            qadr=np.array([nd["qadr"] for nd in nodes], dtype=np.int32),
            vadr=np.array([nd["vadr"] for nd in nodes], dtype=np.int32),
            axis=np.array([nd["axis"] for nd in nodes]).reshape(n, 3),
            Rtree=np.array([nd["Rtree"] for nd in nodes]).reshape(n, 3, 3),
            ptree=np.array([nd["ptree"] for nd in nodes]).reshape(n, 3),
            Isp=np.array([accums[i].spatial() for i in range(n)]).reshape(n, 6, 6),
            armature=np.array([self.armature if nd["jtype"] == JTYPE_HINGE else 0.0 for nd in nodes]),
            node_mass=np.array([accums[i].mass for i in range(n)]),
            rom=np.array([nd["rom"] for nd in nodes]).reshape(n, 2),
            tau_limit=np.array([nd["tau_lim"] for nd in nodes]).reshape(n, 2),
            qpos0=np.array(qpos0, dtype=float),
            node_name=[nd["name"] for nd in nodes],
            joint_node=joint_node,
            joint_order=joint_order,
            free_nodes={nd["name"]: i for i, nd in enumerate(nodes) if nd["jtype"] == JTYPE_FREE},
            body_frame=body_frame,
            locked=dict(self.locks),
        )

        model.geom_kind = np.array([g[0] for g in geoms], dtype=np.int32)
        model.geom_node = np.array([g[1] for g in geoms], dtype=np.int32)
        params = np.zeros((len(geoms), 3))
        for i, g in enumerate(geoms):
            dims = g[2].dims
            params[i, : len(dims)] = dims
        model.geom_params = params
        model.geom_R = np.array([g[3] @ quat_to_mat(g[2].quat) for g in geoms]).reshape(len(geoms), 3, 3)
        model.geom_p = np.array([g[4] + g[3] @ np.asarray(g[2].pos) for g in geoms]).reshape(len(geoms), 3)
        model.geom_body = [g[5] for g in geoms]
        model.pairs = self._candidate_pairs(model, spec)
        self._subtree_mass(model)
        return model

    def _candidate_pairs(self, model: TreeModel, spec):
        adjacent = set()
        if spec is not None:
            for body in spec.bodies.values():
                if body.parent is not None:
                    adjacent.add(frozenset((body.name, body.parent)))
        pairs = []
        ng = len(model.geom_body)
        for a in range(ng):
            for b in range(a + 1, ng):
                if model.geom_node[a] == model.geom_node[b] and model.geom_node[a] >= 0:
                    continue
                if model.geom_node[a] < 0 and model.geom_node[b] < 0:
                    continue
                if frozenset((model.geom_body[a], model.geom_body[b])) in adjacent:
                    continue
                ka, kb = model.geom_kind[a], model.geom_kind[b]
                if ka == GEOM_PLANE and kb == GEOM_PLANE:
                    continue
                pairs.append((a, b))
        return np.array(pairs, dtype=np.int32).reshape(-1, 2)

    def _subtree_mass(self, model: TreeModel):
        """Replace node_mass with subtree mass for contact effective mass."""
        sub = model.node_mass.copy()
        for i in reversed(range(model.nnode)):
            p = model.parent[i]
            if p >= 0:
                sub[p] += sub[i]
        # a light geom on a heavy subtree still bounces on its local mass;
        # use the node's own mass but never less than a fraction of the branch
        model.node_mass = np.maximum(model.node_mass, 0.05 * sub)


def build_model(spec=None, **kwargs) -> TreeModel:
    extra = kwargs.pop("free_bodies", ())
    statics = kwargs.pop("static_geoms", ())
    b = ModelBuilder(spec, **kwargs)
    for fb in extra:
        b.add_free_body(fb)
    for sg in statics:
        b.add_static_geom(sg)
    return b.build()
