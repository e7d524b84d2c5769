"""Pure-Python dynamics kernels (numpy reference implementation).

Every function here has a matching compiled twin in ``_core.pyx``; the
package selects one backend at import (see ``kernels/__init__``). All
kernels operate on the flat arrays of a TreeModel plus state vectors, so
both backends stay drop-in interchangeable.

Spatial vectors are ordered [angular; linear]. Per-node quantities live
in each node's own frame; world-frame results are marked ``_w``.
"""

from __future__ import annotations

import math

import numpy as np

JTYPE_FREE = 0
JTYPE_HINGE = 1

GEOM_SPHERE = 0
GEOM_CAPSULE = 1
GEOM_BOX = 2
GEOM_PLANE = 3


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _quat_to_mat(q):
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _rot_axis_angle(axis, angle):
    c, s = math.cos(angle), math.sin(angle)
    ax = _skew(axis)
    return np.eye(3) * c + (1.0 - c) * np.outer(axis, axis) + s * ax


def _crm(v):
    out = np.zeros((6, 6))
    wx = _skew(v[:3])
    out[:3, :3] = wx
    out[3:, 3:] = wx
    out[3:, :3] = _skew(v[3:])
    return out


def _crf(v):
    return -_crm(v).T


def _xup(E, r):
    """Plücker motion transform for a child frame at (E = R_rel^T, r) in parent."""
    X = np.zeros((6, 6))
    X[:3, :3] = E
    X[3:, 3:] = E
    X[3:, :3] = -E @ _skew(r)
    return X


def joint_transforms(parent, jtype, qadr, axis, Rtree, ptree, qpos):
    """Per-node (R_rel, p_rel): node frame in parent (or world) frame."""
    n = len(parent)
    R_rel = np.empty((n, 3, 3))
    p_rel = np.empty((n, 3))
    for i in range(n):
        if jtype[i] == JTYPE_FREE:
            a = qadr[i]
            R_rel[i] = _quat_to_mat(qpos[a + 3 : a + 7])
            p_rel[i] = qpos[a : a + 3]
        else:
            R_rel[i] = Rtree[i] @ _rot_axis_angle(axis[i], qpos[qadr[i]])
            p_rel[i] = ptree[i]
    return R_rel, p_rel


def fk(parent, jtype, qadr, vadr, axis, Rtree, ptree, qpos, qvel):
    """Forward kinematics and velocities.

    Returns (R_w, p_w, v_nd, R_rel, p_rel): world pose per node and the
    spatial velocity of each node in its own frame.
    """
    n = len(parent)
    R_rel, p_rel = joint_transforms(parent, jtype, qadr, axis, Rtree, ptree, qpos)
    R_w = np.empty((n, 3, 3))
    p_w = np.empty((n, 3))
    v_nd = np.zeros((n, 6))
    for i in range(n):
        p = parent[i]
        if p < 0:
            R_w[i] = R_rel[i]
            p_w[i] = p_rel[i]
        else:
            R_w[i] = R_w[p] @ R_rel[i]
            p_w[i] = p_w[p] + R_w[p] @ p_rel[i]
        E = R_rel[i].T
        if p >= 0:
            vp = v_nd[p]
            w = E @ vp[:3]
            v_nd[i, :3] = w
            v_nd[i, 3:] = E @ (vp[3:] + np.cross(vp[:3], p_rel[i]))
        if jtype[i] == JTYPE_FREE:
            v_nd[i] += qvel[vadr[i] : vadr[i] + 6]
        else:
            v_nd[i, :3] += axis[i] * qvel[vadr[i]]
    return R_w, p_w, v_nd, R_rel, p_rel


def aba(parent, jtype, vadr, axis, Isp, armature, R_rel, p_rel, v_nd, tau, f_ext, gravity):
    """Articulated-body forward dynamics -> qacc (nv,).

    tau is indexed by vadr. f_ext is (n,6), world-aligned spatial force
    anchored at each node origin. Gravity enters as a base acceleration.
    """
    n = len(parent)
    nv = len(tau)
    Xup = np.empty((n, 6, 6))
    c = np.zeros((n, 6))
    IA = Isp.copy()
    pA = np.empty((n, 6))
    R_w = np.empty((n, 3, 3))

    for i in range(n):
        p = parent[i]
        E = R_rel[i].T
        Xup[i] = _xup(E, p_rel[i])
        R_w[i] = R_rel[i] if p < 0 else R_w[p] @ R_rel[i]
        if jtype[i] == JTYPE_HINGE:
            vp = Xup[i] @ (v_nd[p] if p >= 0 else np.zeros(6))
            vJ = v_nd[i] - vp
            c[i] = _crm(v_nd[i]) @ vJ
        f = np.zeros(6)
        f[:3] = R_w[i].T @ f_ext[i, :3]
        f[3:] = R_w[i].T @ f_ext[i, 3:]
        pA[i] = _crf(v_nd[i]) @ (Isp[i] @ v_nd[i]) - f

    # free joints only occur at roots in this model family, so the inward
    # sweep only ever eliminates hinge DoFs
    U = np.zeros((n, 6))
    d = np.zeros(n)
    u = np.zeros(n)
    for i in range(n - 1, -1, -1):
        p = parent[i]
        if jtype[i] == JTYPE_HINGE:
            S = np.zeros(6)
            S[:3] = axis[i]
            U[i] = IA[i] @ S
            d[i] = S @ U[i] + armature[i]
            u[i] = tau[vadr[i]] - S @ pA[i]
            if p >= 0:
                Ia = IA[i] - np.outer(U[i], U[i]) / d[i]
                pa = pA[i] + Ia @ c[i] + U[i] * (u[i] / d[i])
                IA[p] += Xup[i].T @ Ia @ Xup[i]
                pA[p] += Xup[i].T @ pa

    qacc = np.zeros(nv)
    a = np.zeros((n, 6))
    a_base = np.zeros(6)
    a_base[3:] = -np.asarray(gravity)
    for i in range(n):
        p = parent[i]
        if p < 0:
            a_prev = Xup[i] @ a_base
        else:
            a_prev = Xup[i] @ a[p]
        if jtype[i] == JTYPE_HINGE:
            S = np.zeros(6)
            S[:3] = axis[i]
            a_prev = a_prev + c[i]
            qdd = (u[i] - U[i] @ a_prev) / d[i]
            qacc[vadr[i]] = qdd
            a[i] = a_prev + S * qdd
        else:
            rhs = tau[vadr[i] : vadr[i] + 6] - pA[i] - IA[i] @ a_prev
            qdd6 = np.linalg.solve(IA[i], rhs)
            qacc[vadr[i] : vadr[i] + 6] = qdd6
            a[i] = a_prev + qdd6
    return qacc


def rnea_bias(parent, jtype, vadr, axis, Isp, R_rel, p_rel, v_nd, f_ext, gravity, nv):
    """Inverse dynamics at zero acceleration -> bias (nv,).

    M(q)·qacc + bias = tau, with gravity and external forces folded into
    bias (same conventions as aba).
    """
    n = len(parent)
    Xup = np.empty((n, 6, 6))
    a = np.zeros((n, 6))
    f = np.zeros((n, 6))
    R_w = np.empty((n, 3, 3))
    a_base = np.zeros(6)
    a_base[3:] = -np.asarray(gravity)

    for i in range(n):
        p = parent[i]
        E = R_rel[i].T
        Xup[i] = _xup(E, p_rel[i])
        R_w[i] = R_rel[i] if p < 0 else R_w[p] @ R_rel[i]
        a_prev = Xup[i] @ (a[p] if p >= 0 else a_base)
        if jtype[i] == JTYPE_HINGE:
            vp = Xup[i] @ (v_nd[p] if p >= 0 else np.zeros(6))
            vJ = v_nd[i] - vp
            a[i] = a_prev + _crm(v_nd[i]) @ vJ
        else:
            a[i] = a_prev
        fx = np.zeros(6)
        fx[:3] = R_w[i].T @ f_ext[i, :3]
        fx[3:] = R_w[i].T @ f_ext[i, 3:]
        f[i] = Isp[i] @ a[i] + _crf(v_nd[i]) @ (Isp[i] @ v_nd[i]) - fx

    bias = np.zeros(nv)
    for i in range(n - 1, -1, -1):
        p = parent[i]
        if jtype[i] == JTYPE_HINGE:
            bias[vadr[i]] = axis[i] @ f[i, :3]
        else:
            bias[vadr[i] : vadr[i] + 6] = f[i]
        if p >= 0:
            f[p] += Xup[i].T @ f[i]
    return bias


def crba(parent, jtype, vadr, axis, Isp, armature, R_rel, p_rel, nv):
    """Composite rigid-body mass matrix M (nv, nv), symmetric PD."""
    n = len(parent)
    Xup = np.empty((n, 6, 6))
    for i in range(n):
        Xup[i] = _xup(R_rel[i].T, p_rel[i])
    Ic = Isp.copy()
    M = np.zeros((nv, nv))
    for i in range(n - 1, -1, -1):
        p = parent[i]
        if p >= 0:
            Ic[p] += Xup[i].T @ Ic[i] @ Xup[i]
    for i in range(n):
        if jtype[i] == JTYPE_HINGE:
            S = np.zeros(6)
            S[:3] = axis[i]
            F = Ic[i] @ S
            M[vadr[i], vadr[i]] = S @ F + armature[i]
            F = Xup[i].T @ F
            j = parent[i]
            while j >= 0:
                if jtype[j] == JTYPE_HINGE:
                    Sj = np.zeros(6)
                    Sj[:3] = axis[j]
                    M[vadr[i], vadr[j]] = F @ Sj
                    M[vadr[j], vadr[i]] = M[vadr[i], vadr[j]]
                else:
                    M[vadr[i], vadr[j] : vadr[j] + 6] = F
                    M[vadr[j] : vadr[j] + 6, vadr[i]] = F
                F = Xup[j].T @ F
                j = parent[j]
        else:
            M[vadr[i] : vadr[i] + 6, vadr[i] : vadr[i] + 6] = Ic[i]
    return M


# ---------------------------------------------------------------------------
# Contact narrowphase. Each helper returns a list of
# (pos_w, normal_w (b->a), penetration) tuples for one geom pair.


def _seg_closest_point(p, a, b):
    ab = b - a
    t = float(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300))
    t = min(1.0, max(0.0, t))
    return a + t * ab


def _seg_seg_closest(p1, q1, p2, q2):
    """Closest points between segments [p1,q1] and [p2,q2] (Ericson)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    eps = 1e-12
    if a <= eps and e <= eps:
        return p1, p2
    if a <= eps:
        t = min(1.0, max(0.0, f / e))
        return p1, p2 + t * d2
    c = float(d1 @ r)
    if e <= eps:
        s = min(1.0, max(0.0, -c / a))
        return p1 + s * d1, p2
    b = float(d1 @ d2)
    denom = a * e - b * b
    s = min(1.0, max(0.0, (b * f - c * e) / denom)) if denom > eps else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(1.0, max(0.0, -c / a))
    elif t > 1.0:
        t = 1.0
        s = min(1.0, max(0.0, (b - c) / a))
    return p1 + s * d1, p2 + t * d2


def _sphere_sphere(c_a, r_a, c_b, r_b):
    d = c_a - c_b
    dist = float(np.linalg.norm(d))
    pen = r_a + r_b - dist
    if pen <= 0.0:
        return []
    n = d / dist if dist > 1e-12 else np.array([0.0, 0.0, 1.0])
    pos = c_b + n * (r_b - 0.5 * pen)
    return [(pos, n, pen)]


def _sphere_box_local(c_l, r, half):
    """Sphere at c_l (box frame) vs box; returns (pos_l, n_l, pen) or None."""
    clamped = np.clip(c_l, -half, half)
    delta = c_l - clamped
    dist = float(np.linalg.norm(delta))
    if dist > 1e-12:
        pen = r - dist
        if pen <= 0.0:
            return None
        n = delta / dist
        return clamped, n, pen
    # center inside the box: push out through the nearest face
    gaps = half - np.abs(c_l)
    ax = int(np.argmin(gaps))
    n = np.zeros(3)
    n[ax] = 1.0 if c_l[ax] >= 0.0 else -1.0
    pen = r + float(gaps[ax])
    surf = c_l.copy()
    surf[ax] = n[ax] * half[ax]
    return surf, n, pen


def _box_sdist(c_l, half):
    """Signed distance of a point to a box surface (negative inside)."""
    q = np.abs(c_l) - half
    outside = np.maximum(q, 0.0)
    return float(np.linalg.norm(outside) + min(0.0, max(q[0], max(q[1], q[2]))))


def _capsule_endpoints(R, p, hl):
    ax = R[:, 2] * hl
    return p - ax, p + ax


class UnsupportedGeomPair(Exception):
    def __init__(self, kind_a, kind_b):
        names = {GEOM_SPHERE: "sphere", GEOM_CAPSULE: "capsule", GEOM_BOX: "box", GEOM_PLANE: "plane"}
        super().__init__(f"contact between {names.get(kind_a, kind_a)} and {names.get(kind_b, kind_b)} is not supported")
        self.kinds = (kind_a, kind_b)


def contact_pair(kind_a, R_a, p_a, prm_a, kind_b, R_b, p_b, prm_b):
    """Dispatch one geom pair; normals point from geom b into geom a."""
    ka, kb = kind_a, kind_b
    if ka > kb:
        out = contact_pair(kind_b, R_b, p_b, prm_b, kind_a, R_a, p_a, prm_a)
        return [(pos, -n, pen) for pos, n, pen in out]

    if ka == GEOM_SPHERE and kb == GEOM_SPHERE:
        return _sphere_sphere(p_a, prm_a[0], p_b, prm_b[0])

    if ka == GEOM_SPHERE and kb == GEOM_CAPSULE:
        e0, e1 = _capsule_endpoints(R_b, p_b, prm_b[1])
        q = _seg_closest_point(p_a, e0, e1)
        return _sphere_sphere(p_a, prm_a[0], q, prm_b[0])

    if ka == GEOM_SPHERE and kb == GEOM_BOX:
        c_l = R_b.T @ (p_a - p_b)
        hit = _sphere_box_local(c_l, prm_a[0], prm_b)
        if hit is None:
            return []
        pos_l, n_l, pen = hit
        return [(p_b + R_b @ pos_l, R_b @ n_l, pen)]

    if ka == GEOM_SPHERE and kb == GEOM_PLANE:
        n = R_b[:, 2]
        h = float((p_a - p_b) @ n)
        pen = prm_a[0] - h
        if pen <= 0.0:
            return []
        return [(p_a - n * h, n, pen)]

    if ka == GEOM_CAPSULE and kb == GEOM_CAPSULE:
        a0, a1 = _capsule_endpoints(R_a, p_a, prm_a[1])
        b0, b1 = _capsule_endpoints(R_b, p_b, prm_b[1])
        qa, qb = _seg_seg_closest(a0, a1, b0, b1)
        return _sphere_sphere(qa, prm_a[0], qb, prm_b[0])

    if ka == GEOM_CAPSULE and kb == GEOM_BOX:
        e0, e1 = _capsule_endpoints(R_a, p_a, prm_a[1])
        l0 = R_b.T @ (e0 - p_b)
        l1 = R_b.T @ (e1 - p_b)
        half = prm_b
        # signed distance along the segment is convex: ternary search
        lo, hi = 0.0, 1.0
        for _ in range(48):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if _box_sdist(l0 + (l1 - l0) * m1, half) <= _box_sdist(l0 + (l1 - l0) * m2, half):
                hi = m2
            else:
                lo = m1
        t = 0.5 * (lo + hi)
        best = l0 + (l1 - l0) * t
        out = []
        # parallel-face case: also try the endpoints so long flat contacts
        # get two support points instead of one
        for c_l in (best, l0, l1):
            hit = _sphere_box_local(c_l, prm_a[0], half)
            if hit is None:
                continue
            pos_l, n_l, pen = hit
            pos_w = p_b + R_b @ pos_l
            if any(np.linalg.norm(pos_w - q[0]) < 1e-4 for q in out):
                continue
            out.append((pos_w, R_b @ n_l, pen))
        return out

    if ka == GEOM_CAPSULE and kb == GEOM_PLANE:
        n = R_b[:, 2]
        out = []
        for e in _capsule_endpoints(R_a, p_a, prm_a[1]):
            h = float((e - p_b) @ n)
            pen = prm_a[0] - h
            if pen > 0.0:
                out.append((e - n * h, n, pen))
        return out

    if ka == GEOM_BOX and kb == GEOM_PLANE:
        n = R_b[:, 2]
        out = []
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                for sz in (-1.0, 1.0):
                    corner = p_a + R_a @ (np.array([sx, sy, sz]) * prm_a)
                    h = float((corner - p_b) @ n)
                    if h < 0.0:
                        out.append((corner - n * h, n, -h))
        return out

    raise UnsupportedGeomPair(ka, kb)
