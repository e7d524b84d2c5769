# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dynamics kernels; drop-in twin of ``reference.py``.

Same array layouts and call signatures as the pure-Python backend. The
heavy per-node spatial algebra runs on stack-allocated C arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, sin, sqrt

from .reference import UnsupportedGeomPair

cnp.import_array()

JTYPE_FREE = 0
JTYPE_HINGE = 1

GEOM_SPHERE = 0
GEOM_CAPSULE = 1
GEOM_BOX = 2
GEOM_PLANE = 3

cdef int _FREE = 0
cdef int _HINGE = 1


# -- small fixed-size linear algebra ------------------------------------------


cdef inline void _mat3_mul(double* out, double* A, double* B) noexcept nogil:
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.0
            for k in range(3):
                out[3 * i + j] += A[3 * i + k] * B[3 * k + j]


cdef inline void _mat3_vec(double* out, double* A, double* v) noexcept nogil:
    cdef int i
    for i in range(3):
        out[i] = A[3 * i] * v[0] + A[3 * i + 1] * v[1] + A[3 * i + 2] * v[2]


cdef inline void _mat3_tvec(double* out, double* A, double* v) noexcept nogil:
    cdef int i
    for i in range(3):
        out[i] = A[i] * v[0] + A[3 + i] * v[1] + A[6 + i] * v[2]


cdef inline void _cross(double* out, double* a, double* b) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline void _quat_to_mat_c(double* R, double qw, double qx, double qy, double qz) noexcept nogil:
    cdef double n = sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
    cdef double w = qw / n, x = qx / n, y = qy / n, z = qz / n
    R[0] = 1 - 2 * (y * y + z * z); R[1] = 2 * (x * y - w * z); R[2] = 2 * (x * z + w * y)
    R[3] = 2 * (x * y + w * z); R[4] = 1 - 2 * (x * x + z * z); R[5] = 2 * (y * z - w * x)
    R[6] = 2 * (x * z - w * y); R[7] = 2 * (y * z + w * x); R[8] = 1 - 2 * (x * x + y * y)


cdef inline void _rot_axis_angle_c(double* R, double* ax, double angle) noexcept nogil:
    cdef double c = cos(angle), s = sin(angle), omc = 1.0 - c
    cdef double x = ax[0], y = ax[1], z = ax[2]
    R[0] = c + omc * x * x; R[1] = omc * x * y - s * z; R[2] = omc * x * z + s * y
    R[3] = omc * x * y + s * z; R[4] = c + omc * y * y; R[5] = omc * y * z - s * x
    R[6] = omc * x * z - s * y; R[7] = omc * y * z + s * x; R[8] = c + omc * z * z


cdef inline void _build_xup(double* X, double* R_rel, double* r) noexcept nogil:
    """Plücker motion transform for a child at (E = R_rel^T, r) in parent."""
    cdef int i, j
    cdef double E[9]
    cdef double S[9]
    cdef double ES[9]
    for i in range(3):
        for j in range(3):
            E[3 * i + j] = R_rel[3 * j + i]
    S[0] = 0.0; S[1] = -r[2]; S[2] = r[1]
    S[3] = r[2]; S[4] = 0.0; S[5] = -r[0]
    S[6] = -r[1]; S[7] = r[0]; S[8] = 0.0
    _mat3_mul(ES, E, S)
    for i in range(36):
        X[i] = 0.0
    for i in range(3):
        for j in range(3):
            X[6 * i + j] = E[3 * i + j]
            X[6 * (i + 3) + (j + 3)] = E[3 * i + j]
            X[6 * (i + 3) + j] = -ES[3 * i + j]


cdef inline void _mat6_vec(double* out, double* X, double* v) noexcept nogil:
    cdef int i, j
    for i in range(6):
        out[i] = 0.0
        for j in range(6):
            out[i] += X[6 * i + j] * v[j]


cdef inline void _mat6_tvec(double* out, double* X, double* v) noexcept nogil:
    cdef int i, j
    for i in range(6):
        out[i] = 0.0
        for j in range(6):
            out[i] += X[6 * j + i] * v[j]


cdef inline void _mat6_mul(double* out, double* A, double* B) noexcept nogil:
    cdef int i, j, k
    for i in range(6):
        for j in range(6):
            out[6 * i + j] = 0.0
            for k in range(6):
                out[6 * i + j] += A[6 * i + k] * B[6 * k + j]


cdef inline void _mat6_tmul(double* out, double* A, double* B) noexcept nogil:
    """out = A^T B."""
    cdef int i, j, k
    for i in range(6):
        for j in range(6):
            out[6 * i + j] = 0.0
            for k in range(6):
                out[6 * i + j] += A[6 * k + i] * B[6 * k + j]


cdef inline void _crm_vec(double* out, double* v, double* u) noexcept nogil:
    """out = crm(v) @ u for motion vectors."""
    out[0] = v[1] * u[2] - v[2] * u[1]
    out[1] = v[2] * u[0] - v[0] * u[2]
    out[2] = v[0] * u[1] - v[1] * u[0]
    out[3] = v[4] * u[2] - v[5] * u[1] + v[1] * u[5] - v[2] * u[4]
    out[4] = v[5] * u[0] - v[3] * u[2] + v[2] * u[3] - v[0] * u[5]
    out[5] = v[3] * u[1] - v[4] * u[0] + v[0] * u[4] - v[1] * u[3]


cdef inline void _crf_vec(double* out, double* v, double* f) noexcept nogil:
    """out = crf(v) @ f = -crm(v)^T @ f for force vectors."""
    out[0] = v[1] * f[2] - v[2] * f[1] + v[4] * f[5] - v[5] * f[4]
    out[1] = v[2] * f[0] - v[0] * f[2] + v[5] * f[3] - v[3] * f[5]
    out[2] = v[0] * f[1] - v[1] * f[0] + v[3] * f[4] - v[4] * f[3]
    out[3] = v[1] * f[5] - v[2] * f[4]
    out[4] = v[2] * f[3] - v[0] * f[5]
    out[5] = v[0] * f[4] - v[1] * f[3]


cdef inline int _solve6(double* A, double* b, double* x) noexcept nogil:
    """Gaussian elimination with partial pivoting for a 6x6 system."""
    cdef double M[42]
    cdef int i, j, k, piv
    cdef double best, factor, tmp
    for i in range(6):
        for j in range(6):
            M[7 * i + j] = A[6 * i + j]
        M[7 * i + 6] = b[i]
    for k in range(6):
        piv = k
        best = fabs(M[7 * k + k])
        for i in range(k + 1, 6):
            if fabs(M[7 * i + k]) > best:
                best = fabs(M[7 * i + k])
                piv = i
        if best == 0.0:
            return -1
        if piv != k:
            for j in range(7):
                tmp = M[7 * k + j]
                M[7 * k + j] = M[7 * piv + j]
                M[7 * piv + j] = tmp
        for i in range(k + 1, 6):
            factor = M[7 * i + k] / M[7 * k + k]
            for j in range(k, 7):
                M[7 * i + j] -= factor * M[7 * k + j]
    for i in range(5, -1, -1):
        x[i] = M[7 * i + 6]
        for j in range(i + 1, 6):
            x[i] -= M[7 * i + j] * x[j]
        x[i] /= M[7 * i + i]
    return 0


# -- kinematics -----------------------------------------------------------------


def joint_transforms(parent, jtype, qadr, axis, Rtree, ptree, qpos):
    """Per-node (R_rel, p_rel): node frame in parent (or world) frame."""
    cdef cnp.int32_t[:] par = np.ascontiguousarray(parent, dtype=np.int32)
    cdef cnp.int32_t[:] jt = np.ascontiguousarray(jtype, dtype=np.int32)
    cdef cnp.int32_t[:] qa = np.ascontiguousarray(qadr, dtype=np.int32)
    cdef double[:, :] ax = np.ascontiguousarray(axis, dtype=np.float64)
    cdef double[:, :, :] Rt = np.ascontiguousarray(Rtree, dtype=np.float64)
    cdef double[:, :] pt = np.ascontiguousarray(ptree, dtype=np.float64)
    cdef double[:] q = np.ascontiguousarray(qpos, dtype=np.float64)
    cdef int n = par.shape[0]
    R_rel_np = np.empty((n, 3, 3))
    p_rel_np = np.empty((n, 3))
    cdef double[:, :, :] R_rel = R_rel_np
    cdef double[:, :] p_rel = p_rel_np
    cdef int i, j, k, a
    cdef double Rj[9]
    cdef double Rq[9]
    cdef double axv[3]
    with nogil:
        for i in range(n):
            if jt[i] == _FREE:
                a = qa[i]
                _quat_to_mat_c(Rq, q[a + 3], q[a + 4], q[a + 5], q[a + 6])
                for j in range(3):
                    for k in range(3):
                        R_rel[i, j, k] = Rq[3 * j + k]
                    p_rel[i, j] = q[a + j]
            else:
                axv[0] = ax[i, 0]; axv[1] = ax[i, 1]; axv[2] = ax[i, 2]
                _rot_axis_angle_c(Rq, axv, q[qa[i]])
                for j in range(3):
                    for k in range(3):
                        Rj[3 * j + k] = Rt[i, j, 0] * Rq[k] + Rt[i, j, 1] * Rq[3 + k] + Rt[i, j, 2] * Rq[6 + k]
                for j in range(3):
                    for k in range(3):
                        R_rel[i, j, k] = Rj[3 * j + k]
                    p_rel[i, j] = pt[i, j]
    return R_rel_np, p_rel_np


def fk(parent, jtype, qadr, vadr, axis, Rtree, ptree, qpos, qvel):
    """Forward kinematics and velocities (see reference.fk)."""
    R_rel_np, p_rel_np = joint_transforms(parent, jtype, qadr, axis, Rtree, ptree, qpos)
    cdef cnp.int32_t[:] par = np.ascontiguousarray(parent, dtype=np.int32)
    cdef cnp.int32_t[:] jt = np.ascontiguousarray(jtype, dtype=np.int32)
    cdef cnp.int32_t[:] va = np.ascontiguousarray(vadr, dtype=np.int32)
    cdef double[:, :] ax = np.ascontiguousarray(axis, dtype=np.float64)
    cdef double[:] qd = np.ascontiguousarray(qvel, dtype=np.float64)
    cdef double[:, :, :] R_rel = R_rel_np
    cdef double[:, :] p_rel = p_rel_np
    cdef int n = par.shape[0]
    R_w_np = np.empty((n, 3, 3))
    p_w_np = np.empty((n, 3))
    v_nd_np = np.zeros((n, 6))
    cdef double[:, :, :] R_w = R_w_np
    cdef double[:, :] p_w = p_w_np
    cdef double[:, :] v_nd = v_nd_np
    cdef int i, j, k, p
    cdef double E[9]
    cdef double tmp3[3]
    cdef double w3[3]
    cdef double cr[3]
    with nogil:
        for i in range(n):
            p = par[i]
            if p < 0:
                for j in range(3):
                    for k in range(3):
                        R_w[i, j, k] = R_rel[i, j, k]
                    p_w[i, j] = p_rel[i, j]
            else:
                for j in range(3):
                    for k in range(3):
                        R_w[i, j, k] = (
                            R_w[p, j, 0] * R_rel[i, 0, k]
                            + R_w[p, j, 1] * R_rel[i, 1, k]
                            + R_w[p, j, 2] * R_rel[i, 2, k]
                        )
                    p_w[i, j] = p_w[p, j] + (
                        R_w[p, j, 0] * p_rel[i, 0] + R_w[p, j, 1] * p_rel[i, 1] + R_w[p, j, 2] * p_rel[i, 2]
                    )
                for j in range(3):
                    for k in range(3):
                        E[3 * j + k] = R_rel[i, k, j]
                w3[0] = v_nd[p, 0]; w3[1] = v_nd[p, 1]; w3[2] = v_nd[p, 2]
                _mat3_vec(tmp3, E, w3)
                v_nd[i, 0] = tmp3[0]; v_nd[i, 1] = tmp3[1]; v_nd[i, 2] = tmp3[2]
                cr[0] = v_nd[p, 3] + w3[1] * p_rel[i, 2] - w3[2] * p_rel[i, 1]
                cr[1] = v_nd[p, 4] + w3[2] * p_rel[i, 0] - w3[0] * p_rel[i, 2]
                cr[2] = v_nd[p, 5] + w3[0] * p_rel[i, 1] - w3[1] * p_rel[i, 0]
                _mat3_vec(tmp3, E, cr)
                v_nd[i, 3] = tmp3[0]; v_nd[i, 4] = tmp3[1]; v_nd[i, 5] = tmp3[2]
            if jt[i] == _FREE:
                for j in range(6):
                    v_nd[i, j] += qd[va[i] + j]
            else:
                for j in range(3):
                    v_nd[i, j] += ax[i, j] * qd[va[i]]
    return R_w_np, p_w_np, v_nd_np, R_rel_np, p_rel_np


# -- dynamics ---------------------------------------------------------------------


def aba(parent, jtype, vadr, axis, Isp, armature, R_rel, p_rel, v_nd, tau, f_ext, gravity):
    """Articulated-body forward dynamics -> qacc (nv,)."""
    cdef cnp.int32_t[:] par = np.ascontiguousarray(parent, dtype=np.int32)
    cdef cnp.int32_t[:] jt = np.ascontiguousarray(jtype, dtype=np.int32)
    cdef cnp.int32_t[:] va = np.ascontiguousarray(vadr, dtype=np.int32)
    cdef double[:, :] ax = np.ascontiguousarray(axis, dtype=np.float64)
    cdef double[:, :, :] I0 = np.ascontiguousarray(Isp, dtype=np.float64)
    cdef double[:] arma = np.ascontiguousarray(armature, dtype=np.float64)
    cdef double[:, :, :] Rr = np.ascontiguousarray(R_rel, dtype=np.float64)
    cdef double[:, :] pr = np.ascontiguousarray(p_rel, dtype=np.float64)
    cdef double[:, :] v = np.ascontiguousarray(v_nd, dtype=np.float64)
    cdef double[:] tu = np.ascontiguousarray(tau, dtype=np.float64)
    cdef double[:, :] fx = np.ascontiguousarray(f_ext, dtype=np.float64)
    cdef double[:] grav = np.ascontiguousarray(gravity, dtype=np.float64)
    cdef int n = par.shape[0]
    cdef int nv = tu.shape[0]

    qacc_np = np.zeros(nv)
    cdef double[:] qacc = qacc_np
    work_X = np.empty((n, 36))
    work_IA = np.empty((n, 36))
    work_Rw = np.empty((n, 9))
    work_pA = np.empty((n, 6))
    work_c = np.zeros((n, 6))
    work_U = np.zeros((n, 6))
    work_a = np.empty((n, 6))
    cdef double[:, :] X = work_X
    cdef double[:, :] IA = work_IA
    cdef double[:, :] Rw = work_Rw
    cdef double[:, :] pA = work_pA
    cdef double[:, :] cC = work_c
    cdef double[:, :] U = work_U
    cdef double[:, :] acc = work_a
    cdef double[:] dD = np.zeros(n)
    cdef double[:] uU = np.zeros(n)

    cdef int i, j, k, p
    cdef double Rl[9]
    cdef double rl[3]
    cdef double vp[6]
    cdef double vJ[6]
    cdef double tmp6[6]
    cdef double tmp6b[6]
    cdef double Iv[6]
    cdef double f3[3]
    cdef double o3[3]
    cdef double Ia[36]
    cdef double T1[36]
    cdef double T2[36]
    cdef double S6[6]
    cdef double a_prev[6]
    cdef double rhs6[6]
    cdef double qdd6[6]
    cdef double qdd

    with nogil:
        # outward: transforms, world rotations, velocity products, bias forces
        for i in range(n):
            p = par[i]
            for j in range(3):
                for k in range(3):
                    Rl[3 * j + k] = Rr[i, j, k]
                rl[j] = pr[i, j]
            _build_xup(&X[i, 0], Rl, rl)
            if p < 0:
                for j in range(9):
                    Rw[i, j] = Rl[j]
            else:
                _mat3_mul(&Rw[i, 0], &Rw[p, 0], Rl)
            for j in range(36):
                IA[i, j] = I0[i, j // 6, j % 6]
            if jt[i] == _HINGE:
                if p >= 0:
                    for j in range(6):
                        tmp6[j] = v[p, j]
                    _mat6_vec(vp, &X[i, 0], tmp6)
                else:
                    for j in range(6):
                        vp[j] = 0.0
                for j in range(6):
                    vJ[j] = v[i, j] - vp[j]
                for j in range(6):
                    tmp6[j] = v[i, j]
                _crm_vec(&cC[i, 0], tmp6, vJ)
            # bias force: crf(v) (I v) - world force rotated into node frame
            for j in range(6):
                tmp6[j] = v[i, j]
            _mat6_vec(Iv, &IA[i, 0], tmp6)
            _crf_vec(&pA[i, 0], tmp6, Iv)
            f3[0] = fx[i, 0]; f3[1] = fx[i, 1]; f3[2] = fx[i, 2]
            _mat3_tvec(o3, &Rw[i, 0], f3)
            pA[i, 0] -= o3[0]; pA[i, 1] -= o3[1]; pA[i, 2] -= o3[2]
            f3[0] = fx[i, 3]; f3[1] = fx[i, 4]; f3[2] = fx[i, 5]
            _mat3_tvec(o3, &Rw[i, 0], f3)
            pA[i, 3] -= o3[0]; pA[i, 4] -= o3[1]; pA[i, 5] -= o3[2]

        # inward: articulated inertia (hinges only below roots)
        for i in range(n - 1, -1, -1):
            p = par[i]
            if jt[i] == _HINGE:
                S6[0] = ax[i, 0]; S6[1] = ax[i, 1]; S6[2] = ax[i, 2]
                S6[3] = 0.0; S6[4] = 0.0; S6[5] = 0.0
                _mat6_vec(&U[i, 0], &IA[i, 0], S6)
                dD[i] = S6[0] * U[i, 0] + S6[1] * U[i, 1] + S6[2] * U[i, 2] + arma[i]
                uU[i] = tu[va[i]] - (
                    S6[0] * pA[i, 0] + S6[1] * pA[i, 1] + S6[2] * pA[i, 2]
                    + S6[3] * pA[i, 3] + S6[4] * pA[i, 4] + S6[5] * pA[i, 5]
                )
                if p >= 0:
                    for j in range(6):
                        for k in range(6):
                            Ia[6 * j + k] = IA[i, 6 * j + k] - U[i, j] * U[i, k] / dD[i]
                    for j in range(6):
                        tmp6[j] = cC[i, j]
                    _mat6_vec(tmp6b, Ia, tmp6)
                    for j in range(6):
                        tmp6b[j] += pA[i, j] + U[i, j] * (uU[i] / dD[i])
                    _mat6_tvec(tmp6, &X[i, 0], tmp6b)
                    for j in range(6):
                        pA[p, j] += tmp6[j]
                    _mat6_mul(T1, Ia, &X[i, 0])
                    _mat6_tmul(T2, &X[i, 0], T1)
                    for j in range(36):
                        IA[p, j] += T2[j]

        # outward: accelerations
        for i in range(n):
            p = par[i]
            if p < 0:
                tmp6[0] = 0.0; tmp6[1] = 0.0; tmp6[2] = 0.0
                tmp6[3] = -grav[0]; tmp6[4] = -grav[1]; tmp6[5] = -grav[2]
            else:
                for j in range(6):
                    tmp6[j] = acc[p, j]
            _mat6_vec(a_prev, &X[i, 0], tmp6)
            if jt[i] == _HINGE:
                for j in range(6):
                    a_prev[j] += cC[i, j]
                qdd = uU[i]
                for j in range(6):
                    qdd -= U[i, j] * a_prev[j]
                qdd /= dD[i]
                qacc[va[i]] = qdd
                for j in range(6):
                    acc[i, j] = a_prev[j]
                acc[i, 0] += ax[i, 0] * qdd
                acc[i, 1] += ax[i, 1] * qdd
                acc[i, 2] += ax[i, 2] * qdd
            else:
                for j in range(6):
                    rhs6[j] = tu[va[i] + j] - pA[i, j]
                _mat6_vec(tmp6b, &IA[i, 0], a_prev)
                for j in range(6):
                    rhs6[j] -= tmp6b[j]
                _solve6(&IA[i, 0], rhs6, qdd6)
                for j in range(6):
                    qacc[va[i] + j] = qdd6[j]
                    acc[i, j] = a_prev[j] + qdd6[j]
    return qacc_np


def rnea_bias(parent, jtype, vadr, axis, Isp, R_rel, p_rel, v_nd, f_ext, gravity, nv):
    """Inverse dynamics at zero acceleration -> bias (nv,)."""
    cdef cnp.int32_t[:] par = np.ascontiguousarray(parent, dtype=np.int32)
    cdef cnp.int32_t[:] jt = np.ascontiguousarray(jtype, dtype=np.int32)
    cdef cnp.int32_t[:] va = np.ascontiguousarray(vadr, dtype=np.int32)
    cdef double[:, :] ax = np.ascontiguousarray(axis, dtype=np.float64)
    cdef double[:, :, :] I0 = np.ascontiguousarray(Isp, dtype=np.float64)
    cdef double[:, :, :] Rr = np.ascontiguousarray(R_rel, dtype=np.float64)
    cdef double[:, :] pr = np.ascontiguousarray(p_rel, dtype=np.float64)
    cdef double[:, :] v = np.ascontiguousarray(v_nd, dtype=np.float64)
    cdef double[:, :] fx = np.ascontiguousarray(f_ext, dtype=np.float64)
    cdef double[:] grav = np.ascontiguousarray(gravity, dtype=np.float64)
    cdef int n = par.shape[0]
    cdef int nvi = int(nv)

    bias_np = np.zeros(nvi)
    cdef double[:] bias = bias_np
    work_X = np.empty((n, 36))
    work_Rw = np.empty((n, 9))
    work_a = np.empty((n, 6))
    work_f = np.empty((n, 6))
    cdef double[:, :] X = work_X
    cdef double[:, :] Rw = work_Rw
    cdef double[:, :] acc = work_a
    cdef double[:, :] ff = work_f

    cdef int i, j, k, p
    cdef double Rl[9]
    cdef double rl[3]
    cdef double tmp6[6]
    cdef double tmp6b[6]
    cdef double vp[6]
    cdef double vJ[6]
    cdef double Iv[6]
    cdef double f3[3]
    cdef double o3[3]

    with nogil:
        for i in range(n):
            p = par[i]
            for j in range(3):
                for k in range(3):
                    Rl[3 * j + k] = Rr[i, j, k]
                rl[j] = pr[i, j]
            _build_xup(&X[i, 0], Rl, rl)
            if p < 0:
                for j in range(9):
                    Rw[i, j] = Rl[j]
                tmp6[0] = 0.0; tmp6[1] = 0.0; tmp6[2] = 0.0
                tmp6[3] = -grav[0]; tmp6[4] = -grav[1]; tmp6[5] = -grav[2]
            else:
                _mat3_mul(&Rw[i, 0], &Rw[p, 0], Rl)
                for j in range(6):
                    tmp6[j] = acc[p, j]
            _mat6_vec(&acc[i, 0], &X[i, 0], tmp6)
            if jt[i] == _HINGE:
                if p >= 0:
                    for j in range(6):
                        tmp6[j] = v[p, j]
                    _mat6_vec(vp, &X[i, 0], tmp6)
                else:
                    for j in range(6):
                        vp[j] = 0.0
                for j in range(6):
                    vJ[j] = v[i, j] - vp[j]
                for j in range(6):
                    tmp6[j] = v[i, j]
                _crm_vec(tmp6b, tmp6, vJ)
                for j in range(6):
                    acc[i, j] += tmp6b[j]
            for j in range(6):
                tmp6[j] = v[i, j]
            for j in range(6):
                Iv[j] = 0.0
                for k in range(6):
                    Iv[j] += I0[i, j, k] * tmp6[k]
            _crf_vec(&ff[i, 0], tmp6, Iv)
            for j in range(6):
                tmp6b[j] = acc[i, j]
            for j in range(6):
                for k in range(6):
                    ff[i, j] += I0[i, j, k] * tmp6b[k]
            f3[0] = fx[i, 0]; f3[1] = fx[i, 1]; f3[2] = fx[i, 2]
            _mat3_tvec(o3, &Rw[i, 0], f3)
            ff[i, 0] -= o3[0]; ff[i, 1] -= o3[1]; ff[i, 2] -= o3[2]
            f3[0] = fx[i, 3]; f3[1] = fx[i, 4]; f3[2] = fx[i, 5]
            _mat3_tvec(o3, &Rw[i, 0], f3)
            ff[i, 3] -= o3[0]; ff[i, 4] -= o3[1]; ff[i, 5] -= o3[2]

        for i in range(n - 1, -1, -1):
            p = par[i]
            if jt[i] == _HINGE:
                bias[va[i]] = ax[i, 0] * ff[i, 0] + ax[i, 1] * ff[i, 1] + ax[i, 2] * ff[i, 2]
            else:
                for j in range(6):
                    bias[va[i] + j] = ff[i, j]
            if p >= 0:
                for j in range(6):
                    tmp6[j] = ff[i, j]
                _mat6_tvec(tmp6b, &X[i, 0], tmp6)
                for j in range(6):
                    ff[p, j] += tmp6b[j]
    return bias_np


def crba(parent, jtype, vadr, axis, Isp, armature, R_rel, p_rel, nv):
    """Composite rigid-body mass matrix M (nv, nv), symmetric PD."""
    cdef cnp.int32_t[:] par = np.ascontiguousarray(parent, dtype=np.int32)
    cdef cnp.int32_t[:] jt = np.ascontiguousarray(jtype, dtype=np.int32)
    cdef cnp.int32_t[:] va = np.ascontiguousarray(vadr, dtype=np.int32)
    cdef double[:, :] ax = np.ascontiguousarray(axis, dtype=np.float64)
    cdef double[:, :, :] I0 = np.ascontiguousarray(Isp, dtype=np.float64)
    cdef double[:] arma = np.ascontiguousarray(armature, dtype=np.float64)
    cdef double[:, :, :] Rr = np.ascontiguousarray(R_rel, dtype=np.float64)
    cdef double[:, :] pr = np.ascontiguousarray(p_rel, dtype=np.float64)
    cdef int n = par.shape[0]
    cdef int nvi = int(nv)

    M_np = np.zeros((nvi, nvi))
    cdef double[:, :] M = M_np
    work_X = np.empty((n, 36))
    work_Ic = np.empty((n, 36))
    cdef double[:, :] X = work_X
    cdef double[:, :] Ic = work_Ic

    cdef int i, j, k, p, row
    cdef double Rl[9]
    cdef double rl[3]
    cdef double T1[36]
    cdef double T2[36]
    cdef double F[6]
    cdef double Fn[6]
    cdef double S6[6]

    with nogil:
        for i in range(n):
            for j in range(3):
                for k in range(3):
                    Rl[3 * j + k] = Rr[i, j, k]
                rl[j] = pr[i, j]
            _build_xup(&X[i, 0], Rl, rl)
            for j in range(36):
                Ic[i, j] = I0[i, j // 6, j % 6]
        for i in range(n - 1, -1, -1):
            p = par[i]
            if p >= 0:
                _mat6_mul(T1, &Ic[i, 0], &X[i, 0])
                _mat6_tmul(T2, &X[i, 0], T1)
                for j in range(36):
                    Ic[p, j] += T2[j]
        for i in range(n):
            if jt[i] == _HINGE:
                S6[0] = ax[i, 0]; S6[1] = ax[i, 1]; S6[2] = ax[i, 2]
                S6[3] = 0.0; S6[4] = 0.0; S6[5] = 0.0
                _mat6_vec(F, &Ic[i, 0], S6)
                row = va[i]
                M[row, row] = S6[0] * F[0] + S6[1] * F[1] + S6[2] * F[2] + arma[i]
                _mat6_tvec(Fn, &X[i, 0], F)
                for j in range(6):
                    F[j] = Fn[j]
                j = par[i]
                while j >= 0:
                    if jt[j] == _HINGE:
                        M[row, va[j]] = F[0] * ax[j, 0] + F[1] * ax[j, 1] + F[2] * ax[j, 2]
                        M[va[j], row] = M[row, va[j]]
                    else:
                        for k in range(6):
                            M[row, va[j] + k] = F[k]
                            M[va[j] + k, row] = F[k]
                    _mat6_tvec(Fn, &X[j, 0], F)
                    for k in range(6):
                        F[k] = Fn[k]
                    j = par[j]
            else:
                for j in range(6):
                    for k in range(6):
                        M[va[i] + j, va[i] + k] = Ic[i, 6 * j + k]
    return M_np


# -- contact narrowphase -----------------------------------------------------------


cdef inline void _seg_closest_c(double* out, double* p, double* a, double* b) noexcept nogil:
    cdef double ab[3]
    cdef double ap[3]
    cdef double denom, t
    cdef int i
    for i in range(3):
        ab[i] = b[i] - a[i]
        ap[i] = p[i] - a[i]
    denom = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2]
    if denom < 1e-300:
        denom = 1e-300
    t = (ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / denom
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    for i in range(3):
        out[i] = a[i] + t * ab[i]


cdef inline void _seg_seg_c(double* qa, double* qb, double* p1, double* q1, double* p2, double* q2) noexcept nogil:
    cdef double d1[3]
    cdef double d2[3]
    cdef double r[3]
    cdef double a, b, c, e, f, denom, s, t
    cdef int i
    cdef double eps = 1e-12
    for i in range(3):
        d1[i] = q1[i] - p1[i]
        d2[i] = q2[i] - p2[i]
        r[i] = p1[i] - p2[i]
    a = d1[0] * d1[0] + d1[1] * d1[1] + d1[2] * d1[2]
    e = d2[0] * d2[0] + d2[1] * d2[1] + d2[2] * d2[2]
    f = d2[0] * r[0] + d2[1] * r[1] + d2[2] * r[2]
    if a <= eps and e <= eps:
        for i in range(3):
            qa[i] = p1[i]
            qb[i] = p2[i]
        return
    if a <= eps:
        t = f / e
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        for i in range(3):
            qa[i] = p1[i]
            qb[i] = p2[i] + t * d2[i]
        return
    c = d1[0] * r[0] + d1[1] * r[1] + d1[2] * r[2]
    if e <= eps:
        s = -c / a
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
        for i in range(3):
            qa[i] = p1[i] + s * d1[i]
            qb[i] = p2[i]
        return
    b = d1[0] * d2[0] + d1[1] * d2[1] + d1[2] * d2[2]
    denom = a * e - b * b
    if denom > eps:
        s = (b * f - c * e) / denom
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    else:
        s = 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = -c / a
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    elif t > 1.0:
        t = 1.0
        s = (b - c) / a
        if s < 0.0:
            s = 0.0
        elif s > 1.0:
            s = 1.0
    for i in range(3):
        qa[i] = p1[i] + s * d1[i]
        qb[i] = p2[i] + t * d2[i]


cdef inline double _box_sdist_c(double* c_l, double* half) noexcept nogil:
    cdef double q0 = fabs(c_l[0]) - half[0]
    cdef double q1 = fabs(c_l[1]) - half[1]
    cdef double q2 = fabs(c_l[2]) - half[2]
    cdef double o0 = q0 if q0 > 0.0 else 0.0
    cdef double o1 = q1 if q1 > 0.0 else 0.0
    cdef double o2 = q2 if q2 > 0.0 else 0.0
    cdef double inner = q0
    if q1 > inner:
        inner = q1
    if q2 > inner:
        inner = q2
    if inner > 0.0:
        inner = 0.0
    return sqrt(o0 * o0 + o1 * o1 + o2 * o2) + inner


cdef list _sphere_sphere_py(double[:] c_a, double r_a, double[:] c_b, double r_b):
    cdef double d0 = c_a[0] - c_b[0]
    cdef double d1 = c_a[1] - c_b[1]
    cdef double d2 = c_a[2] - c_b[2]
    cdef double dist = sqrt(d0 * d0 + d1 * d1 + d2 * d2)
    cdef double pen = r_a + r_b - dist
    if pen <= 0.0:
        return []
    n = np.empty(3)
    if dist > 1e-12:
        n[0] = d0 / dist; n[1] = d1 / dist; n[2] = d2 / dist
    else:
        n[0] = 0.0; n[1] = 0.0; n[2] = 1.0
    pos = np.empty(3)
    cdef double back = r_b - 0.5 * pen
    pos[0] = c_b[0] + n[0] * back
    pos[1] = c_b[1] + n[1] * back
    pos[2] = c_b[2] + n[2] * back
    return [(pos, n, pen)]


cdef int _sphere_box_local_c(double* c_l, double r, double* half, double* pos_l, double* n_l, double* pen) noexcept nogil:
    cdef double clamped[3]
    cdef double delta[3]
    cdef double dist, gap, best
    cdef int i, axn
    for i in range(3):
        clamped[i] = c_l[i]
        if clamped[i] < -half[i]:
            clamped[i] = -half[i]
        elif clamped[i] > half[i]:
            clamped[i] = half[i]
        delta[i] = c_l[i] - clamped[i]
    dist = sqrt(delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2])
    if dist > 1e-12:
        pen[0] = r - dist
        if pen[0] <= 0.0:
            return 0
        for i in range(3):
            pos_l[i] = clamped[i]
            n_l[i] = delta[i] / dist
        return 1
    axn = 0
    best = half[0] - fabs(c_l[0])
    gap = half[1] - fabs(c_l[1])
    if gap < best:
        best = gap
        axn = 1
    gap = half[2] - fabs(c_l[2])
    if gap < best:
        best = gap
        axn = 2
    for i in range(3):
        pos_l[i] = c_l[i]
        n_l[i] = 0.0
    n_l[axn] = 1.0 if c_l[axn] >= 0.0 else -1.0
    pen[0] = r + best
    pos_l[axn] = n_l[axn] * half[axn]
    return 1


def contact_pair(kind_a, R_a, p_a, prm_a, kind_b, R_b, p_b, prm_b):
    """Dispatch one geom pair; normals point from geom b into geom a."""
    cdef int ka = int(kind_a)
    cdef int kb = int(kind_b)
    if ka > kb:
        out = contact_pair(kind_b, R_b, p_b, prm_b, kind_a, R_a, p_a, prm_a)
        return [(pos, -n, pen) for pos, n, pen in out]

    cdef double[:, :] Ra = np.ascontiguousarray(R_a, dtype=np.float64)
    cdef double[:] pa = np.ascontiguousarray(p_a, dtype=np.float64)
    cdef double[:] pra = np.ascontiguousarray(prm_a, dtype=np.float64)
    cdef double[:, :] Rb = np.ascontiguousarray(R_b, dtype=np.float64)
    cdef double[:] pb = np.ascontiguousarray(p_b, dtype=np.float64)
    cdef double[:] prb = np.ascontiguousarray(prm_b, dtype=np.float64)

    cdef double e0[3]
    cdef double e1[3]
    cdef double b0[3]
    cdef double b1[3]
    cdef double qa[3]
    cdef double qb[3]
    cdef double c_l[3]
    cdef double half[3]
    cdef double pos_l[3]
    cdef double n_l[3]
    cdef double pen_c[1]
    cdef double tmp[3]
    cdef double h, pen, lo, hi, m1, m2, t
    cdef double l0[3]
    cdef double l1[3]
    cdef double cand[3]
    cdef int i, it

    if ka == 0 and kb == 0:
        return _sphere_sphere_py(pa, pra[0], pb, prb[0])

    if ka == 0 and kb == 1:
        for i in range(3):
            e0[i] = pb[i] - Rb[i, 2] * prb[1]
            e1[i] = pb[i] + Rb[i, 2] * prb[1]
            tmp[i] = pa[i]
        _seg_closest_c(qb, tmp, e0, e1)
        q_np = np.array([qb[0], qb[1], qb[2]])
        return _sphere_sphere_py(pa, pra[0], q_np, prb[0])

    if ka == 0 and kb == 2:
        for i in range(3):
            tmp[i] = pa[i] - pb[i]
            half[i] = prb[i]
        for i in range(3):
            c_l[i] = Rb[0, i] * tmp[0] + Rb[1, i] * tmp[1] + Rb[2, i] * tmp[2]
        if not _sphere_box_local_c(c_l, pra[0], half, pos_l, n_l, pen_c):
            return []
        pos = np.empty(3)
        nrm = np.empty(3)
        for i in range(3):
            pos[i] = pb[i] + Rb[i, 0] * pos_l[0] + Rb[i, 1] * pos_l[1] + Rb[i, 2] * pos_l[2]
            nrm[i] = Rb[i, 0] * n_l[0] + Rb[i, 1] * n_l[1] + Rb[i, 2] * n_l[2]
        return [(pos, nrm, pen_c[0])]

    if ka == 0 and kb == 3:
        h = (pa[0] - pb[0]) * Rb[0, 2] + (pa[1] - pb[1]) * Rb[1, 2] + (pa[2] - pb[2]) * Rb[2, 2]
        pen = pra[0] - h
        if pen <= 0.0:
            return []
        pos = np.empty(3)
        nrm = np.empty(3)
        for i in range(3):
            nrm[i] = Rb[i, 2]
            pos[i] = pa[i] - Rb[i, 2] * h
        return [(pos, nrm, pen)]

    if ka == 1 and kb == 1:
        for i in range(3):
            e0[i] = pa[i] - Ra[i, 2] * pra[1]
            e1[i] = pa[i] + Ra[i, 2] * pra[1]
            b0[i] = pb[i] - Rb[i, 2] * prb[1]
            b1[i] = pb[i] + Rb[i, 2] * prb[1]
        _seg_seg_c(qa, qb, e0, e1, b0, b1)
        qa_np = np.array([qa[0], qa[1], qa[2]])
        qb_np = np.array([qb[0], qb[1], qb[2]])
        return _sphere_sphere_py(qa_np, pra[0], qb_np, prb[0])

    if ka == 1 and kb == 2:
        for i in range(3):
            e0[i] = pa[i] - Ra[i, 2] * pra[1]
            e1[i] = pa[i] + Ra[i, 2] * pra[1]
            half[i] = prb[i]
        for i in range(3):
            tmp[i] = e0[i] - pb[i]
        for i in range(3):
            l0[i] = Rb[0, i] * tmp[0] + Rb[1, i] * tmp[1] + Rb[2, i] * tmp[2]
        for i in range(3):
            tmp[i] = e1[i] - pb[i]
        for i in range(3):
            l1[i] = Rb[0, i] * tmp[0] + Rb[1, i] * tmp[1] + Rb[2, i] * tmp[2]
        lo = 0.0
        hi = 1.0
        for it in range(48):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            for i in range(3):
                cand[i] = l0[i] + (l1[i] - l0[i]) * m1
                tmp[i] = l0[i] + (l1[i] - l0[i]) * m2
            if _box_sdist_c(cand, half) <= _box_sdist_c(tmp, half):
                hi = m2
            else:
                lo = m1
        t = 0.5 * (lo + hi)
        out = []
        for trial in range(3):
            if trial == 0:
                for i in range(3):
                    cand[i] = l0[i] + (l1[i] - l0[i]) * t
            elif trial == 1:
                for i in range(3):
                    cand[i] = l0[i]
            else:
                for i in range(3):
                    cand[i] = l1[i]
            if not _sphere_box_local_c(cand, pra[0], half, pos_l, n_l, pen_c):
                continue
            pos = np.empty(3)
            nrm = np.empty(3)
            for i in range(3):
                pos[i] = pb[i] + Rb[i, 0] * pos_l[0] + Rb[i, 1] * pos_l[1] + Rb[i, 2] * pos_l[2]
                nrm[i] = Rb[i, 0] * n_l[0] + Rb[i, 1] * n_l[1] + Rb[i, 2] * n_l[2]
            dup = False
            for q in out:
                if (
                    (pos[0] - q[0][0]) ** 2 + (pos[1] - q[0][1]) ** 2 + (pos[2] - q[0][2]) ** 2
                ) < 1e-8:
                    dup = True
                    break
            if not dup:
                out.append((pos, nrm, pen_c[0]))
        return out

    if ka == 1 and kb == 3:
        out = []
        for end in range(2):
            for i in range(3):
                e0[i] = pa[i] + Ra[i, 2] * pra[1] * (1.0 if end else -1.0)
            h = (e0[0] - pb[0]) * Rb[0, 2] + (e0[1] - pb[1]) * Rb[1, 2] + (e0[2] - pb[2]) * Rb[2, 2]
            pen = pra[0] - h
            if pen > 0.0:
                pos = np.empty(3)
                nrm = np.empty(3)
                for i in range(3):
                    nrm[i] = Rb[i, 2]
                    pos[i] = e0[i] - Rb[i, 2] * h
                out.append((pos, nrm, pen))
        return out

    if ka == 2 and kb == 3:
        out = []
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                for sz in (-1.0, 1.0):
                    for i in range(3):
                        e0[i] = pa[i] + Ra[i, 0] * sx * pra[0] + Ra[i, 1] * sy * pra[1] + Ra[i, 2] * sz * pra[2]
                    h = (e0[0] - pb[0]) * Rb[0, 2] + (e0[1] - pb[1]) * Rb[1, 2] + (e0[2] - pb[2]) * Rb[2, 2]
                    if h < 0.0:
                        pos = np.empty(3)
                        nrm = np.empty(3)
                        for i in range(3):
                            nrm[i] = Rb[i, 2]
                            pos[i] = e0[i] - Rb[i, 2] * h
                        out.append((pos, nrm, -h))
        return out

    raise UnsupportedGeomPair(ka, kb)
