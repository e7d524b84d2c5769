"""Backend equivalence: the compiled kernels must match the numpy reference."""

import numpy as np
import pytest

from infantsim.physics import UnsupportedGeomPair, build_model
from infantsim.physics.kernels import available_backends, backend_name, get_backend

pytestmark = pytest.mark.skipif(
    "compiled" not in available_backends(), reason="compiled kernels not built"
)


@pytest.fixture(scope="module")
def backends():
    return get_backend("python"), get_backend("compiled")


def _random_state(model, seed):
    rng = np.random.default_rng(seed)
    q = model.qpos0.copy()
    for i in range(model.nnode):
        if model.jtype[i] == 1:
            lo, hi = model.rom[i]
            if np.isfinite(lo):
                q[model.qadr[i]] = rng.uniform(0.6 * lo, 0.6 * hi)
            else:
                q[model.qadr[i]] = rng.uniform(-1.0, 1.0)
        else:
            a = model.qadr[i]
            q[a : a + 3] += rng.normal(0.0, 0.3, 3)
            quat = rng.normal(0.0, 1.0, 4)
            q[a + 3 : a + 7] = quat / np.linalg.norm(quat)
    qd = rng.normal(0.0, 0.8, model.nv)
    tau = rng.normal(0.0, 1.5, model.nv)
    f_ext = rng.normal(0.0, 3.0, (model.nnode, 6))
    return q, qd, tau, f_ext


def _models(spec):
    return [build_model(spec, ground=False), build_model(spec, root_free=True, ground=False)]


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("root_free", [False, True])
def test_dynamics_kernels_match(mitten_spec, backends, seed, root_free):
    ref, core = backends
    m = build_model(mitten_spec, root_free=root_free, ground=False)
    q, qd, tau, f_ext = _random_state(m, seed)
    g = np.array([0.0, 0.0, -9.81])

    out = {}
    for k in (ref, core):
        R_w, p_w, v_nd, R_rel, p_rel = k.fk(m.parent, m.jtype, m.qadr, m.vadr, m.axis, m.Rtree, m.ptree, q, qd)
        qacc = k.aba(m.parent, m.jtype, m.vadr, m.axis, m.Isp, m.armature, R_rel, p_rel, v_nd, tau, f_ext, g)
        bias = k.rnea_bias(m.parent, m.jtype, m.vadr, m.axis, m.Isp, R_rel, p_rel, v_nd, f_ext, g, m.nv)
        M = k.crba(m.parent, m.jtype, m.vadr, m.axis, m.Isp, m.armature, R_rel, p_rel, m.nv)
        out[backend_name(k)] = (R_w, p_w, v_nd, qacc, bias, M)

    for a, b in zip(out["python"], out["compiled"]):
        np.testing.assert_allclose(np.asarray(b), np.asarray(a), rtol=1e-9, atol=1e-9)


def _random_pose(rng):
    quat = rng.normal(0.0, 1.0, 4)
    quat /= np.linalg.norm(quat)
    w, x, y, z = quat
    R = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
    return R, rng.uniform(-0.05, 0.05, 3)


GEOM_CASES = [
    (0, np.array([0.05, 0.0, 0.0]), 0, np.array([0.06, 0.0, 0.0])),  # sphere-sphere
    (0, np.array([0.04, 0.0, 0.0]), 1, np.array([0.03, 0.08, 0.0])),  # sphere-capsule
    (0, np.array([0.05, 0.0, 0.0]), 2, np.array([0.04, 0.05, 0.06])),  # sphere-box
    (0, np.array([0.05, 0.0, 0.0]), 3, np.zeros(3)),  # sphere-plane
    (1, np.array([0.03, 0.06, 0.0]), 1, np.array([0.025, 0.07, 0.0])),  # capsule-capsule
    (1, np.array([0.03, 0.06, 0.0]), 2, np.array([0.05, 0.05, 0.05])),  # capsule-box
    (1, np.array([0.03, 0.06, 0.0]), 3, np.zeros(3)),  # capsule-plane
    (2, np.array([0.04, 0.05, 0.06]), 3, np.zeros(3)),  # box-plane
    (1, np.array([0.03, 0.06, 0.0]), 0, np.array([0.04, 0.0, 0.0])),  # swapped order
]


@pytest.mark.parametrize("ka,prm_a,kb,prm_b", GEOM_CASES)
def test_contact_pair_matches(backends, ka, prm_a, kb, prm_b):
    ref, core = backends
    rng = np.random.default_rng(ka * 7 + kb)
    hits = 0
    for _ in range(60):
        R_a, p_a = _random_pose(rng)
        R_b, p_b = _random_pose(rng)
        if kb == 3:
            R_b = np.eye(3)
            p_b = np.zeros(3)
            p_a[2] = rng.uniform(-0.02, 0.08)
        got_ref = ref.contact_pair(ka, R_a, p_a, prm_a, kb, R_b, p_b, prm_b)
        got_core = core.contact_pair(ka, R_a, p_a, prm_a, kb, R_b, p_b, prm_b)
        assert len(got_ref) == len(got_core)
        hits += len(got_ref)
        # the capsule-box ternary search can branch on last-bit sdist
        # differences, so geometric outputs agree to ~1e-8, not 1e-15
        for (pos_r, n_r, pen_r), (pos_c, n_c, pen_c) in zip(got_ref, got_core):
            np.testing.assert_allclose(pos_c, pos_r, rtol=1e-6, atol=1e-7)
            np.testing.assert_allclose(n_c, n_r, rtol=1e-6, atol=1e-7)
            assert pen_c == pytest.approx(pen_r, rel=1e-6, abs=1e-9)
    assert hits > 0


def test_compiled_rejects_box_box(backends):
    _, core = backends
    prm = np.array([0.02, 0.02, 0.02])
    with pytest.raises(UnsupportedGeomPair):
        core.contact_pair(2, np.eye(3), np.zeros(3), prm, 2, np.eye(3), np.array([0.0, 0.0, 0.01]), prm)


def test_world_trajectories_match(mitten_spec):
    if "compiled" not in available_backends():
        pytest.skip("compiled kernels not built")
    from infantsim.physics import World

    rng = np.random.default_rng(3)
    tau = rng.normal(0.0, 0.5, 44)
    qs = {}
    # contact-rich dynamics are chaotic, so keep the horizon short: kernel
    # roundoff (~1e-15) must not grow past 1e-7 in a quarter second
    for name in ("python", "compiled"):
        w = World(mitten_spec, ground=True, backend=name)
        for _ in range(50):
            w.step(tau)
        qs[name] = w.qpos.copy()
    np.testing.assert_allclose(qs["compiled"], qs["python"], rtol=1e-7, atol=1e-7)
