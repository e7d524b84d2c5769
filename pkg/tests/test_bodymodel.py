import math

import pytest
from hypothesis import given, strategies as st

from infantsim.bodymodel import (
    BodyFileError,
    BodyValidationError,
    dumps_body_spec,
    joint_table,
    load_default_body,
    loads_body_spec,
    mirror_pairs,
)

from rom_table import DOF_BREAKDOWN, DOF_COUNT, ESTIMATED_ROM, MEASURED, base_name


def test_dof_counts(mitten_spec, full_spec):
    assert mitten_spec.dof_count() == DOF_COUNT["mitten"]
    assert full_spec.dof_count() == DOF_COUNT["full"]
    assert sum(DOF_BREAKDOWN["mitten"].values()) == DOF_COUNT["mitten"]
    assert sum(DOF_BREAKDOWN["full"].values()) == DOF_COUNT["full"]


def test_default_variant_is_mitten():
    spec = load_default_body()
    assert spec.hand_variant == "mitten"
    assert not spec.root_free
    assert spec.root_name() == "pelvis"


@pytest.mark.parametrize("variant", ["mitten", "full"])
def test_measured_values_exact(variant, mitten_spec, full_spec):
    spec = mitten_spec if variant == "mitten" else full_spec
    covered = set()
    for name, lo, hi, tmin, tmax, locked, estimated in joint_table(spec):
        base = base_name(name)
        if base not in MEASURED:
            continue
        covered.add(base)
        assert (lo, hi, tmin, tmax) == MEASURED[base], name
        assert not estimated, name
        assert not locked, name
    assert covered == set(MEASURED)


def test_estimated_joints(mitten_spec):
    table = {row[0]: row for row in joint_table(mitten_spec)}
    for name, row in table.items():
        base = base_name(name)
        if base in ESTIMATED_ROM:
            assert (row[1], row[2]) == ESTIMATED_ROM[base], name
            assert row[6], name
    # strength is measured where a measurement exists, estimated elsewhere
    for name, row in table.items():
        assert row[6] == (base_name(name) not in MEASURED), name


def test_all_joints_sane(full_spec):
    for name, lo, hi, tmin, tmax, _, _ in joint_table(full_spec):
        assert lo < 0.0 < hi, name
        assert tmin < 0.0 < tmax, name


def test_mirror_pairs_complete(full_spec):
    pairs = mirror_pairs(full_spec)
    sided = [j for j in full_spec.joints if j.name.startswith(("right_", "left_"))]
    assert 2 * len(pairs) == len(sided)
    for name_a, name_b in pairs:
        a, b = full_spec.joint(name_a), full_spec.joint(name_b)
        assert (a.rom_min_deg, a.rom_max_deg) == (b.rom_min_deg, b.rom_max_deg)
        assert (a.torque_min, a.torque_max) == (b.torque_min, b.torque_max)
        assert a.estimated == b.estimated
        ax, ay, az = a.axis
        assert b.axis == pytest.approx((-ax, ay, -az))


def test_mirror_positions(full_spec):
    for name, body in full_spec.bodies.items():
        if not name.startswith("right_"):
            continue
        other = full_spec.bodies["left_" + name[len("right_"):]]
        assert other.pos == pytest.approx((body.pos[0], -body.pos[1], body.pos[2]))
        assert other.geom.kind == body.geom.kind
        assert other.geom.dims == body.geom.dims
        assert other.geom.mass == body.geom.mass


@pytest.mark.parametrize("variant", ["mitten", "full"])
def test_dump_load_round_trip(variant):
    spec = load_default_body(hand_variant=variant)
    text = dumps_body_spec(spec)
    again = loads_body_spec(text)
    assert dumps_body_spec(again) == text
    assert joint_table(again) == joint_table(spec)
    assert again.actuators == spec.actuators
    assert again.skin_mm == spec.skin_mm
    assert again.bodies == spec.bodies


def test_variant_filtering(mitten_spec, full_spec):
    mitten_names = set(mitten_spec.joint_names())
    full_names = set(full_spec.joint_names())
    assert "right_finger" in mitten_names and "right_finger" not in full_names
    assert "right_index_pip" in full_names and "right_index_pip" not in mitten_names
    assert mitten_spec.bodies["right_hand"].geom.kind == "capsule"
    assert full_spec.bodies["right_hand"].geom.kind == "box"


def test_skin_density(mitten_spec):
    assert mitten_spec.skin_density("pelvis") == pytest.approx(1.0 / 0.040**2)
    assert mitten_spec.skin_density("right_eye") == 0.0


def test_actuator_overrides(mitten_spec):
    act = mitten_spec.actuators["right_knee"]
    assert act.moment_arm == 0.032
    assert act.vmax_pos == act.vmax_neg > 0.0  # calibrated, symmetric
    assert act.fmax_pos is None  # derived at build time
    assert mitten_spec.actuators["neck_flexion"].moment_arm == 0.018


MINIMAL = """
format 1
model tiny
root_free false

section bodies
body base parent none at 0.0 0.0 1.0 geom box 0.02 0.02 0.02 mass 1.0
body arm parent base at 0.0 0.0 0.0 geom capsule 0.01 0.05 mass 0.5

section joints
joint swing parent base child arm axis 0.0 1.0 0.0 rom -90 90 torque -2.0 2.0

section actuators

section skin

section locks
"""


def test_minimal_spec_loads():
    spec = loads_body_spec(MINIMAL)
    assert spec.dof_count() == 1
    assert spec.joint("swing").rom_min == pytest.approx(-math.pi / 2)


@pytest.mark.parametrize(
    "breakage",
    [
        ("parent base", "parent nowhere"),  # unknown parent body
        ("parent none", "parent base"),  # no root
        ("rom -90 90", "rom 90 -90"),  # inverted range
        ("torque -2.0 2.0", "torque 1.0 2.0"),  # torque range off zero
        ("child arm", "child nowhere"),  # joint references unknown body
        ("capsule 0.01 0.05", "capsule -0.01 0.05"),  # negative dimension
        ("format 1", "format 2"),  # unsupported format version
    ],
)
def test_invalid_specs_rejected(breakage):
    old, new = breakage
    with pytest.raises((BodyFileError, BodyValidationError)):
        loads_body_spec(MINIMAL.replace(old, new))


def test_lock_outside_rom_rejected():
    with pytest.raises((BodyFileError, BodyValidationError)):
        loads_body_spec(MINIMAL + "lock swing at 135\n")


def test_locks_reduce_dof():
    spec = loads_body_spec(MINIMAL + "lock swing at 10\n")
    assert spec.dof_count() == 0
    assert spec.locked_joints == {"swing": 10.0}


@given(
    lo=st.floats(min_value=-180.0, max_value=-1.0),
    hi=st.floats(min_value=1.0, max_value=180.0),
    tneg=st.floats(min_value=-50.0, max_value=-0.01),
    tpos=st.floats(min_value=0.01, max_value=50.0),
)
def test_values_round_trip_exactly(lo, hi, tneg, tpos):
    text = MINIMAL.replace("rom -90 90", f"rom {lo!r} {hi!r}").replace(
        "torque -2.0 2.0", f"torque {tneg!r} {tpos!r}"
    )
    spec = loads_body_spec(text)
    j = spec.joint("swing")
    assert (j.rom_min_deg, j.rom_max_deg, j.torque_min, j.torque_max) == (lo, hi, tneg, tpos)
    again = loads_body_spec(dumps_body_spec(spec)).joint("swing")
    assert again == j
