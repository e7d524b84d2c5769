#!/usr/bin/env python
"""Generate the default infant body file (src/infantsim/data/infant.body).

The body is an 18-month-old-sized humanoid assembled from shape
primitives: box pelvis, capsule limbs, torso, hands and feet, sphere head.
Frame conventions: z up, x forward, y to the model's left. Joint range
of motion and peak voluntary torque come from published infant and
young-child measurements; extension, adduction and internal rotation
are positive, flexion, abduction and external rotation negative.
Entries marked 'estimated' are interpolated guesses where no
measurement is available (eyes, fingers, toes).

Left limbs are generated by mirroring the right side through the x-z
plane: positions flip y, hinge axes flip x and z (axial vectors), so
mirrored joints share identical ROM and torque signs.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from infantsim.bodymodel import loads_body_spec  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "infantsim", "data", "infant.body")

# Quaternion (w x y z) rotating local z onto +x, for capsules lying forward.
ZTOX = (0.7071067811865476, 0.0, 0.7071067811865476, 0.0)


def mirror_name(name):
    if name.startswith("right_"):
        return "left_" + name[len("right_") :]
    if name.startswith("left_"):
        return "right_" + name[len("left_") :]
    return name


def mirror_pos(p):
    x, y, z = p
    return (x, -y, z)


def mirror_axis(a):
    x, y, z = a
    return (-x, y, -z)


def mirror_quat(q):
    w, x, y, z = q
    return (w, -x, y, -z)


def fmt(v):
    return " ".join(repr(float(x)) for x in v)


class Builder:
    def __init__(self):
        self.bodies = []
        self.joints = []
        self.acts = []
        self.skins = []

    def body(self, name, parent, at, geom, mass, gpos=None, grot=None, variants=None):
        line = f"body {name} parent {parent} at {fmt(at)} geom {geom}"
        if grot:
            line += f" grot {grot}"
        if gpos:
            line += f" gpos {fmt(gpos)}"
        line += f" mass {mass}"
        if variants:
            line += f" variants {variants}"
        self.bodies.append(line)

    def joint(self, name, parent, child, axis, rom, torque, mirror=None, estimated=False, variants=None):
        line = (
            f"joint {name} parent {parent} child {child} axis {fmt(axis)}"
            f" rom {rom[0]} {rom[1]} torque {torque[0]} {torque[1]}"
        )
        if mirror:
            line += f" mirror {mirror}"
        if estimated:
            line += " estimated"
        if variants:
            line += f" variants {variants}"
        self.joints.append(line)

    def act(self, joint, settings, variants=None):
        line = f"actuator {joint} {settings}"
        if variants:
            line += f" variants {variants}"
        self.acts.append(line)

    def skin(self, body, mm, variants=None):
        line = f"skin {body} none" if mm is None else f"skin {body} discrimination_mm {mm}"
        if variants:
            line += f" variants {variants}"
        self.skins.append(line)

    # -- mirrored right/left helpers ------------------------------------

    def side_body(self, name, parent, at, geom, mass, gpos=None, grot_q=None, variants=None):
        grot = fmt(grot_q) if grot_q else None
        self.body(name, parent, at, geom, mass, gpos=gpos, grot=grot, variants=variants)
        self.body(
            mirror_name(name),
            mirror_name(parent),
            mirror_pos(at),
            geom,
            mass,
            gpos=mirror_pos(gpos) if gpos else None,
            grot=fmt(mirror_quat(grot_q)) if grot_q else None,
            variants=variants,
        )

    def side_joint(self, name, parent, child, axis, rom, torque, estimated=False, variants=None):
        other = mirror_name(name)
        self.joint(name, parent, child, axis, rom, torque, mirror=other, estimated=estimated, variants=variants)
        self.joint(
            other,
            mirror_name(parent),
            mirror_name(child),
            mirror_axis(axis),
            rom,
            torque,
            mirror=name,
            estimated=estimated,
            variants=variants,
        )

    def side_act(self, joint, settings, variants=None):
        self.act(joint, settings, variants)
        self.act(mirror_name(joint), settings, variants)

    def side_skin(self, body, mm, variants=None):
        self.skin(body, mm, variants)
        self.skin(mirror_name(body), mm, variants)


def build():
    b = Builder()

    # -- torso, head, eyes ----------------------------------------------
    b.body("pelvis", "none", (0.0, 0.0, 0.328), "box 0.045 0.060 0.040", 1.30)
    b.body("torso", "pelvis", (0.0, 0.0, 0.065), "capsule 0.062 0.050", 2.60, gpos=(0.0, 0.0, 0.085))
    b.body("head", "torso", (0.0, 0.0, 0.19), "sphere 0.068", 1.70, gpos=(0.0, 0.0, 0.055))
    b.side_body("right_eye", "head", (0.054, -0.026, 0.065), "sphere 0.011", 0.008)

    b.joint("trunk_flexion", "pelvis", "torso", (0, -1, 0), (-61, 34), (-8.13, 10.58))
    b.joint("trunk_lateral", "pelvis", "torso", (1, 0, 0), (-41, 41), (-7.25, 7.25))
    b.joint("trunk_rotation", "pelvis", "torso", (0, 0, 1), (-36, 36), (-3.63, 3.63))
    b.joint("neck_flexion", "torso", "head", (0, -1, 0), (-70, 80), (-1.17, 2.10))
    b.joint("neck_lateral", "torso", "head", (1, 0, 0), (-70, 70), (-1.17, 1.17))
    b.joint("neck_rotation", "torso", "head", (0, 0, 1), (-111, 111), (-1.17, 1.17))
    b.side_joint("right_eye_horizontal", "head", "right_eye", (0, 0, 1), (-45, 45), (-0.03, 0.03), estimated=True)
    b.side_joint("right_eye_vertical", "head", "right_eye", (0, -1, 0), (-47, 33), (-0.03, 0.03), estimated=True)
    b.side_joint("right_eye_torsion", "head", "right_eye", (1, 0, 0), (-8, 8), (-0.02, 0.02), estimated=True)

    # -- arms --------------------------------------------------------------
    # Hands, feet and toes are capsules: the contact model supports every
    # primitive pair except box-box, so at most one box (the pelvis, the
    # full-hand palm) may appear on any potentially colliding pair.
    b.side_body("right_upper_arm", "torso", (0.0, -0.095, 0.155), "capsule 0.021 0.040", 0.32, gpos=(0.0, 0.0, -0.058))
    b.side_body("right_lower_arm", "right_upper_arm", (0.0, 0.0, -0.115), "capsule 0.017 0.031", 0.21, gpos=(0.0, 0.0, -0.048))
    b.side_body("right_hand", "right_lower_arm", (0.0, 0.0, -0.096), "capsule 0.013 0.016", 0.05, gpos=(0.0, 0.0, -0.028), variants="mitten")
    b.side_body("right_hand", "right_lower_arm", (0.0, 0.0, -0.096), "box 0.022 0.010 0.028", 0.05, gpos=(0.0, 0.0, -0.028), variants="full")
    b.side_body("right_fingers", "right_hand", (0.0, 0.0, -0.058), "capsule 0.010 0.012", 0.02, gpos=(0.0, 0.0, -0.012), variants="mitten")

    b.side_joint("right_shoulder_horizontal", "torso", "right_upper_arm", (0, 0, -1), (-118, 28), (-1.8, 1.8))
    b.side_joint("right_shoulder_flexion", "torso", "right_upper_arm", (0, 1, 0), (-183, 84), (-2.75, 4.0))
    b.side_joint("right_shoulder_rotation", "torso", "right_upper_arm", (0, 0, 1), (-99, 67), (-1.6, 2.5))
    b.side_joint("right_elbow", "right_upper_arm", "right_lower_arm", (0, 1, 0), (-146, 5), (-3.6, 3.0))
    b.side_joint("right_wrist_flexion", "right_lower_arm", "right_hand", (-1, 0, 0), (-92, 86), (-1.24, 0.7))
    b.side_joint("right_wrist_deviation", "right_lower_arm", "right_hand", (0, -1, 0), (-53, 48), (-0.83, 0.95))
    b.side_joint("right_wrist_rotation", "right_lower_arm", "right_hand", (0, 0, 1), (-90, 90), (-0.7, 0.7))
    b.side_joint("right_finger", "right_hand", "right_fingers", (-1, 0, 0), (-110, 5), (-1.0, 0.5), estimated=True, variants="mitten")

    # -- full hands --------------------------------------------------------
    # Digits hang along -z from the palm bottom, spread across x; the thumb
    # points forward (+x) from the radial edge. All values estimated.
    digits = [
        ("index", 0.0165, False, (-0.45, 0.25), (-0.30, 0.17), (-0.18, 0.10)),
        ("middle", 0.0055, False, (-0.45, 0.25), (-0.30, 0.17), (-0.18, 0.10)),
        ("ring", -0.0055, True, (-0.40, 0.22), (-0.26, 0.15), (-0.16, 0.09)),
        ("little", -0.0165, True, (-0.30, 0.18), (-0.20, 0.12), (-0.12, 0.07)),
    ]
    for digit, x, has_cmc, t_mcp, t_pip, t_dip in digits:
        prox_parent = "right_hand"
        prox_at = (x, 0.0, -0.056)
        if has_cmc:
            meta = f"right_{digit}_meta"
            b.side_body(meta, "right_hand", (x, 0.0, -0.044), "capsule 0.005 0.005", 0.003, gpos=(0.0, 0.0, -0.005), variants="full")
            b.side_joint(f"right_{digit}_cmc", "right_hand", meta, (-1, 0, 0), (-30, 5), (-0.25, 0.15), estimated=True, variants="full")
            prox_parent = meta
            prox_at = (0.0, 0.0, -0.018)
        prox = f"right_{digit}_prox"
        mid = f"right_{digit}_mid"
        tip = f"right_{digit}_tip"
        b.side_body(prox, prox_parent, prox_at, "capsule 0.005 0.006", 0.005, gpos=(0.0, 0.0, -0.008), variants="full")
        b.side_body(mid, prox, (0.0, 0.0, -0.021), "capsule 0.0045 0.004", 0.004, gpos=(0.0, 0.0, -0.006), variants="full")
        b.side_body(tip, mid, (0.0, 0.0, -0.016), "capsule 0.004 0.003", 0.003, gpos=(0.0, 0.0, -0.005), variants="full")
        b.side_joint(f"right_{digit}_mcp_abd", prox_parent, prox, (0, 1, 0), (-20, 20), (-0.15, 0.15), estimated=True, variants="full")
        b.side_joint(f"right_{digit}_mcp_flex", prox_parent, prox, (-1, 0, 0), (-90, 30), t_mcp, estimated=True, variants="full")
        b.side_joint(f"right_{digit}_pip", prox, mid, (-1, 0, 0), (-100, 5), t_pip, estimated=True, variants="full")
        b.side_joint(f"right_{digit}_dip", mid, tip, (-1, 0, 0), (-80, 5), t_dip, estimated=True, variants="full")

    thumb_rot = (0.7071067811865476, 0.0, 0.7071067811865476, 0.0)
    b.side_body("right_thumb_base", "right_hand", (0.020, 0.004, -0.020), "capsule 0.0065 0.004", 0.005, gpos=(0.008, 0.0, 0.0), grot_q=thumb_rot, variants="full")
    b.side_body("right_thumb_prox", "right_thumb_base", (0.017, 0.002, -0.003), "capsule 0.0055 0.0035", 0.004, gpos=(0.007, 0.0, 0.0), grot_q=thumb_rot, variants="full")
    b.side_body("right_thumb_tip", "right_thumb_prox", (0.014, 0.0, -0.002), "capsule 0.0045 0.003", 0.003, gpos=(0.006, 0.0, 0.0), grot_q=thumb_rot, variants="full")
    b.side_joint("right_thumb_cmc_abd", "right_hand", "right_thumb_base", (0, 0, 1), (-45, 30), (-0.35, 0.35), estimated=True, variants="full")
    b.side_joint("right_thumb_cmc_flex", "right_hand", "right_thumb_base", (0, 1, 0), (-50, 30), (-0.45, 0.30), estimated=True, variants="full")
    b.side_joint("right_thumb_mcp_abd", "right_thumb_base", "right_thumb_prox", (0, 0, 1), (-25, 25), (-0.15, 0.15), estimated=True, variants="full")
    b.side_joint("right_thumb_mcp_flex", "right_thumb_base", "right_thumb_prox", (0, 1, 0), (-60, 15), (-0.35, 0.20), estimated=True, variants="full")
    b.side_joint("right_thumb_ip", "right_thumb_prox", "right_thumb_tip", (0, 1, 0), (-80, 20), (-0.25, 0.15), estimated=True, variants="full")

    # -- legs --------------------------------------------------------------
    b.side_body("right_thigh", "pelvis", (0.0, -0.047, -0.030), "capsule 0.028 0.040", 0.70, gpos=(0.0, 0.0, -0.068))
    b.side_body("right_shin", "right_thigh", (0.0, 0.0, -0.138), "capsule 0.020 0.042", 0.42, gpos=(0.0, 0.0, -0.062))
    b.side_body("right_foot", "right_shin", (0.0, 0.0, -0.128), "capsule 0.020 0.030", 0.18, gpos=(0.028, 0.0, -0.012), grot_q=ZTOX)
    b.side_body("right_toes", "right_foot", (0.080, 0.0, -0.020), "capsule 0.012 0.008", 0.02, gpos=(0.008, 0.0, 0.0), grot_q=ZTOX)

    b.side_joint("right_hip_flexion", "pelvis", "right_thigh", (0, 1, 0), (-133, 20), (-8.0, 8.0))
    b.side_joint("right_hip_abduction", "pelvis", "right_thigh", (1, 0, 0), (-51, 17), (-6.24, 6.24))
    b.side_joint("right_hip_rotation", "pelvis", "right_thigh", (0, 0, 1), (-32, 41), (-2.66, 3.54))
    b.side_joint("right_knee", "right_thigh", "right_shin", (0, -1, 0), (-145, 4), (-6.5, 10.0))
    b.side_joint("right_ankle_flexion", "right_shin", "right_foot", (0, -1, 0), (-63, 32), (-3.78, 1.89))
    b.side_joint("right_ankle_inversion", "right_shin", "right_foot", (1, 0, 0), (-33, 31), (-1.06, 1.16))
    b.side_joint("right_ankle_rotation", "right_shin", "right_foot", (0, 0, 1), (-20, 30), (-1.2, 1.2))
    b.side_joint("right_toes_flexion", "right_foot", "right_toes", (0, -1, 0), (-40, 25), (-0.4, 0.3), estimated=True)

    # -- actuator group overrides (moment arms by joint size) ---------------
    for j in ("trunk_flexion", "trunk_lateral", "trunk_rotation"):
        b.act(j, "moment_arm 0.040")
    for j in ("neck_flexion", "neck_lateral", "neck_rotation"):
        b.act(j, "moment_arm 0.018")
    for j in ("right_eye_horizontal", "right_eye_vertical", "right_eye_torsion"):
        b.side_act(j, "moment_arm 0.004")
    for j in ("right_shoulder_horizontal", "right_shoulder_flexion", "right_shoulder_rotation"):
        b.side_act(j, "moment_arm 0.025")
    b.side_act("right_elbow", "moment_arm 0.022")
    for j in ("right_wrist_flexion", "right_wrist_deviation", "right_wrist_rotation"):
        b.side_act(j, "moment_arm 0.012")
    b.side_act("right_finger", "moment_arm 0.010", variants="mitten")
    for digit, _, has_cmc, _, _, _ in digits:
        names = [f"right_{digit}_mcp_abd", f"right_{digit}_mcp_flex", f"right_{digit}_pip", f"right_{digit}_dip"]
        if has_cmc:
            names.append(f"right_{digit}_cmc")
        for j in names:
            b.side_act(j, "moment_arm 0.006", variants="full")
    for j in ("right_thumb_cmc_abd", "right_thumb_cmc_flex", "right_thumb_mcp_abd", "right_thumb_mcp_flex", "right_thumb_ip"):
        b.side_act(j, "moment_arm 0.006", variants="full")
    for j in ("right_hip_flexion", "right_hip_abduction", "right_hip_rotation"):
        b.side_act(j, "moment_arm 0.038")
    b.side_act("right_knee", "moment_arm 0.032")
    for j in ("right_ankle_flexion", "right_ankle_inversion", "right_ankle_rotation"):
        b.side_act(j, "moment_arm 0.025")
    b.side_act("right_toes_flexion", "moment_arm 0.008")

    # -- skin: two-point discrimination distances in mm ---------------------
    b.skin("pelvis", 40)
    b.skin("torso", 40)
    b.skin("head", 25)
    b.side_skin("right_eye", None)
    b.side_skin("right_upper_arm", 38)
    b.side_skin("right_lower_arm", 30)
    b.side_skin("right_hand", 10)
    b.side_skin("right_fingers", 7, variants="mitten")
    for digit, _, has_cmc, _, _, _ in digits:
        parts = [f"right_{digit}_prox", f"right_{digit}_mid"]
        if has_cmc:
            parts.append(f"right_{digit}_meta")
        for p in parts:
            b.side_skin(p, 7, variants="full")
        b.side_skin(f"right_{digit}_tip", 5, variants="full")
    for p in ("right_thumb_base", "right_thumb_prox"):
        b.side_skin(p, 7, variants="full")
    b.side_skin("right_thumb_tip", 5, variants="full")
    b.side_skin("right_thigh", 40)
    b.side_skin("right_shin", 36)
    b.side_skin("right_foot", 20)
    b.side_skin("right_toes", 15)

    lines = [
        "# Default infant body. Generated by tools/generate_body.py; do not edit by hand.",
        "format 1",
        "model infant",
        "root_free false",
        "hand_variant mitten",
        "",
        "section bodies",
        *b.bodies,
        "",
        "section joints",
        *b.joints,
        "",
        "section actuators",
        "defaults stiffness auto damping auto equilibrium auto fmax auto auto"
        " vmax 1.0 1.0 moment_arm 0.012 l_range 0.75 1.05 fl_width 0.45"
        " fv_shape 0.25 fv_ecc 1.5 fp_gain 3.0 act_tau 0.01 residual 0.05",
        *b.acts,
        "",
        "section skin",
        "skin_default discrimination_mm 40.0",
        *b.skins,
        "",
        "section locks",
        "",
    ]
    return "\n".join(lines)


def main():
    text = build()
    mitten = loads_body_spec(text, hand_variant="mitten")
    full = loads_body_spec(text, hand_variant="full")
    assert mitten.dof_count() == 44, mitten.dof_count()
    assert full.dof_count() == 88, full.dof_count()
    total_mass = sum(x.geom.mass for x in mitten.bodies.values() if x.geom)
    with open(OUT, "w", encoding="utf-8") as f:
        f.write(text)
    print(f"wrote {OUT}")
    print(f"mitten: {len(mitten.bodies)} bodies, {len(mitten.joints)} joints, {mitten.dof_count()} dof, {total_mass:.2f} kg")
    print(f"full:   {len(full.bodies)} bodies, {len(full.joints)} joints, {full.dof_count()} dof")


if __name__ == "__main__":
    main()
