"""Frozen range-of-motion and peak-torque values for the default body.

These are the published infant/young-child measurements the default body
file encodes, frozen here independently so tests catch any drift in the
shipped data. Keys are joint base names; `right_`/`left_` prefixed joints
share one entry. Values are (rom_min_deg, rom_max_deg, torque_min, torque_max).
"""

MEASURED = {
    "trunk_flexion": (-61.0, 34.0, -8.13, 10.58),
    "trunk_lateral": (-41.0, 41.0, -7.25, 7.25),
    "trunk_rotation": (-36.0, 36.0, -3.63, 3.63),
    "neck_flexion": (-70.0, 80.0, -1.17, 2.10),
    "neck_lateral": (-70.0, 70.0, -1.17, 1.17),
    "neck_rotation": (-111.0, 111.0, -1.17, 1.17),
    "shoulder_horizontal": (-118.0, 28.0, -1.8, 1.8),
    "shoulder_flexion": (-183.0, 84.0, -2.75, 4.0),
    "shoulder_rotation": (-99.0, 67.0, -1.6, 2.5),
    "elbow": (-146.0, 5.0, -3.6, 3.0),
    "wrist_flexion": (-92.0, 86.0, -1.24, 0.7),
    "wrist_deviation": (-53.0, 48.0, -0.83, 0.95),
    "wrist_rotation": (-90.0, 90.0, -0.7, 0.7),
    "hip_flexion": (-133.0, 20.0, -8.0, 8.0),
    "hip_abduction": (-51.0, 17.0, -6.24, 6.24),
    "hip_rotation": (-32.0, 41.0, -2.66, 3.54),
    "knee": (-145.0, 4.0, -6.5, 10.0),
    "ankle_flexion": (-63.0, 32.0, -3.78, 1.89),
    "ankle_inversion": (-33.0, 31.0, -1.06, 1.16),
    "ankle_rotation": (-20.0, 30.0, -1.2, 1.2),
}

# ROM for joints whose strength is estimated rather than measured.
ESTIMATED_ROM = {
    "eye_horizontal": (-45.0, 45.0),
    "eye_vertical": (-47.0, 33.0),
    "eye_torsion": (-8.0, 8.0),
}

DOF_COUNT = {"mitten": 44, "full": 88}

# per-side DoF decomposition used by the counts above
DOF_BREAKDOWN = {
    "mitten": {"trunk": 3, "neck": 3, "eyes": 6, "shoulder": 6, "elbow": 2, "wrist": 6, "fingers": 2, "hip": 6, "knee": 2, "ankle": 6, "toes": 2},
    "full": {"trunk": 3, "neck": 3, "eyes": 6, "shoulder": 6, "elbow": 2, "wrist": 6, "fingers": 46, "hip": 6, "knee": 2, "ankle": 6, "toes": 2},
}


def base_name(joint_name):
    for prefix in ("right_", "left_"):
        if joint_name.startswith(prefix):
            return joint_name[len(prefix):]
    return joint_name
