"""Declarative body description: types, file format, validation.

A body file is a line-oriented UTF-8 text file (grammar in
``docs/body_format.md``). Angles are stored in degrees in the file and
exposed in radians in code; the original degree values are kept on the
spec so that save/load round-trips are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rotations import quat_normalize

GEOM_KINDS = ("sphere", "capsule", "box", "plane")
GEOM_NDIMS = {"sphere": 1, "capsule": 2, "box": 3, "plane": 0}
HAND_VARIANTS = ("mitten", "full")


class BodyFileError(ValueError):
    """Malformed body-description file."""


class BodyValidationError(ValueError):
    """Structurally parsed but semantically invalid body description."""


@dataclass(frozen=True)
class GeomPrimitive:
    kind: str
    dims: tuple  # sphere: (r,); capsule: (r, half_length); box: (hx, hy, hz)
    mass: float
    pos: tuple = (0.0, 0.0, 0.0)  # in the owning body frame
    quat: tuple = (1.0, 0.0, 0.0, 0.0)

    def surface_area(self):
        if self.kind == "sphere":
            (r,) = self.dims
            return 4.0 * math.pi * r * r
        if self.kind == "capsule":
            r, hl = self.dims
            return 4.0 * math.pi * r * r + 2.0 * math.pi * r * (2.0 * hl)
        if self.kind == "box":
            hx, hy, hz = self.dims
            return 8.0 * (hx * hy + hy * hz + hx * hz)
        raise ValueError(f"no surface area for geom kind {self.kind!r}")


@dataclass(frozen=True)
class Body:
    name: str
    parent: str | None  # None for the root body
    pos: tuple = (0.0, 0.0, 0.0)  # attachment point in parent frame (and joint anchor)
    quat: tuple = (1.0, 0.0, 0.0, 0.0)
    geom: GeomPrimitive | None = None


@dataclass(frozen=True)
class JointSpec:
    name: str
    parent: str
    child: str
    axis: tuple  # unit vector, parent frame
    rom_min_deg: float
    rom_max_deg: float
    torque_min: float  # N*m, < 0 (flexion/abduction/external side)
    torque_max: float  # N*m, > 0
    damping: float = 0.0  # N*m*s/rad, passive tissue viscosity
    mirror_of: str | None = None
    estimated: bool = False

    @property
    def rom_min(self):
        return math.radians(self.rom_min_deg)

    @property
    def rom_max(self):
        return math.radians(self.rom_max_deg)


@dataclass(frozen=True)
class ActuatorParams:
    """Per-joint parameters for both actuation models.

    ``None`` means "derive automatically at model build time" (allowed for
    spring stiffness/damping, equilibrium and muscle fmax).
    """

    joint: str
    enabled: bool = True
    spring_stiffness: float | None = None  # N*m/rad
    spring_damping: float | None = None  # N*m*s/rad
    equilibrium_deg: float | None = None
    fmax_pos: float | None = None  # N, agonist (positive-torque side)
    fmax_neg: float | None = None
    vmax_pos: float = 1.0  # normalized muscle lengths / s
    vmax_neg: float = 1.0
    moment_arm: float = 0.012  # m
    l_lo: float = 0.75  # normalized length at full positive excursion
    l_hi: float = 1.05
    fl_width: float = 0.45
    fv_shape: float = 0.25
    fv_ecc: float = 1.5  # eccentric plateau cap
    fp_gain: float = 3.0
    act_tau: float = 0.010  # activity time constant, s
    residual: float = 0.05  # retained spring-damper fraction under the muscle model

    @property
    def equilibrium(self):
        return None if self.equilibrium_deg is None else math.radians(self.equilibrium_deg)


# Actuator keys that may be overridden per joint in the file.
_ACT_FLOAT_KEYS = (
    "spring_stiffness",
    "spring_damping",
    "equilibrium_deg",
    "fmax_pos",
    "fmax_neg",
    "vmax_pos",
    "vmax_neg",
    "moment_arm",
    "l_lo",
    "l_hi",
    "fl_width",
    "fv_shape",
    "fv_ecc",
    "fp_gain",
    "act_tau",
    "residual",
)
_ACT_AUTO_OK = {"spring_stiffness", "spring_damping", "equilibrium_deg", "fmax_pos", "fmax_neg"}


@dataclass
class BodySpec:
    name: str
    hand_variant: str
    root_free: bool
    bodies: dict  # name -> Body, insertion order = file order, root first
    joints: list  # list[JointSpec], file order
    actuator_defaults: ActuatorParams
    actuators: dict  # joint name -> ActuatorParams (fully resolved)
    skin_default_mm: float
    skin_mm: dict  # body name -> two-point discrimination distance (mm), or None for no skin
    locked_joints: dict = field(default_factory=dict)  # joint name -> angle (deg)

    def joint(self, name):
        for j in self.joints:
            if j.name == name:
                return j
        raise KeyError(name)

    def joint_names(self):
        return [j.name for j in self.joints]

    def unlocked_joints(self):
        return [j for j in self.joints if j.name not in self.locked_joints]

    def dof_count(self):
        """Unlocked hinge count plus 6 for a free-floating root."""
        return len(self.unlocked_joints()) + (6 if self.root_free else 0)

    def skin_density(self, body_name):
        """Sensor density in points/m^2, or 0.0 for skinless parts."""
        mm = self.skin_mm.get(body_name, self.skin_default_mm)
        if mm is None:
            return 0.0
        d = mm * 1e-3
        return 1.0 / (d * d)

    def root_name(self):
        for b in self.bodies.values():
            if b.parent is None:
                return b.name
        raise BodyValidationError("body tree has no root")


def joint_table(spec: BodySpec):
    """Joint data in degrees/N*m for comparison against published tables.

    Returns rows of ``(name, rom_min_deg, rom_max_deg, torque_min,
    torque_max, locked, estimated)``.
    """
    rows = []
    for j in spec.joints:
        rows.append(
            (
                j.name,
                j.rom_min_deg,
                j.rom_max_deg,
                j.torque_min,
                j.torque_max,
                j.name in spec.locked_joints,
                j.estimated,
            )
        )
    return rows


def mirror_pairs(spec: BodySpec):
    """All declared left/right joint pairs, each pair once, file order."""
    seen = set()
    pairs = []
    by_name = {j.name: j for j in spec.joints}
    for j in spec.joints:
        if j.mirror_of is None or j.name in seen:
            continue
        other = by_name.get(j.mirror_of)
        if other is None:
            raise BodyValidationError(f"joint {j.name!r} mirrors unknown joint {j.mirror_of!r}")
        if other.mirror_of != j.name:
            raise BodyValidationError(f"asymmetric mirror declaration between {j.name!r} and {other.name!r}")
        seen.add(j.name)
        seen.add(other.name)
        pairs.append((j.name, other.name))
    return pairs


def validate_body_spec(spec: BodySpec):
    if spec.hand_variant not in HAND_VARIANTS:
        raise BodyValidationError(f"unknown hand variant {spec.hand_variant!r}")

    roots = [b.name for b in spec.bodies.values() if b.parent is None]
    if len(roots) != 1:
        raise BodyValidationError(f"body tree must have exactly one root, found {roots}")

    # Connectivity and acyclicity: walk each body to the root.
    for b in spec.bodies.values():
        seen = {b.name}
        cur = b
        while cur.parent is not None:
            if cur.parent not in spec.bodies:
                raise BodyValidationError(f"body {cur.name!r} references missing parent {cur.parent!r}")
            if cur.parent in seen:
                raise BodyValidationError(f"body tree contains a cycle through {cur.parent!r}")
            seen.add(cur.parent)
            cur = spec.bodies[cur.parent]

    for b in spec.bodies.values():
        q = np.asarray(b.quat)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise BodyValidationError(f"body {b.name!r} attachment quaternion is not unit length")
        if b.geom is not None:
            g = b.geom
            if g.kind not in GEOM_KINDS:
                raise BodyValidationError(f"body {b.name!r} has unknown geom kind {g.kind!r}")
            if any(d <= 0 for d in g.dims):
                raise BodyValidationError(f"body {b.name!r} geom has non-positive dimensions {g.dims}")
            if g.mass < 0:
                raise BodyValidationError(f"body {b.name!r} geom has negative mass")
            if abs(np.linalg.norm(np.asarray(g.quat)) - 1.0) > 1e-9:
                raise BodyValidationError(f"body {b.name!r} geom quaternion is not unit length")

    names = set()
    for j in spec.joints:
        if j.name in names:
            raise BodyValidationError(f"duplicate joint name {j.name!r}")
        names.add(j.name)
        if j.parent not in spec.bodies:
            raise BodyValidationError(f"joint {j.name!r} references missing parent body {j.parent!r}")
        if j.child not in spec.bodies:
            raise BodyValidationError(f"joint {j.name!r} references missing child body {j.child!r}")
        if spec.bodies[j.child].parent != j.parent:
            raise BodyValidationError(
                f"joint {j.name!r} connects {j.parent!r}->{j.child!r} but body "
                f"{j.child!r} is attached to {spec.bodies[j.child].parent!r}"
            )
        if not (j.rom_min_deg < j.rom_max_deg):
            raise BodyValidationError(f"joint {j.name!r} has inverted range of motion")
        if not (j.torque_min < 0.0 < j.torque_max):
            raise BodyValidationError(f"joint {j.name!r} torque limits must straddle zero")
        if j.damping < 0.0:
            raise BodyValidationError(f"joint {j.name!r} has negative damping")
        if abs(np.linalg.norm(np.asarray(j.axis)) - 1.0) > 1e-9:
            raise BodyValidationError(f"joint {j.name!r} axis is not unit length")

    mirror_pairs(spec)  # raises on asymmetric declarations

    for name, angle_deg in spec.locked_joints.items():
        if name not in names:
            raise BodyValidationError(f"lock references unknown joint {name!r}")
        j = spec.joint(name)
        if not (j.rom_min_deg - 1e-9 <= angle_deg <= j.rom_max_deg + 1e-9):
            raise BodyValidationError(f"lock angle {angle_deg} deg outside ROM of joint {name!r}")

    for name in spec.actuators:
        if name not in names:
            raise BodyValidationError(f"actuator entry references unknown joint {name!r}")
    for name in spec.skin_mm:
        if name not in spec.bodies:
            raise BodyValidationError(f"skin entry references unknown body {name!r}")
    return spec


# ---------------------------------------------------------------------------
# File format


def _tokenize(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_float(tok, lineno, what):
    try:
        return float(tok)
    except ValueError:
        raise BodyFileError(f"line {lineno}: expected number for {what}, got {tok!r}") from None


def _parse_float_or_auto(tok, lineno, what):
    if tok == "auto":
        return None
    return _parse_float(tok, lineno, what)


def _take_variants(toks, lineno):
    """Pop a trailing ``variants <v>`` pair; returns (toks, variant or None)."""
    if len(toks) >= 2 and toks[-2] == "variants":
        v = toks[-1]
        if v not in HAND_VARIANTS + ("both",):
            raise BodyFileError(f"line {lineno}: unknown variant {v!r}")
        return toks[:-2], (None if v == "both" else v)
    return toks, None


def _kv_pairs(toks, lineno, context):
    """Parse ``key v [v ...]`` pairs where keys come from the actuator set."""
    out = {}
    i = 0
    while i < len(toks):
        key = toks[i]
        if key == "fmax":
            out["fmax_pos"] = _parse_float_or_auto(toks[i + 1], lineno, "fmax")
            out["fmax_neg"] = _parse_float_or_auto(toks[i + 2], lineno, "fmax")
            i += 3
        elif key == "vmax":
            out["vmax_pos"] = _parse_float(toks[i + 1], lineno, "vmax")
            out["vmax_neg"] = _parse_float(toks[i + 2], lineno, "vmax")
            i += 3
        elif key == "l_range":
            out["l_lo"] = _parse_float(toks[i + 1], lineno, "l_range")
            out["l_hi"] = _parse_float(toks[i + 2], lineno, "l_range")
            i += 3
        elif key in ("stiffness", "damping", "equilibrium"):
            field_name = {
                "stiffness": "spring_stiffness",
                "damping": "spring_damping",
                "equilibrium": "equilibrium_deg",
            }[key]
            out[field_name] = _parse_float_or_auto(toks[i + 1], lineno, key)
            i += 2
        elif key in _ACT_FLOAT_KEYS:
            if i + 1 >= len(toks):
                raise BodyFileError(f"line {lineno}: missing value for {key!r} in {context}")
            val = _parse_float_or_auto(toks[i + 1], lineno, key)
            if val is None and key not in _ACT_AUTO_OK:
                raise BodyFileError(f"line {lineno}: {key!r} does not accept 'auto'")
            out[key] = val
            i += 2
        else:
            raise BodyFileError(f"line {lineno}: unknown actuator key {key!r} in {context}")
    return out


def loads_body_spec(text, hand_variant=None):
    header = {"format": None, "model": None, "root_free": False, "hand_variant": "mitten"}
    bodies = {}
    joints = []
    act_defaults = {}
    act_overrides = {}
    act_disabled = set()
    skin_default_mm = 40.0
    skin_mm = {}
    locks = {}
    section = None

    entries = []  # (kind, lineno, payload, variant) gathered before variant filtering
    for lineno, toks in _tokenize(text):
        head = toks[0]
        if section is None and head in header:
            if head == "root_free":
                header[head] = toks[1] == "true"
            else:
                header[head] = toks[1]
            continue
        if head == "section":
            if toks[1] not in ("bodies", "joints", "actuators", "skin", "locks"):
                raise BodyFileError(f"line {lineno}: unknown section {toks[1]!r}")
            section = toks[1]
            continue
        if section is None:
            raise BodyFileError(f"line {lineno}: statement outside any section: {head!r}")
        entries.append((section, lineno, toks))

    if header["format"] != "1":
        raise BodyFileError("missing or unsupported 'format' header (expected 1)")
    variant = hand_variant or header["hand_variant"]
    if variant not in HAND_VARIANTS:
        raise BodyFileError(f"unknown hand variant {variant!r}")

    for section, lineno, toks in entries:
        toks, entry_variant = _take_variants(toks, lineno)
        if entry_variant is not None and entry_variant != variant:
            continue
        head, rest = toks[0], toks[1:]
        try:
            if section == "bodies":
                if head != "body":
                    raise BodyFileError(f"line {lineno}: expected 'body' entry")
                bodies[rest[0]] = _parse_body(rest, lineno)
            elif section == "joints":
                if head != "joint":
                    raise BodyFileError(f"line {lineno}: expected 'joint' entry")
                joints.append(_parse_joint(rest, lineno))
            elif section == "actuators":
                if head == "defaults":
                    act_defaults.update(_kv_pairs(rest, lineno, "defaults"))
                elif head == "actuator":
                    if rest[1:] == ["none"]:
                        act_disabled.add(rest[0])
                    else:
                        act_overrides.setdefault(rest[0], {}).update(_kv_pairs(rest[1:], lineno, rest[0]))
                else:
                    raise BodyFileError(f"line {lineno}: expected 'defaults' or 'actuator' entry")
            elif section == "skin":
                if head == "skin_default":
                    if rest[0] != "discrimination_mm":
                        raise BodyFileError(f"line {lineno}: expected 'discrimination_mm'")
                    skin_default_mm = _parse_float(rest[1], lineno, "skin default")
                elif head == "skin":
                    if rest[1] == "none":
                        skin_mm[rest[0]] = None
                    elif rest[1] == "discrimination_mm":
                        skin_mm[rest[0]] = _parse_float(rest[2], lineno, "skin")
                    else:
                        raise BodyFileError(f"line {lineno}: bad skin entry")
                else:
                    raise BodyFileError(f"line {lineno}: expected 'skin' entry")
            elif section == "locks":
                if head != "lock":
                    raise BodyFileError(f"line {lineno}: expected 'lock' entry")
                angle = _parse_float(rest[2], lineno, "lock angle") if len(rest) >= 3 and rest[1] == "at" else 0.0
                locks[rest[0]] = angle
        except IndexError:
            raise BodyFileError(f"line {lineno}: truncated entry") from None

    defaults = ActuatorParams(joint="<defaults>", **act_defaults)
    actuators = {}
    for j in joints:
        over = dict(act_overrides.get(j.name, {}))
        actuators[j.name] = replace(defaults, joint=j.name, enabled=j.name not in act_disabled, **over)

    spec = BodySpec(
        name=header["model"] or "unnamed",
        hand_variant=variant,
        root_free=header["root_free"],
        bodies=bodies,
        joints=joints,
        actuator_defaults=defaults,
        actuators=actuators,
        skin_default_mm=skin_default_mm,
        skin_mm=skin_mm,
        locked_joints=locks,
    )
    return validate_body_spec(spec)


def _parse_body(rest, lineno):
    name = rest[0]
    i = 1
    parent = None
    pos = (0.0, 0.0, 0.0)
    quat = (1.0, 0.0, 0.0, 0.0)
    geom = None
    gpos = (0.0, 0.0, 0.0)
    gquat = (1.0, 0.0, 0.0, 0.0)
    gkind = None
    gdims = ()
    mass = 0.0
    while i < len(rest):
        key = rest[i]
        if key == "parent":
            parent = None if rest[i + 1] == "none" else rest[i + 1]
            i += 2
        elif key == "at":
            pos = tuple(_parse_float(t, lineno, "body position") for t in rest[i + 1 : i + 4])
            i += 4
        elif key == "rot":
            quat = tuple(_parse_float(t, lineno, "body rotation") for t in rest[i + 1 : i + 5])
            i += 5
        elif key == "geom":
            gkind = rest[i + 1]
            if gkind == "none":
                i += 2
                continue
            nd = GEOM_NDIMS.get(gkind)
            if nd is None:
                raise BodyFileError(f"line {lineno}: unknown geom kind {gkind!r}")
            gdims = tuple(_parse_float(t, lineno, "geom dims") for t in rest[i + 2 : i + 2 + nd])
            i += 2 + nd
        elif key == "gpos":
            gpos = tuple(_parse_float(t, lineno, "geom position") for t in rest[i + 1 : i + 4])
            i += 4
        elif key == "grot":
            gquat = tuple(_parse_float(t, lineno, "geom rotation") for t in rest[i + 1 : i + 5])
            i += 5
        elif key == "mass":
            mass = _parse_float(rest[i + 1], lineno, "mass")
            i += 2
        else:
            raise BodyFileError(f"line {lineno}: unknown body key {key!r}")
    if gkind is not None and gkind != "none":
        geom = GeomPrimitive(kind=gkind, dims=gdims, mass=mass, pos=gpos, quat=tuple(quat_normalize(gquat)))
    return Body(name=name, parent=parent, pos=pos, quat=tuple(quat_normalize(quat)), geom=geom)


def _parse_joint(rest, lineno):
    name = rest[0]
    i = 1
    kw = {}
    mirror = None
    estimated = False
    while i < len(rest):
        key = rest[i]
        if key in ("parent", "child"):
            kw[key] = rest[i + 1]
            i += 2
        elif key == "axis":
            kw["axis"] = tuple(_parse_float(t, lineno, "axis") for t in rest[i + 1 : i + 4])
            i += 4
        elif key == "rom":
            kw["rom_min_deg"] = _parse_float(rest[i + 1], lineno, "rom")
            kw["rom_max_deg"] = _parse_float(rest[i + 2], lineno, "rom")
            i += 3
        elif key == "torque":
            kw["torque_min"] = _parse_float(rest[i + 1], lineno, "torque")
            kw["torque_max"] = _parse_float(rest[i + 2], lineno, "torque")
            i += 3
        elif key == "damping":
            kw["damping"] = _parse_float(rest[i + 1], lineno, "damping")
            i += 2
        elif key == "mirror":
            mirror = rest[i + 1]
            i += 2
        elif key == "estimated":
            estimated = True
            i += 1
        else:
            raise BodyFileError(f"line {lineno}: unknown joint key {key!r}")
    missing = {"parent", "child", "axis", "rom_min_deg", "torque_min"} - set(kw)
    if missing:
        raise BodyFileError(f"line {lineno}: joint {name!r} missing fields")
    axis = np.asarray(kw["axis"], dtype=float)
    n = np.linalg.norm(axis)
    if n == 0:
        raise BodyFileError(f"line {lineno}: joint {name!r} has zero axis")
    kw["axis"] = tuple(axis / n)
    return JointSpec(name=name, mirror_of=mirror, estimated=estimated, **kw)


def load_body_spec(path, hand_variant=None):
    """Load and validate a body description file."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return loads_body_spec(text, hand_variant=hand_variant)


def _fmt(x):
    if x is None:
        return "auto"
    return repr(float(x))


def dumps_body_spec(spec: BodySpec):
    out = []
    out.append("format 1")
    out.append(f"model {spec.name}")
    out.append(f"root_free {'true' if spec.root_free else 'false'}")
    out.append(f"hand_variant {spec.hand_variant}")
    out.append("")
    out.append("section bodies")
    for b in spec.bodies.values():
        parts = [f"body {b.name} parent {b.parent or 'none'}"]
        parts.append("at " + " ".join(_fmt(v) for v in b.pos))
        if tuple(b.quat) != (1.0, 0.0, 0.0, 0.0):
            parts.append("rot " + " ".join(_fmt(v) for v in b.quat))
        if b.geom is None:
            parts.append("geom none")
        else:
            g = b.geom
            parts.append(f"geom {g.kind} " + " ".join(_fmt(v) for v in g.dims))
            if tuple(g.pos) != (0.0, 0.0, 0.0):
                parts.append("gpos " + " ".join(_fmt(v) for v in g.pos))
            if tuple(g.quat) != (1.0, 0.0, 0.0, 0.0):
                parts.append("grot " + " ".join(_fmt(v) for v in g.quat))
            parts.append(f"mass {_fmt(g.mass)}")
        out.append(" ".join(parts))
    out.append("")
    out.append("section joints")
    for j in spec.joints:
        parts = [
            f"joint {j.name} parent {j.parent} child {j.child}",
            "axis " + " ".join(_fmt(v) for v in j.axis),
            f"rom {_fmt(j.rom_min_deg)} {_fmt(j.rom_max_deg)}",
            f"torque {_fmt(j.torque_min)} {_fmt(j.torque_max)}",
        ]
        if j.damping:
            parts.append(f"damping {_fmt(j.damping)}")
        if j.mirror_of:
            parts.append(f"mirror {j.mirror_of}")
        if j.estimated:
            parts.append("estimated")
        out.append(" ".join(parts))
    out.append("")
    out.append("section actuators")
    d = spec.actuator_defaults
    out.append(
        "defaults"
        f" stiffness {_fmt(d.spring_stiffness)} damping {_fmt(d.spring_damping)}"
        f" equilibrium {_fmt(d.equilibrium_deg)}"
        f" fmax {_fmt(d.fmax_pos)} {_fmt(d.fmax_neg)} vmax {_fmt(d.vmax_pos)} {_fmt(d.vmax_neg)}"
        f" moment_arm {_fmt(d.moment_arm)} l_range {_fmt(d.l_lo)} {_fmt(d.l_hi)}"
        f" fl_width {_fmt(d.fl_width)} fv_shape {_fmt(d.fv_shape)} fv_ecc {_fmt(d.fv_ecc)}"
        f" fp_gain {_fmt(d.fp_gain)} act_tau {_fmt(d.act_tau)} residual {_fmt(d.residual)}"
    )
    for name, a in spec.actuators.items():
        if not a.enabled:
            out.append(f"actuator {name} none")
            continue
        diffs = []
        for key in _ACT_FLOAT_KEYS:
            if getattr(a, key) != getattr(d, key):
                if key == "fmax_pos":
                    diffs.append(f"fmax {_fmt(a.fmax_pos)} {_fmt(a.fmax_neg)}")
                elif key == "fmax_neg":
                    if a.fmax_pos == d.fmax_pos:
                        diffs.append(f"fmax {_fmt(a.fmax_pos)} {_fmt(a.fmax_neg)}")
                elif key == "vmax_pos":
                    diffs.append(f"vmax {_fmt(a.vmax_pos)} {_fmt(a.vmax_neg)}")
                elif key == "vmax_neg":
                    if a.vmax_pos == d.vmax_pos:
                        diffs.append(f"vmax {_fmt(a.vmax_pos)} {_fmt(a.vmax_neg)}")
                elif key == "l_lo":
                    diffs.append(f"l_range {_fmt(a.l_lo)} {_fmt(a.l_hi)}")
                elif key == "l_hi":
                    if a.l_lo == d.l_lo:
                        diffs.append(f"l_range {_fmt(a.l_lo)} {_fmt(a.l_hi)}")
                else:
                    diffs.append(f"{key} {_fmt(getattr(a, key))}")
        if diffs:
            out.append(f"actuator {name} " + " ".join(diffs))
    out.append("")
    out.append("section skin")
    out.append(f"skin_default discrimination_mm {_fmt(spec.skin_default_mm)}")
    for name, mm in spec.skin_mm.items():
        if mm is None:
            out.append(f"skin {name} none")
        else:
            out.append(f"skin {name} discrimination_mm {_fmt(mm)}")
    out.append("")
    out.append("section locks")
    for name, angle in spec.locked_joints.items():
        out.append(f"lock {name} at {_fmt(angle)}")
    out.append("")
    return "\n".join(out)


def save_body_spec(spec: BodySpec, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_body_spec(spec))


def default_body_path():
    """Path of the body file shipped with the package."""
    import importlib.resources

    return str(importlib.resources.files("infantsim").joinpath("data/infant.body"))


def load_default_body(hand_variant=None):
    return load_body_spec(default_body_path(), hand_variant=hand_variant)
