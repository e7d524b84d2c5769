"""Infant sensorimotor simulation.

An articulated rigid-body model of an infant with antagonistic muscle
actuation, full-body touch sensing, proprioceptive and vestibular senses,
and reward-defined episodic environments, built on a small internal
physics core.
"""

__version__ = "0.1.0"

from .bodymodel import (
    BodySpec,
    load_body_spec,
    load_default_body,
    save_body_spec,
)

__all__ = [
    "BodySpec",
    "load_body_spec",
    "load_default_body",
    "save_body_spec",
    "__version__",
]
