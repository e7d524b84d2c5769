"""Articulated rigid-body core."""

from .kernels.reference import UnsupportedGeomPair
from .model import FreeBody, StaticGeom, TreeModel, build_model
from .world import ContactReport, SimulationError, StepConfig, TrajectoryRecorder, World

__all__ = [
    "ContactReport",
    "FreeBody",
    "SimulationError",
    "StaticGeom",
    "StepConfig",
    "TrajectoryRecorder",
    "TreeModel",
    "UnsupportedGeomPair",
    "World",
    "build_model",
]
