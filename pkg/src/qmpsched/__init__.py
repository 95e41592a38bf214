"""Online space-time scheduling of lattice-surgery jobs on a shared FTQC chip."""

from .core import (
    DefragBarrier,
    JobRequest,
    LatencyModel,
    ProcessorConfig,
    ReservedJob,
    ScheduleState,
    Violation,
    estimate_schedule_point,
    take_waiting_jobs,
    validate,
)
from .geometry import Cuboid, PlacedCuboid, PlacedPolycube, Polycube, Rotation, Transform, Voxel

__version__ = "0.1.0"

__all__ = [
    "Cuboid", "DefragBarrier", "JobRequest", "LatencyModel", "PlacedCuboid", "PlacedPolycube",
    "Polycube", "ProcessorConfig", "ReservedJob", "Rotation", "ScheduleState", "Transform",
    "Violation", "Voxel", "estimate_schedule_point", "take_waiting_jobs", "validate",
]
