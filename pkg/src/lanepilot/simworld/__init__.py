from .geometry import Polyline, Pose, wrap_angle
from .track import OffTrackError, Track, cross_track_error, load_track, save_track
from .vehicle import VehicleState, step_vehicle, steering_to_omega
from .sensors import ZoneReadings, sense_zones
from .camera import render_camera
from .expert import expert_steering
from .world import (
    Obstacle,
    World,
    WorldConfig,
    build_world,
    load_scenario,
    save_scenario,
    step_world,
)

__all__ = [
    "Obstacle",
    "OffTrackError",
    "Polyline",
    "Pose",
    "Track",
    "VehicleState",
    "World",
    "WorldConfig",
    "ZoneReadings",
    "build_world",
    "cross_track_error",
    "expert_steering",
    "load_scenario",
    "load_track",
    "render_camera",
    "save_scenario",
    "save_track",
    "sense_zones",
    "step_vehicle",
    "step_world",
    "steering_to_omega",
    "wrap_angle",
]
