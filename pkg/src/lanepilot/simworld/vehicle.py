"""Unicycle vehicle: steering-angle-to-yaw-rate conversion and stepping."""

import math
from dataclasses import dataclass, replace

from .geometry import Pose, wrap_angle

WHEELBASE_M = 1.0
OMEGA_MAX = 1.5       # rad/s
V_MAX = 30.0 / 3.6    # 30 km/h in m/s
MAX_STEERING = math.pi / 2


@dataclass
class VehicleState:
    pose: Pose
    speed: float = 0.0
    steering: float = 0.0  # last commanded steering angle, radians

    def __post_init__(self):
        if not 0.0 <= self.speed <= V_MAX + 1e-9:
            raise ValueError(f"speed {self.speed} outside [0, {V_MAX:.3f}]")


def steering_to_omega(steering: float, speed: float,
                      wheelbase: float = WHEELBASE_M,
                      omega_max: float = OMEGA_MAX) -> float:
    """Yaw rate for a steering angle: omega = (v / L) tan(delta), clamped."""
    if abs(steering) > MAX_STEERING:
        raise ValueError(f"|steering| must be <= pi/2, got {steering}")
    omega = (speed / wheelbase) * math.tan(steering)
    return min(max(omega, -omega_max), omega_max)


def step_vehicle(state: VehicleState, omega: float, dt: float) -> VehicleState:
    """Semi-implicit Euler: turn first, then translate along the new heading."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    heading = wrap_angle(state.pose.heading + omega * dt)
    x = state.pose.x + state.speed * math.cos(heading) * dt
    y = state.pose.y + state.speed * math.sin(heading) * dt
    return replace(state, pose=Pose(x, y, heading))
