"""World state: configuration profiles, obstacles, stepping, scenario files."""

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import Pose
from .track import Track, load_track, straight_track, wavy_track
from .vehicle import OMEGA_MAX, V_MAX, WHEELBASE_M, VehicleState, step_vehicle


@dataclass(frozen=True)
class WorldConfig:
    profile: str = "campus"
    dt: float = 0.02                 # physics step, s
    decision_hz: float = 10.0        # sensing/telemetry/decision cadence
    detect_distance_m: float = 20.0  # obstacle reaction threshold
    sensor_range_m: float = 30.0
    zone_center_half_deg: float = 15.0
    zone_side_max_deg: float = 60.0
    ray_step_deg: float = 1.0
    cam_ahead_m: float = 20.0
    cam_width_m: float = 6.6
    frame_height: int = 66
    frame_width: int = 200
    wheelbase_m: float = WHEELBASE_M
    omega_max: float = OMEGA_MAX
    v_max: float = V_MAX
    cruise_speed: float = 2.0
    ego_radius_m: float = 0.3
    lookahead_m: float = 4.0
    expert_max_steer: float = 0.5

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.detect_distance_m <= 0:
            raise ValueError("detection distance must be positive")

    @property
    def steps_per_decision(self) -> int:
        return round(1.0 / (self.decision_hz * self.dt))

    @property
    def decision_dt(self) -> float:
        return 1.0 / self.decision_hz


def config_profile(name: str, **overrides) -> WorldConfig:
    if name == "campus":
        base = WorldConfig(profile="campus", cruise_speed=3.0)
    elif name == "tiny":
        base = WorldConfig(profile="tiny", cam_ahead_m=12.8, cam_width_m=6.4,
                           frame_height=32, frame_width=64, cruise_speed=2.0)
    else:
        raise ValueError(f"unknown world profile {name!r}")
    return replace(base, **overrides) if overrides else base


@dataclass
class Obstacle:
    lane: int
    s: float            # arclength position along its lane
    speed: float = 0.0  # m/s along the lane; 0 means static
    radius: float = 0.3
    pose: Pose = field(default=None)  # derived, kept in sync by the world

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("obstacle radius must be positive")

    def sync_pose(self, track: Track) -> None:
        self.pose = track.lane_pose(self.lane, self.s)


@dataclass
class World:
    cfg: WorldConfig
    track: Track
    ego: VehicleState
    obstacles: list[Obstacle] = field(default_factory=list)
    ego_lane: int = 2
    time: float = 0.0
    omega: float = 0.0          # current ego command
    target_speed: float = 0.0
    collision: bool = False

    def __post_init__(self):
        for o in self.obstacles:
            if o.pose is None:
                o.sync_pose(self.track)
        self.target_speed = self.ego.speed


def step_world(world: World, dt: float | None = None) -> World:
    """Advance ego and obstacles by one physics step (mutates and returns world)."""
    cfg = world.cfg
    dt = cfg.dt if dt is None else dt
    speed = min(max(world.target_speed, 0.0), cfg.v_max)
    world.ego = replace(world.ego, speed=speed)
    world.ego = step_vehicle(world.ego, world.omega, dt)
    for o in world.obstacles:
        if o.speed != 0.0:
            o.s = o.s + o.speed * dt
            if world.track.closed:
                o.s %= world.track.length
            else:
                o.s = min(max(o.s, 0.0), world.track.length)
            o.sync_pose(world.track)
    ex, ey = world.ego.pose.x, world.ego.pose.y
    world.collision = any(
        math.hypot(o.pose.x - ex, o.pose.y - ey) < o.radius + cfg.ego_radius_m
        for o in world.obstacles
    )
    world.time += dt
    return world


BUILTIN_TRACKS = {
    "straight": lambda: straight_track(length=200.0),
    "campus": lambda: wavy_track(length=580.0, amplitude=8.0, waves=3.0),
    "tiny-loop": lambda: wavy_track(length=140.0, amplitude=4.0, waves=4.0, closed=True),
    "eval-loop": lambda: wavy_track(length=200.0, amplitude=5.0, waves=3.0,
                                    phase=1.0, closed=True),
}


def _resolve_track(ref: str, base_dir: Path | None) -> Track:
    if ref in BUILTIN_TRACKS:
        return BUILTIN_TRACKS[ref]()
    path = Path(ref)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return load_track(path)


def load_scenario(path) -> dict:
    path = Path(path)
    with open(path) as f:
        doc = json.load(f)
    doc["_base_dir"] = str(path.parent)
    return doc


def save_scenario(doc: dict, path) -> None:
    doc = {k: v for k, v in doc.items() if not k.startswith("_")}
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def build_world(scenario: dict) -> World:
    """Instantiate a world from a scenario document.

    Schema: {"profile": str, "track": builtin-name-or-path, "ego": {"lane",
    "s", "speed"?}, "obstacles": [{"lane", "s", "speed"?, "radius"?}],
    "overrides": {WorldConfig field: value}}.
    """
    cfg = config_profile(scenario.get("profile", "campus"),
                         **scenario.get("overrides", {}))
    base_dir = Path(scenario["_base_dir"]) if "_base_dir" in scenario else None
    track = _resolve_track(scenario.get("track", "campus"), base_dir)
    ego_spec = scenario.get("ego", {})
    lane = int(ego_spec.get("lane", 2))
    s0 = float(ego_spec.get("s", 0.0))
    speed = float(ego_spec.get("speed", cfg.cruise_speed))
    ego = VehicleState(pose=track.lane_pose(lane, s0), speed=speed)
    obstacles = [
        Obstacle(lane=int(o["lane"]), s=float(o["s"]),
                 speed=float(o.get("speed", 0.0)), radius=float(o.get("radius", 0.3)))
        for o in scenario.get("obstacles", [])
    ]
    return World(cfg=cfg, track=track, ego=ego, obstacles=obstacles, ego_lane=lane)


def builtin_scenario(name: str) -> dict:
    scenarios = {
        "tiny-train": {"profile": "tiny", "track": "tiny-loop",
                       "ego": {"lane": 2, "s": 0.0}},
        "eval-curves": {"profile": "tiny", "track": "eval-loop",
                        "ego": {"lane": 2, "s": 0.0}},
        "straight-empty": {"profile": "tiny", "track": "straight",
                           "ego": {"lane": 2, "s": 5.0}},
        "campus": {"profile": "campus", "track": "campus",
                   "ego": {"lane": 2, "s": 5.0}},
    }
    if name not in scenarios:
        raise ValueError(f"unknown scenario {name!r}; built-ins: {sorted(scenarios)}")
    return json.loads(json.dumps(scenarios[name]))  # deep copy
