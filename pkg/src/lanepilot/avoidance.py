"""Obstacle handling: classify what is ahead, then pick a maneuver.

The controller follows the camera network while the road is clear. Inside
the detection distance it either matches a moving obstacle's speed in-lane,
or swerves around a static one into a clear adjacent lane (left preferred
when both are clear) at a fixed +/-0.5 rad/s yaw rate, turning in until the
heading offset reaches 60 degrees, crossing, then realigning. With no clear
lane it stops.
"""

import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum

from .simworld.camera import render_camera
from .simworld.geometry import wrap_angle
from .simworld.sensors import ZoneReadings, sense_zones
from .simworld.track import Track
from .simworld.vehicle import steering_to_omega


class Mode(Enum):
    CNN_FOLLOW = "cnn_follow"
    SPEED_MATCH = "speed_match"
    LANE_CHANGE_LEFT = "lane_change_left"
    LANE_CHANGE_RIGHT = "lane_change_right"
    STOPPED = "stopped"


PHASE_TURN_IN = "turn_in"
PHASE_CROSS = "cross"
PHASE_REALIGN = "realign"


@dataclass(frozen=True)
class ControllerMode:
    kind: Mode = Mode.CNN_FOLLOW
    lane: int = 2                   # lane currently being followed
    target_lane: int | None = None  # set during lane changes
    phase: str | None = None
    match_speed: float | None = None
    clear_ticks: int = 0            # speed-match exit hysteresis counter

    def __post_init__(self):
        if self.kind in (Mode.LANE_CHANGE_LEFT, Mode.LANE_CHANGE_RIGHT):
            if self.target_lane is None or abs(self.target_lane - self.lane) != 1:
                raise ValueError(f"lane change needs an adjacent target lane, got {self}")


@dataclass(frozen=True)
class ObstacleEstimate:
    kind: str           # "none" | "static" | "moving"
    speed: float        # estimated obstacle speed, m/s
    distance: float     # latest center-zone reading, m
    n_readings: int = 0


@dataclass(frozen=True)
class ControlCommand:
    omega: float
    target_speed: float
    mode: str


@dataclass(frozen=True)
class Thresholds:
    detect_m: float = 20.0
    lane_clear_m: float = 20.0
    maneuver_omega: float = 0.5
    heading_limit: float = math.radians(60.0)
    static_speed_eps: float = 0.2
    history_window: int = 5
    cross_lateral_eps: float = 0.1
    realign_eps: float = 0.02
    clear_exit_margin_m: float = 1.0
    clear_exit_ticks: int = 3
    abort_distance_m: float = 3.0

    def __post_init__(self):
        numeric = (self.detect_m, self.lane_clear_m, self.maneuver_omega,
                   self.heading_limit, self.static_speed_eps, self.cross_lateral_eps,
                   self.clear_exit_margin_m, self.abort_distance_m)
        if any(v <= 0 for v in numeric) or self.history_window < 2 or self.clear_exit_ticks < 1:
            raise ValueError(f"thresholds must be positive: {self}")

    @classmethod
    def from_dict(cls, d: dict) -> "Thresholds":
        return cls(**d)


def classify_obstacle(history, th: Thresholds, tick_dt: float = 0.1) -> ObstacleEstimate:
    """Estimate the obstacle ahead from recent (center reading, ego speed) pairs.

    Closing rate over the window is (oldest - newest) / elapsed; obstacle
    speed is ego speed minus that rate. Below two readings there is nothing
    to difference, so the estimate is "none" with n_readings flagging it.
    """
    history = list(history)
    if len(history) < 2:
        d = history[-1][0] if history else math.inf
        return ObstacleEstimate(kind="none", speed=0.0, distance=d, n_readings=len(history))
    readings = [h[0] for h in history]
    speeds = [h[1] for h in history]
    d_new = readings[-1]
    if d_new >= th.detect_m:
        return ObstacleEstimate(kind="none", speed=0.0, distance=d_new, n_readings=len(history))
    elapsed = (len(history) - 1) * tick_dt
    closing = (readings[0] - d_new) / elapsed
    estimate = sum(speeds) / len(speeds) - closing
    kind = "static" if abs(estimate) < th.static_speed_eps else "moving"
    return ObstacleEstimate(kind=kind, speed=estimate, distance=d_new, n_readings=len(history))


def _lane_frame(state, track: Track, lane: int) -> tuple[float, float]:
    """(heading deviation from lane direction, lateral offset from lane center)."""
    s, lateral = track.locate(state.pose)
    dev = wrap_angle(state.pose.heading - track.centerline.heading_at(s))
    return dev, lateral - track.lane_offset(lane)


def decide(
    zones: ZoneReadings,
    estimate: ObstacleEstimate,
    mode: ControllerMode,
    cnn_steer: float,
    state,
    track: Track,
    th: Thresholds,
    cruise_speed: float,
    tick_dt: float = 0.1,
) -> tuple[ControlCommand, ControllerMode]:
    """One decision tick: map sensor state to a command and the next mode."""

    def follow(new_mode: ControllerMode) -> tuple[ControlCommand, ControllerMode]:
        omega = steering_to_omega(cnn_steer, state.speed)
        return ControlCommand(omega, cruise_speed, new_mode.kind.value), new_mode

    if mode.kind in (Mode.LANE_CHANGE_LEFT, Mode.LANE_CHANGE_RIGHT):
        if zones.center < th.abort_distance_m:
            stopped = ControllerMode(kind=Mode.STOPPED, lane=mode.lane)
            return ControlCommand(0.0, 0.0, stopped.kind.value), stopped
        sign = 1.0 if mode.kind is Mode.LANE_CHANGE_LEFT else -1.0
        dev, lat_err = _lane_frame(state, track, mode.target_lane)
        dev_in = max(sign * dev, 0.0)       # heading swung toward the target
        togo = -sign * lat_err              # lateral distance still to cover
        # counter-steering back to aligned sweeps (v/w)(1 - cos dev) of
        # lateral travel; start realigning early enough to land on center
        counter_arc = (state.speed / th.maneuver_omega) * (1.0 - math.cos(dev_in))
        anticipation = state.speed * math.sin(dev_in) * tick_dt
        phase = mode.phase
        if phase == PHASE_TURN_IN:
            if togo <= counter_arc + anticipation:
                phase = PHASE_REALIGN
            elif dev_in >= th.heading_limit - 1e-9:
                phase = PHASE_CROSS
        if phase == PHASE_CROSS and (togo <= counter_arc + anticipation
                                     or abs(lat_err) <= th.cross_lateral_eps):
            phase = PHASE_REALIGN
        if phase == PHASE_REALIGN and dev_in <= th.realign_eps:
            done = ControllerMode(kind=Mode.CNN_FOLLOW, lane=mode.target_lane)
            return follow(done)
        omega = {PHASE_TURN_IN: sign * th.maneuver_omega,
                 PHASE_CROSS: 0.0,
                 PHASE_REALIGN: -sign * th.maneuver_omega}[phase]
        next_mode = replace(mode, phase=phase)
        return ControlCommand(omega, cruise_speed, next_mode.kind.value), next_mode

    if mode.kind is Mode.STOPPED:
        if zones.center >= th.detect_m:
            return follow(ControllerMode(kind=Mode.CNN_FOLLOW, lane=mode.lane))
        return ControlCommand(0.0, 0.0, mode.kind.value), mode

    if mode.kind is Mode.SPEED_MATCH:
        if zones.center >= th.detect_m + th.clear_exit_margin_m:
            ticks = mode.clear_ticks + 1
            if ticks >= th.clear_exit_ticks:
                return follow(ControllerMode(kind=Mode.CNN_FOLLOW, lane=mode.lane))
            mode = replace(mode, clear_ticks=ticks)
        else:
            mode = replace(mode, clear_ticks=0)
            if zones.center < th.detect_m and estimate.kind == "static":
                return _react_to_blocked_lane(zones, estimate, mode, cnn_steer,
                                              state, track, th, cruise_speed)
            if estimate.kind == "moving":
                mode = replace(mode, match_speed=estimate.speed)
        matched = mode.match_speed if mode.match_speed is not None else cruise_speed
        target = min(max(matched, 0.0), cruise_speed)
        omega = steering_to_omega(cnn_steer, state.speed)
        return ControlCommand(omega, target, mode.kind.value), mode

    # CNN_FOLLOW
    if zones.center >= th.detect_m:
        return follow(ControllerMode(kind=Mode.CNN_FOLLOW, lane=mode.lane))
    if estimate.kind == "moving":
        matched = ControllerMode(kind=Mode.SPEED_MATCH, lane=mode.lane,
                                 match_speed=estimate.speed)
        omega = steering_to_omega(cnn_steer, state.speed)
        target = min(max(estimate.speed, 0.0), cruise_speed)
        return ControlCommand(omega, target, matched.kind.value), matched
    return _react_to_blocked_lane(zones, estimate, mode, cnn_steer,
                                  state, track, th, cruise_speed)


def _react_to_blocked_lane(zones, estimate, mode, cnn_steer, state, track, th,
                           cruise_speed) -> tuple[ControlCommand, ControllerMode]:
    """Static (or unclassified) obstacle inside the detection distance:
    change into a clear adjacent lane, left first, else stop."""
    lane = mode.lane
    left_ok = lane > 1 and zones.left >= th.lane_clear_m
    right_ok = lane < track.lane_count and zones.right >= th.lane_clear_m
    if left_ok:
        next_mode = ControllerMode(kind=Mode.LANE_CHANGE_LEFT, lane=lane,
                                   target_lane=lane - 1, phase=PHASE_TURN_IN)
        return (ControlCommand(th.maneuver_omega, cruise_speed, next_mode.kind.value),
                next_mode)
    if right_ok:
        next_mode = ControllerMode(kind=Mode.LANE_CHANGE_RIGHT, lane=lane,
                                   target_lane=lane + 1, phase=PHASE_TURN_IN)
        return (ControlCommand(-th.maneuver_omega, cruise_speed, next_mode.kind.value),
                next_mode)
    stopped = ControllerMode(kind=Mode.STOPPED, lane=lane)
    return ControlCommand(0.0, 0.0, stopped.kind.value), stopped


class AvoidanceController:
    """Owns the decision-tick state: reading history, mode, current lane.

    `policy` maps a rendered camera frame to a steering angle; the episode
    runner passes the trained network's prediction function.
    """

    def __init__(self, track: Track, cfg, policy, thresholds: Thresholds | None = None,
                 start_lane: int = 2):
        self.track = track
        self.cfg = cfg
        self.policy = policy
        self.th = thresholds if thresholds is not None else Thresholds(
            detect_m=cfg.detect_distance_m)
        self.mode = ControllerMode(kind=Mode.CNN_FOLLOW, lane=start_lane)
        self.history: deque = deque(maxlen=self.th.history_window)
        self.last_frame = None
        self.last_zones = None
        self.last_steer = 0.0

    def reset_history(self) -> None:
        self.history.clear()

    def tick(self, world, zones: ZoneReadings | None = None,
             frame=None) -> ControlCommand:
        if zones is None:
            zones = sense_zones(world.ego, world.obstacles, world.cfg, timestamp=world.time)
        if frame is None:
            frame = render_camera(world.ego, world.track, world.obstacles, world.cfg)
        self.history.append((zones.center, world.ego.speed))
        estimate = classify_obstacle(self.history, self.th, world.cfg.decision_dt)
        steer = float(self.policy(frame))
        was = self.mode.kind
        cmd, self.mode = decide(zones, estimate, self.mode, steer, world.ego,
                                self.track, self.th, world.cfg.cruise_speed,
                                tick_dt=world.cfg.decision_dt)
        if self.mode.kind is not was and Mode.CNN_FOLLOW in (self.mode.kind, was):
            # zone geometry changes meaning across maneuvers; stale rates mislead
            if self.mode.kind in (Mode.LANE_CHANGE_LEFT, Mode.LANE_CHANGE_RIGHT) or \
                    was in (Mode.LANE_CHANGE_LEFT, Mode.LANE_CHANGE_RIGHT):
                self.reset_history()
        self.last_frame, self.last_zones, self.last_steer = frame, zones, steer
        return cmd
