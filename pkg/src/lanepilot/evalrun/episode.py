"""Closed-loop episodes: tick the controller, watch for trouble, keep books.

The engine senses and renders once per decision tick, picks a command
(controller, recovery oracle, or a human with authority), then advances the
physics substeps. While an intervention holds control, no controller command
reaches the vehicle.
"""

import hashlib
from dataclasses import dataclass, field

from ..avoidance import AvoidanceController, ControlCommand, Mode
from ..nncore.network import Network, predict_steering
from ..simworld.camera import render_camera
from ..simworld.geometry import wrap_angle
from ..simworld.sensors import sense_zones
from ..simworld.track import OffTrackError, Track, cross_track_error
from ..simworld.world import World, build_world, builtin_scenario, step_world
from .metrics import (
    INTERVENTION_CHARGE_S,
    AutonomyReport,
    InterventionRecord,
    compute_autonomy,
)

ORACLE_K_CTE = 1.0
ORACLE_K_HEADING = 2.0
INTERVENTION_MODE = "intervention"
TELEOP_MODE = "teleop"


def frame_digest(frame) -> str:
    return hashlib.blake2b(frame.tobytes(), digest_size=8).hexdigest()


def oracle_intervene(state, track: Track, lane: int, collision: bool = False):
    """(triggered, recovery policy) for the automatic safety driver.

    Triggers once the vehicle leaves its lane (|cross-track| beyond half the
    lane width) or collides. The recovery policy is a proportional law that
    steers back toward the lane center; it is meant to hold control for the
    fixed 5 s intervention window.
    """
    try:
        cte = cross_track_error(state.pose, track, lane)
        triggered = collision or abs(cte) > track.lane_width / 2.0
    except OffTrackError:
        triggered = True
    return triggered, (lambda st: _recovery_command(st, track, lane))


def _recovery_command(state, track: Track, lane: int,
                      omega_max: float = 1.5) -> tuple[float, float]:
    s, lateral = track.locate(state.pose)
    cte = lateral - track.lane_offset(lane)
    heading_err = wrap_angle(state.pose.heading - track.centerline.heading_at(s))
    omega = -ORACLE_K_CTE * cte - ORACLE_K_HEADING * heading_err
    return min(max(omega, -omega_max), omega_max), state.speed


@dataclass
class RunLog:
    scenario_name: str
    seed: int
    mode: str
    ticks: list[dict] = field(default_factory=list)
    interventions: list[InterventionRecord] = field(default_factory=list)
    elapsed_s: float = 0.0
    distance_m: float = 0.0
    collisions: int = 0
    ended_early: str | None = None

    def report(self) -> AutonomyReport:
        return AutonomyReport(
            autonomy_pct=compute_autonomy(len(self.interventions), self.elapsed_s),
            interventions=len(self.interventions),
            elapsed_s=self.elapsed_s,
            distance_m=self.distance_m,
            collisions=self.collisions,
        )


class EpisodeEngine:
    """Shared tick machinery for oracle-mode evaluation and the live service.

    controller may be None for pure-teleop sessions; then every tick must
    come with an external command (zero-order hold is the caller's job).
    """

    def __init__(self, world: World, controller: AvoidanceController | None,
                 scenario_name: str = "custom", seed: int = 0, mode: str = "oracle"):
        self.world = world
        self.controller = controller
        self.log = RunLog(scenario_name=scenario_name, seed=seed, mode=mode)
        self.oracle_enabled = mode == "oracle" and controller is not None
        self.tick_index = 0
        self.intervention_ticks_left = 0
        self.recovery = None
        self.takeover_active = False
        self.takeover_started_s = 0.0
        self.last_frame = None
        self.last_zones = None
        self._was_colliding = False
        self._ticks_per_intervention = round(
            INTERVENTION_CHARGE_S * world.cfg.decision_hz)

    @property
    def sim_time(self) -> float:
        return self.tick_index / self.world.cfg.decision_hz

    @property
    def in_intervention(self) -> bool:
        return self.intervention_ticks_left > 0 or self.takeover_active

    @property
    def current_lane(self) -> int:
        return self.controller.mode.lane if self.controller else self.world.ego_lane

    def autonomy_so_far(self) -> float:
        elapsed = self.sim_time
        if elapsed <= 0:
            return 100.0
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # live readout; the report still warns
            return compute_autonomy(len(self.log.interventions), elapsed)

    def begin_takeover(self) -> InterventionRecord:
        """Human takeover: one record, fixed 5 s metric charge."""
        rec = InterventionRecord(start_s=self.sim_time, source="human",
                                 trigger="takeover")
        self.log.interventions.append(rec)
        self.takeover_active = True
        self.takeover_started_s = self.sim_time
        return rec

    def end_takeover(self) -> None:
        if self.takeover_active and self.log.interventions:
            self.log.interventions[-1].actual_span_s = self.sim_time - self.takeover_started_s
        self.takeover_active = False
        if self.controller:
            self.controller.reset_history()

    def _choose_command(self, zones, frame,
                        external_command) -> tuple[ControlCommand, str]:
        world = self.world
        if self.takeover_active:
            omega, speed = external_command if external_command is not None else (
                world.omega, world.target_speed)
            return ControlCommand(omega, speed, INTERVENTION_MODE), "human"

        if self.intervention_ticks_left > 0:
            omega, speed = self.recovery(world.ego)
            self.intervention_ticks_left -= 1
            if self.intervention_ticks_left == 0 and self.controller:
                self.controller.reset_history()
            return ControlCommand(omega, speed, INTERVENTION_MODE), "oracle"

        if self.oracle_enabled:
            mid_maneuver = self.controller.mode.kind in (Mode.LANE_CHANGE_LEFT,
                                                         Mode.LANE_CHANGE_RIGHT)
            if not mid_maneuver:
                triggered, recovery = oracle_intervene(
                    world.ego, world.track, self.controller.mode.lane, world.collision)
                if triggered:
                    self.log.interventions.append(InterventionRecord(
                        start_s=self.sim_time, source="oracle",
                        trigger="collision" if world.collision else "left lane"))
                    self.recovery = recovery
                    self.intervention_ticks_left = self._ticks_per_intervention - 1
                    omega, speed = recovery(world.ego)
                    return ControlCommand(omega, speed, INTERVENTION_MODE), "oracle"

        if self.controller is None:
            if external_command is None:
                # zero-order hold: keep whatever command is in force
                return ControlCommand(world.omega, world.target_speed, TELEOP_MODE), "teleop"
            omega, speed = external_command
            return ControlCommand(omega, speed, TELEOP_MODE), "teleop"
        return self.controller.tick(self.world, zones=zones, frame=frame), "stack"

    def tick(self, external_command: tuple[float, float] | None = None) -> dict:
        """One decision tick followed by the physics substeps.

        external_command is (omega, target_speed) from a human who holds
        control authority; it drives the vehicle during takeovers and teleop.
        """
        world = self.world
        cfg = world.cfg
        zones = sense_zones(world.ego, world.obstacles, cfg, timestamp=self.sim_time)
        frame = render_camera(world.ego, world.track, world.obstacles, cfg)
        self.last_zones, self.last_frame = zones, frame

        cmd, source = self._choose_command(zones, frame, external_command)

        world.omega = cmd.omega
        world.target_speed = cmd.target_speed
        for _ in range(cfg.steps_per_decision):
            step_world(world)
            self.log.distance_m += world.ego.speed * cfg.dt
            if world.collision and not self._was_colliding:
                self.log.collisions += 1
            self._was_colliding = world.collision

        record = {
            "kind": "tick",
            "tick": self.tick_index,
            "t": round(self.tick_index * cfg.decision_dt, 6),
            "x": float(world.ego.pose.x),
            "y": float(world.ego.pose.y),
            "heading": float(world.ego.pose.heading),
            "speed": float(world.ego.speed),
            "zones": [float(zones.left), float(zones.center), float(zones.right)],
            "mode": cmd.mode,
            "source": source,
            "omega": float(cmd.omega),
            "target_speed": float(cmd.target_speed),
            "lane": self.current_lane,
            "frame": frame_digest(frame),
        }
        self.log.ticks.append(record)
        self.tick_index += 1
        self.log.elapsed_s = self.sim_time
        return record


def run_episode(scenario, net: Network | None, mode: str = "oracle",
                duration_s: float = 60.0, seed: int = 0,
                policy=None, thresholds=None) -> RunLog:
    """Run a closed-loop episode and return its complete log.

    scenario is a scenario dict or a built-in scenario name. In oracle mode
    the run is bit-deterministic for fixed (scenario, net, seed).
    """
    if isinstance(scenario, str):
        name, doc = scenario, builtin_scenario(scenario)
    else:
        doc = scenario
        name = scenario.get("name", "custom")
    world = build_world(doc)
    if thresholds is None and "thresholds" in doc:
        from ..avoidance import Thresholds
        thresholds = Thresholds.from_dict(doc["thresholds"])
    if policy is None:
        if net is None:
            raise ValueError("need a network or an explicit policy")

        def policy(frame):
            return predict_steering(net, (frame.astype("float32") / 255.0)[None])

    controller = AvoidanceController(world.track, world.cfg, policy,
                                     thresholds=thresholds, start_lane=world.ego_lane)
    engine = EpisodeEngine(world, controller, scenario_name=name, seed=seed, mode=mode)

    n_ticks = round(duration_s * world.cfg.decision_hz)
    margin = world.cfg.cruise_speed * world.cfg.decision_dt + 1.0
    for _ in range(n_ticks):
        if not world.track.closed:
            s_ego, _ = world.track.locate(world.ego.pose)
            if s_ego >= world.track.length - margin:
                engine.log.ended_early = "end of track"
                break
        engine.tick()
    engine.log.elapsed_s = engine.sim_time
    if engine.log.elapsed_s <= 0:
        raise ValueError("episode produced no ticks")
    return engine.log
