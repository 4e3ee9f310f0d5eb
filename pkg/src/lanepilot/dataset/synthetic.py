"""Synthetic datasets from the scripted expert driver.

The expert drives its lane at cruise speed; every sensor tick we record the
rendered frame with the expert's steering as label. Each configured lateral
shift and heading rotation additionally re-renders the scene from the
perturbed pose, labelled with the expert command computed there, so the
network sees how to recover from being off-center or misaligned.
"""

from dataclasses import dataclass, replace

from ..simworld.camera import render_camera
from ..simworld.expert import expert_steering
from ..simworld.geometry import Pose
from ..simworld.track import OffTrackError
from ..simworld.vehicle import steering_to_omega
from ..simworld.world import World, step_world
from .records import DatasetManifest, SamplePair

TICK_US = 100_000  # 10 Hz


@dataclass(frozen=True)
class AugmentSpec:
    lateral_shifts_m: tuple = (-0.4, -0.2, 0.2, 0.4)
    heading_rotations_rad: tuple = (-0.10, -0.05, 0.05, 0.10)

    def offsets(self) -> list[tuple[float, float]]:
        """(shift, rotation) perturbations; shifts first, then rotations."""
        return [(s, 0.0) for s in self.lateral_shifts_m] + \
               [(0.0, r) for r in self.heading_rotations_rad]

    def count(self) -> int:
        return len(self.lateral_shifts_m) + len(self.heading_rotations_rad)


def perturbed_pose(pose: Pose, track, shift_m: float, rotation_rad: float) -> Pose:
    """Shift laterally (positive = left of travel) and rotate the heading."""
    s, _ = track.locate(pose)
    d = track.centerline.direction_at(s)
    return Pose(pose.x - d[1] * shift_m, pose.y + d[0] * shift_m,
                pose.heading + rotation_rad)


def generate_synthetic(world: World, n_frames: int, augment: AugmentSpec,
                       seed: int, lane: int = 2, out_dir=None) -> DatasetManifest:
    """Drive the expert for n_frames ticks, recording base + perturbed views.

    The manifest holds n_frames * (1 + augment.count()) samples and is a pure
    function of (world, n_frames, augment, seed). With out_dir set the
    frames, log.csv and manifest.json are also written to disk.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    cfg = world.cfg
    track = world.track
    for shift, _ in augment.offsets():
        if abs(track.lane_offset(lane) + shift) > track.half_width:
            raise ValueError(f"shift {shift} m leaves the drivable area from lane {lane}")

    samples: list[SamplePair] = []
    for k in range(n_frames):
        t_us = k * TICK_US
        try:
            steer = expert_steering(world.ego, track, lane, cfg)
        except OffTrackError as e:
            raise OffTrackError(
                f"expert left the track at frame {k} ({e}); "
                "check the scenario's start lane and cruise speed") from e
        frame = render_camera(world.ego, track, world.obstacles, cfg)
        samples.append(SamplePair(t_us, frame, steer, world.ego.speed))

        for shift, rot in augment.offsets():
            pstate = replace(world.ego,
                             pose=perturbed_pose(world.ego.pose, track, shift, rot))
            psteer = expert_steering(pstate, track, lane, cfg)
            pframe = render_camera(pstate, track, world.obstacles, cfg)
            samples.append(SamplePair(t_us, pframe, psteer, world.ego.speed))

        world.omega = steering_to_omega(steer, world.ego.speed,
                                        cfg.wheelbase_m, cfg.omega_max)
        world.target_speed = cfg.cruise_speed
        for _ in range(cfg.steps_per_decision):
            step_world(world)

    manifest = DatasetManifest(samples=samples, frame_height=cfg.frame_height,
                               frame_width=cfg.frame_width, provenance="synthetic",
                               seed=seed)
    if out_dir is not None:
        manifest = manifest.save(out_dir)
    return manifest
