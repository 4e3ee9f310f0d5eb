"""Three-zone distance sensing by ray casting against obstacle disks.

The field of view splits into a center zone (heading +/- 15 degrees) and two
side zones out to +/- 60 degrees. Rays march at 1-degree steps from the
vehicle center; a zone's reading is the closest ray hit, capped at the
sensor range (a reading equal to the range means "clear").
"""

from dataclasses import dataclass

import numpy as np

MIN_READING = 1e-6


@dataclass
class ZoneReadings:
    left: float
    center: float
    right: float
    timestamp: float = 0.0

    def mirrored(self) -> "ZoneReadings":
        return ZoneReadings(left=self.right, center=self.center,
                            right=self.left, timestamp=self.timestamp)


def _ray_angles_deg(cfg) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    step = cfg.ray_step_deg
    c = cfg.zone_center_half_deg
    s = cfg.zone_side_max_deg
    center = np.arange(-c, c + step, step)
    left = np.arange(c + step, s + step, step)
    right = -left
    return left, center, right


def sense_zones(state, obstacles, cfg, timestamp: float = 0.0) -> ZoneReadings:
    left_a, center_a, right_a = _ray_angles_deg(cfg)
    angles = np.radians(np.concatenate([left_a, center_a, right_a])) + state.pose.heading
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # [k, 2]
    hits = np.full(len(angles), cfg.sensor_range_m, dtype=np.float64)

    if obstacles:
        origin = state.pose.position()
        centers = np.array([[o.pose.x, o.pose.y] for o in obstacles])
        radii = np.array([o.radius for o in obstacles])
        rel = centers - origin                                   # [m, 2]
        proj = rel @ dirs.T                                      # [m, k]
        perp2 = (rel ** 2).sum(axis=1)[:, None] - proj ** 2
        disc = radii[:, None] ** 2 - perp2
        ok = disc >= 0.0
        t = np.where(ok, proj - np.sqrt(np.where(ok, disc, 0.0)), np.inf)
        # origin inside a disk: nearest boundary is behind the entry point
        t = np.where(ok & (t < 0.0) & (proj + np.sqrt(np.where(ok, disc, 0.0)) > 0.0),
                     MIN_READING, t)
        t = np.where(t < 0.0, np.inf, t)
        nearest = t.min(axis=0)
        hits = np.minimum(hits, nearest)

    n_left, n_center = len(left_a), len(center_a)
    reading = lambda chunk: float(max(chunk.min(), MIN_READING))
    return ZoneReadings(
        left=reading(hits[:n_left]),
        center=reading(hits[n_left:n_left + n_center]),
        right=reading(hits[n_left + n_center:]),
        timestamp=timestamp,
    )
