"""Track geometry: a three-lane road around a centerline polyline.

Lane 1 is the leftmost lane, lane 3 the rightmost; the centerline is the
center of lane 2. Lateral offsets are positive to the left of the travel
direction.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Polyline, Pose

LENGTH_TOLERANCE = 1e-6


class OffTrackError(ValueError):
    """Pose is outside the track region."""


@dataclass
class Track:
    centerline: Polyline
    lane_width: float = 1.0
    lane_count: int = 3
    declared_length: float | None = None

    def __post_init__(self):
        if self.lane_count != 3:
            raise ValueError(f"track must have 3 lanes, got {self.lane_count}")
        if self.declared_length is None:
            self.declared_length = self.centerline.length
        elif abs(self.declared_length - self.centerline.length) > LENGTH_TOLERANCE:
            raise ValueError(
                f"declared length {self.declared_length} differs from polyline length "
                f"{self.centerline.length} by more than {LENGTH_TOLERANCE}")

    @property
    def length(self) -> float:
        return self.centerline.length

    @property
    def closed(self) -> bool:
        return self.centerline.closed

    @property
    def half_width(self) -> float:
        return self.lane_count * self.lane_width / 2.0

    def lane_offset(self, lane: int) -> float:
        """Lateral offset of a lane center from the centerline (lane 1 left)."""
        if not 1 <= lane <= self.lane_count:
            raise ValueError(f"lane must be 1..{self.lane_count}, got {lane}")
        return (2 - lane) * self.lane_width

    def boundary_offsets(self) -> list[float]:
        half = self.lane_count / 2.0
        return [(half - i) * self.lane_width for i in range(self.lane_count + 1)]

    def lane_center_point(self, lane: int, s: float) -> np.ndarray:
        p = self.centerline.point_at(s)
        d = self.centerline.direction_at(s)
        normal = np.array([-d[1], d[0]])  # left normal
        return p + self.lane_offset(lane) * normal

    def lane_pose(self, lane: int, s: float) -> Pose:
        p = self.lane_center_point(lane, s)
        return Pose(float(p[0]), float(p[1]), self.centerline.heading_at(s))

    def locate(self, pose: Pose, margin: float = 2.0) -> tuple[float, float]:
        """(arclength, signed lateral from centerline) of a pose.

        Raises OffTrackError when the pose is beyond the ends of an open
        track or further than margin outside the paved width.
        """
        s, lateral, interior = self.centerline.project_many(pose.position()[None])
        s, lateral = float(s[0]), float(lateral[0])
        if not interior[0]:
            raise OffTrackError(f"pose at ({pose.x:.2f}, {pose.y:.2f}) is beyond the track ends")
        if abs(lateral) > self.half_width + margin:
            raise OffTrackError(
                f"pose is {abs(lateral):.2f} m from the centerline "
                f"(track half-width {self.half_width:.2f} m)")
        return s, lateral

    def nearest_lane(self, pose: Pose) -> int:
        _, lateral = self.locate(pose)
        return min(range(1, self.lane_count + 1),
                   key=lambda lane: abs(lateral - self.lane_offset(lane)))


def cross_track_error(pose: Pose, track: Track, lane: int) -> float:
    """Signed lateral distance from the center of a lane; positive = left."""
    _, lateral = track.locate(pose)
    return lateral - track.lane_offset(lane)


def save_track(track: Track, path) -> None:
    doc = {
        "points": [[float(x), float(y)] for x, y in track.centerline.points],
        "lane_width": track.lane_width,
        "lane_count": track.lane_count,
        "length": track.centerline.length,
    }
    with open(path, "w") as f:
        json.dump(doc, f)
        f.write("\n")


def load_track(path) -> Track:
    with open(path) as f:
        doc = json.load(f)
    return Track(centerline=Polyline(doc["points"]), lane_width=doc["lane_width"],
                 lane_count=doc["lane_count"], declared_length=doc.get("length"))


def straight_track(length: float = 580.0, lane_width: float = 1.0) -> Track:
    return Track(Polyline([[0.0, 0.0], [length, 0.0]]), lane_width=lane_width)


def wavy_track(
    length: float = 580.0,
    amplitude: float = 6.0,
    waves: float = 3.0,
    lane_width: float = 1.0,
    step: float = 1.0,
    phase: float = 0.0,
    closed: bool = False,
) -> Track:
    """Gentle sine-wave road, rescaled so the polyline length is exact.

    With closed=True the waves run around a circle instead, producing a loop
    of exactly the requested length.
    """
    if closed:
        n = max(int(length / step), 16)
        theta = np.linspace(0.0, 2.0 * math.pi, n + 1)
        base_r = length / (2.0 * math.pi)
        r = base_r + amplitude * np.sin(waves * theta + phase)
        pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        pts[-1] = pts[0]
    else:
        n = max(int(length / step), 2)
        x = np.linspace(0.0, length, n + 1)
        y = amplitude * np.sin(2.0 * math.pi * waves * x / length + phase)
        pts = np.stack([x, y], axis=1)
    poly = Polyline(pts)
    pts = pts * (length / poly.length)  # rescale so arclength == length
    if closed:
        pts[-1] = pts[0]
    return Track(Polyline(pts), lane_width=lane_width)
