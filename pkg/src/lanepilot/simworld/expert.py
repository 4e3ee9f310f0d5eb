"""Scripted expert driver: pure pursuit on a lane center."""

import math

from .geometry import Pose
from .track import Track


def expert_steering(state, track: Track, lane: int, cfg) -> float:
    """Pure-pursuit steering toward the lane center a lookahead ahead.

    Projects the vehicle onto the centerline, takes the lane-center point
    lookahead_m further along, and steers with the standard pursuit law
    delta = atan2(2 L sin(alpha), lookahead), clamped to the expert limit.
    """
    pose: Pose = state.pose
    s, _ = track.locate(pose)
    target = track.lane_center_point(lane, s + cfg.lookahead_m)
    dx, dy = target[0] - pose.x, target[1] - pose.y
    c, sn = math.cos(-pose.heading), math.sin(-pose.heading)
    tx = c * dx - sn * dy
    ty = sn * dx + c * dy
    alpha = math.atan2(ty, tx)
    delta = math.atan2(2.0 * cfg.wheelbase_m * math.sin(alpha), cfg.lookahead_m)
    return min(max(delta, -cfg.expert_max_steer), cfg.expert_max_steer)
