"""Synthetic camera: deterministic bird's-eye rasterization.

The frame covers a window ahead of the vehicle in its own frame (x forward,
y left). Each pixel takes the value of its center point: lane boundary
stripes are 255, obstacle disks 128 (drawn over the stripes), background 0.
Rows run far-to-near top-to-bottom; columns left-to-right.
"""

import math

import numpy as np

LANE_LINE = 255
OBSTACLE_FILL = 128
STROKE_M = 0.12


def pixel_centers_vehicle_frame(cfg) -> np.ndarray:
    """[h*w, 2] pixel-center coordinates (x forward, y left), row-major."""
    h, w = cfg.frame_height, cfg.frame_width
    ahead = (h - np.arange(h) - 0.5) * (cfg.cam_ahead_m / h)
    left = (w / 2.0 - np.arange(w) - 0.5) * (cfg.cam_width_m / w)
    xs = np.repeat(ahead, w)
    ys = np.tile(left, h)
    return np.stack([xs, ys], axis=1)


def render_camera(state, track, obstacles, cfg) -> np.ndarray:
    h, w = cfg.frame_height, cfg.frame_width
    pose = state.pose
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    local = pixel_centers_vehicle_frame(cfg)
    world = np.empty_like(local)
    world[:, 0] = pose.x + c * local[:, 0] - s * local[:, 1]
    world[:, 1] = pose.y + s * local[:, 0] + c * local[:, 1]

    # restrict projection to centerline segments near the camera window
    reach = cfg.cam_ahead_m + cfg.cam_width_m
    try:
        s_ego, _ = track.centerline.project(pose.position())
        seg_idx = track.centerline.segments_near(s_ego, behind=reach, ahead=reach + cfg.cam_ahead_m)
        if len(seg_idx) == 0:
            seg_idx = None
    except ValueError:
        seg_idx = None
    _, lateral, interior = track.centerline.project_many(world, seg_idx)

    frame = np.zeros(h * w, dtype=np.uint8)
    half_stroke = STROKE_M / 2.0
    on_line = np.zeros(len(world), dtype=bool)
    for b in track.boundary_offsets():
        on_line |= np.abs(lateral - b) <= half_stroke
    frame[on_line & interior] = LANE_LINE

    for o in obstacles:
        d2 = (world[:, 0] - o.pose.x) ** 2 + (world[:, 1] - o.pose.y) ** 2
        frame[d2 <= o.radius ** 2] = OBSTACLE_FILL

    return frame.reshape(h, w)
