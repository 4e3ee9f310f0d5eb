"""Planar geometry: poses, angle wrapping, polyline projection."""

import math
from dataclasses import dataclass

import numpy as np


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass
class Pose:
    x: float
    y: float
    heading: float  # radians CCW from +x, wrapped to (-pi, pi]

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite pose {self}")
        self.heading = wrap_angle(self.heading)

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


class Polyline:
    """Piecewise-linear curve with arclength parametrization.

    A polyline whose endpoints coincide is treated as closed: arclengths wrap
    modulo the total length.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError(f"need at least two 2D points, got shape {pts.shape}")
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0):
            raise ValueError("degenerate segment in polyline")
        self.points = pts
        self.seg_dir = seg / seg_len[:, None]          # unit directions
        self.seg_len = seg_len
        self.cum = np.concatenate(([0.0], np.cumsum(seg_len)))
        self.length = float(self.cum[-1])
        self.closed = bool(np.hypot(*(pts[-1] - pts[0])) < 1e-9)

    def _locate(self, s: float) -> tuple[int, float]:
        if self.closed:
            s = s % self.length
        else:
            s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum, s, side="right")) - 1
        i = min(max(i, 0), len(self.seg_len) - 1)
        return i, s - self.cum[i]

    def point_at(self, s: float) -> np.ndarray:
        i, t = self._locate(s)
        return self.points[i] + t * self.seg_dir[i]

    def direction_at(self, s: float) -> np.ndarray:
        i, _ = self._locate(s)
        return self.seg_dir[i]

    def heading_at(self, s: float) -> float:
        d = self.direction_at(s)
        return math.atan2(d[1], d[0])

    def segments_near(self, s_center: float, behind: float, ahead: float) -> np.ndarray:
        """Indices of segments overlapping [s_center - behind, s_center + ahead]."""
        lo, hi = s_center - behind, s_center + ahead
        n = len(self.seg_len)
        if self.closed and hi - lo >= self.length:
            return np.arange(n)
        starts, ends = self.cum[:-1], self.cum[1:]
        if not self.closed:
            mask = (ends >= lo) & (starts <= hi)
            return np.nonzero(mask)[0]
        lo_m, hi_m = lo % self.length, hi % self.length
        if lo_m <= hi_m:
            mask = (ends >= lo_m) & (starts <= hi_m)
        else:
            mask = (ends >= lo_m) | (starts <= hi_m)
        return np.nonzero(mask)[0]

    def project(self, point) -> tuple[float, float]:
        """Nearest point on the polyline.

        Returns (arclength, signed lateral distance); lateral is positive on
        the left of the travel direction.
        """
        s, lat, _ = self.project_many(np.asarray(point, dtype=np.float64)[None])
        return float(s[0]), float(lat[0])

    def project_many(self, points: np.ndarray, seg_idx: np.ndarray | None = None):
        """Vectorized projection of [m, 2] points onto (a subset of) segments.

        Returns (arclength [m], signed lateral [m], interior-flag [m]); the
        flag is False where the best projection clamped to an open end.
        """
        if seg_idx is None:
            seg_idx = np.arange(len(self.seg_len))
        a = self.points[seg_idx]                        # [k, 2]
        u = self.seg_dir[seg_idx]                       # [k, 2]
        ln = self.seg_len[seg_idx]                      # [k]
        rel = points[:, None, :] - a[None, :, :]        # [m, k, 2]
        t = rel[:, :, 0] * u[None, :, 0] + rel[:, :, 1] * u[None, :, 1]
        t = np.clip(t, 0.0, ln[None, :])
        closest = a[None, :, :] + t[:, :, None] * u[None, :, :]
        d = points[:, None, :] - closest
        dist2 = d[:, :, 0] ** 2 + d[:, :, 1] ** 2
        best = np.argmin(dist2, axis=1)                 # [m]
        rows = np.arange(len(points))
        tb = t[rows, best]
        ub = u[best]
        db = d[rows, best]
        cross = ub[:, 0] * db[:, 1] - ub[:, 1] * db[:, 0]
        dist = np.sqrt(dist2[rows, best])
        lateral = np.where(cross >= 0, dist, -dist)
        s = self.cum[seg_idx[best]] + tb
        if self.closed:
            interior = np.ones(len(points), dtype=bool)
        else:
            at_start = (seg_idx[best] == 0) & (tb <= 0.0)
            at_end = (seg_idx[best] == len(self.seg_len) - 1) & (tb >= ln[best])
            interior = ~(at_start | at_end)
        return s, lateral, interior
