"""Small planar-geometry helpers shared across the engine."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def normalize_angle(theta: float) -> float:
    """Wrap an angle to the interval [-pi, pi)."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose:
    """A planar pose; heading is stored normalized to [-pi, pi)."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def polyline_length(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.sum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))))


def cumulative_arclength(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    seg = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
    return np.concatenate([[0.0], np.cumsum(seg)])


def point_at_arclength(points: np.ndarray, s: float) -> np.ndarray:
    """Interpolate a point at arc length s along a polyline (clamped to ends)."""
    pts = np.asarray(points, dtype=float)
    cum = cumulative_arclength(pts)
    s = min(max(s, 0.0), cum[-1])
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(i, len(pts) - 2)
    span = cum[i + 1] - cum[i]
    t = 0.0 if span <= 0.0 else (s - cum[i]) / span
    return pts[i] + t * (pts[i + 1] - pts[i])


def tangent_at_arclength(points: np.ndarray, s: float) -> float:
    """Heading of the polyline segment containing arc length s."""
    pts = np.asarray(points, dtype=float)
    cum = cumulative_arclength(pts)
    s = min(max(s, 0.0), cum[-1])
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(pts) - 2)
    # skip zero-length segments
    while i > 0 and cum[i + 1] - cum[i] <= 0.0:
        i -= 1
    d = pts[i + 1] - pts[i]
    return math.atan2(d[1], d[0])


def resample_polyline(points: np.ndarray, spacing: float) -> np.ndarray:
    """Resample a polyline at roughly uniform spacing, keeping both endpoints."""
    pts = np.asarray(points, dtype=float)
    total = polyline_length(pts)
    if total <= 0.0:
        return pts[:1].copy()
    n = max(1, int(math.ceil(total / spacing)))
    stations = np.linspace(0.0, total, n + 1)
    return np.array([point_at_arclength(pts, s) for s in stations])


def oriented_rect_corners(cx: float, cy: float, heading: float,
                          length: float, width: float) -> np.ndarray:
    """Corners (4x2, CCW) of a rectangle centered at (cx, cy) aligned with heading."""
    c, s = math.cos(heading), math.sin(heading)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def rects_overlap_aabb(corners: np.ndarray, xmin: float, ymin: float,
                       xmax: float, ymax: float) -> bool:
    """Exact oriented-rectangle vs axis-aligned-box intersection test (SAT)."""
    box = np.array([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]])
    for poly_a, poly_b in ((corners, box), (box, corners)):
        for i in range(4):
            edge = poly_a[(i + 1) % 4] - poly_a[i]
            axis = np.array([-edge[1], edge[0]])
            pa = poly_a @ axis
            pb = poly_b @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True
