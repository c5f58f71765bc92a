"""Deterministic non-neural 3D detector: ground removal, Euclidean
clustering, oriented box fitting.

Exists so the generate -> detect -> evaluate loop runs without any learned
model.  The fit is a principal-axis estimate with extent floors, not a
minimum-area rectangle; adequate for sanity loops, documented as
non-optimal.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass

import numpy as np

from .box_geometry import Box3D, Frame, normalize_angle
from .errors import DegenerateCloud
from .kitti_io import PointCloud


@dataclass(frozen=True)
class DetectorConfig:
    ground_z_band: float = 0.2  # meters around the fitted plane
    cluster_radius: float = 0.7  # meters, BEV neighbor distance
    min_cluster_points: int = 15
    score_norm: int = 200  # points for a full-confidence detection
    ground_quantile: float = 0.35  # lowest-z fraction used for the plane fit
    # partially observed clusters (rear face only, single side) under-size the
    # box; extents below these floors grow away from the sensor
    min_extent: tuple[float, float, float] = (4.0, 1.6, 1.3)

    def __post_init__(self):
        if min(self.ground_z_band, self.cluster_radius) <= 0:
            raise ValueError("ground_z_band and cluster_radius must be positive")
        if self.min_cluster_points < 1 or self.score_norm < 1:
            raise ValueError("min_cluster_points and score_norm must be >= 1")
        if not 0.0 < self.ground_quantile <= 1.0:
            raise ValueError("ground_quantile must be in (0, 1]")
        if min(self.min_extent) < 0:
            raise ValueError("min_extent must be non-negative")


def remove_ground(cloud: PointCloud, cfg: DetectorConfig = DetectorConfig()) -> PointCloud:
    """Drop points within ``ground_z_band`` of a plane fitted to the lowest-z
    quantile of the cloud."""
    if len(cloud) < 10:
        raise DegenerateCloud(f"cannot fit a ground plane to {len(cloud)} points")
    pts = cloud.points.astype(np.float64)
    z = pts[:, 2]
    cutoff = np.quantile(z, cfg.ground_quantile)
    low = pts[z <= cutoff]
    # plane z = a x + b y + c, least squares on the low slice
    design = np.column_stack([low[:, 0], low[:, 1], np.ones(len(low))])
    coeffs, *_ = np.linalg.lstsq(design, low[:, 2], rcond=None)
    a, b, c = coeffs
    dist = np.abs(pts[:, 2] - (a * pts[:, 0] + b * pts[:, 1] + c)) / math.sqrt(
        1.0 + a * a + b * b
    )
    return PointCloud(cloud.points[dist > cfg.ground_z_band])


def cluster(cloud: PointCloud, cfg: DetectorConfig = DetectorConfig()) -> list[np.ndarray]:
    """Connected components of the BEV ``cluster_radius`` neighbor relation,
    grid-accelerated.  Components smaller than ``min_cluster_points`` are
    dropped.  Returned index arrays are disjoint and deterministic."""
    pts = cloud.points[:, :2].astype(np.float64)
    n = len(pts)
    if n == 0:
        return []
    cell = cfg.cluster_radius
    grid: dict[tuple[int, int], list[int]] = defaultdict(list)
    cells = np.floor(pts / cell).astype(np.int64)
    for i, (cx, cy) in enumerate(map(tuple, cells)):
        grid[(cx, cy)].append(i)

    r2 = cfg.cluster_radius**2
    visited = np.zeros(n, dtype=bool)
    clusters = []
    for seed in range(n):
        if visited[seed]:
            continue
        visited[seed] = True
        component = [seed]
        queue = deque([seed])
        while queue:
            i = queue.popleft()
            cx, cy = cells[i]
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for j in grid.get((cx + dx, cy + dy), ()):
                        if visited[j]:
                            continue
                        d = pts[j] - pts[i]
                        if d[0] * d[0] + d[1] * d[1] <= r2:
                            visited[j] = True
                            component.append(j)
                            queue.append(j)
        if len(component) >= cfg.min_cluster_points:
            clusters.append(np.array(sorted(component)))
    return clusters


def _anchored_extent(lo: float, hi: float, floor: float, sensor: float) -> tuple[float, float]:
    """Grow [lo, hi] to at least ``floor`` on the side away from the sensor."""
    deficit = floor - (hi - lo)
    if deficit <= 0.0:
        return lo, hi
    if sensor < lo:
        return lo, hi + deficit
    if sensor > hi:
        return lo - deficit, hi
    return lo - deficit / 2.0, hi + deficit / 2.0


_FACE_MAX_LENGTH = 2.6  # a principal extent below this cannot be a car length
_FACE_MAX_DEPTH = 0.6  # and this thin across means we saw a single face


def fit_box(points: np.ndarray, cfg: DetectorConfig = DetectorConfig()) -> Box3D:
    """Oriented box around one cluster: yaw from the BEV principal axis,
    extents from rotated min/max (grown to the configured floors), score
    proportional to the point count."""
    pts = np.asarray(points, dtype=np.float64)[:, :3]
    bev = pts[:, :2]
    centroid = bev.mean(axis=0)
    centered = bev - centroid
    cov = centered.T @ centered / len(bev)
    eigvals, eigvecs = np.linalg.eigh(cov)
    axis = eigvecs[:, int(np.argmax(eigvals))]
    yaw = math.atan2(axis[1], axis[0])
    if math.cos(yaw) < 0:  # align the heading with the sensor's forward axis
        yaw = normalize_angle(yaw + math.pi)

    def local_extents(angle: float):
        c, s = math.cos(angle), math.sin(angle)
        lx = c * bev[:, 0] + s * bev[:, 1]
        ly = -s * bev[:, 0] + c * bev[:, 1]
        return lx, ly

    if max(cfg.min_extent) > 0.0:
        lx, ly = local_extents(yaw)
        span_major = lx.max() - lx.min()
        span_minor = ly.max() - ly.min()
        # a thin strip shorter than any car is a single face seen head-on;
        # its direction is the car's width, not its length
        if span_major < _FACE_MAX_LENGTH and span_minor < _FACE_MAX_DEPTH:
            yaw = normalize_angle(yaw + math.pi / 2.0)
            if math.cos(yaw) < 0:
                yaw = normalize_angle(yaw + math.pi)

    c, s = math.cos(yaw), math.sin(yaw)
    local_x = c * bev[:, 0] + s * bev[:, 1]
    local_y = -s * bev[:, 0] + c * bev[:, 1]
    # sensor origin expressed in the rotated frame stays at (0, 0)
    lo_x, hi_x = _anchored_extent(local_x.min(), local_x.max(), cfg.min_extent[0], 0.0)
    lo_y, hi_y = _anchored_extent(local_y.min(), local_y.max(), cfg.min_extent[1], 0.0)
    lo_z, hi_z = _anchored_extent(pts[:, 2].min(), pts[:, 2].max(), cfg.min_extent[2], 0.0)

    center_local = np.array([(lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0])
    center_xy = np.array(
        [c * center_local[0] - s * center_local[1], s * center_local[0] + c * center_local[1]]
    )
    dims = (hi_x - lo_x, hi_y - lo_y, hi_z - lo_z)
    return Box3D(
        center=np.array([center_xy[0], center_xy[1], (lo_z + hi_z) / 2.0]),
        dims=dims,
        yaw=yaw,
        frame=Frame.KITTI_LIDAR,
        class_name="Car",
        score=min(1.0, len(pts) / cfg.score_norm),
    )


def detect_frame(cloud: PointCloud, cfg: DetectorConfig = DetectorConfig()) -> list[Box3D]:
    """Full per-frame pipeline; empty list for degenerate clouds."""
    try:
        elevated = remove_ground(cloud, cfg)
    except DegenerateCloud:
        return []
    return [fit_box(elevated.points[idx][:, :3], cfg) for idx in cluster(elevated, cfg)]
