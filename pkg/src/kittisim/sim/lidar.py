"""Spinning-LiDAR simulation: ray casting against the ground plane and
vehicle boxes, plus weather-conditioned corruption of the returns.

All geometry happens in the sensor frame (right-handed, x forward, y left,
z up, origin at the sensor).  Rays are enumerated elevation-major, azimuth
minor, so output point order is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..box_geometry import Box3D, Frame
from ..kitti_io import PointCloud
from .scenario import SceneState, VehicleState
from .weather import WeatherPreset

GROUND_REFLECTIVITY = 0.30
VEHICLE_REFLECTIVITY = 0.80
_NOISE_CLIP_SIGMA = 5.0  # keeps every point within max_range + 5 sigma


@dataclass(frozen=True)
class LidarConfig:
    channels: int = 64
    vertical_fov: tuple[float, float] = (-24.8, 2.0)  # degrees (low, high)
    horizontal_resolution: float = 0.2  # degrees
    max_range: float = 120.0  # meters
    mount_height: float = 1.73  # meters above the road

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if self.max_range <= 0 or self.horizontal_resolution <= 0:
            raise ValueError("max_range and horizontal_resolution must be positive")
        if self.vertical_fov[0] >= self.vertical_fov[1]:
            raise ValueError("vertical_fov must be (low, high) with low < high")


@lru_cache(maxsize=8)
def ray_directions(config: LidarConfig) -> np.ndarray:
    """Unit ray directions, shape (channels * n_azimuth, 3)."""
    lo, hi = (math.radians(v) for v in config.vertical_fov)
    elev = np.linspace(lo, hi, config.channels)
    n_az = int(round(360.0 / config.horizontal_resolution))
    azim = np.arange(n_az) * math.radians(config.horizontal_resolution)
    ce, se = np.cos(elev), np.sin(elev)
    ca, sa = np.cos(azim), np.sin(azim)
    dirs = np.empty((config.channels * n_az, 3))
    dirs[:, 0] = np.outer(ce, ca).ravel()
    dirs[:, 1] = np.outer(ce, sa).ravel()
    dirs[:, 2] = np.repeat(se, n_az)
    return dirs


def vehicle_sensor_box(
    vehicle: VehicleState, ego: VehicleState, lane_width: float, ego_lane: int, mount_height: float
) -> Box3D:
    """A vehicle's box in the sensor frame (x forward, y left, z up)."""
    y_world = (vehicle.lane - ego_lane) * lane_width
    l, w, h = vehicle.box_dims
    return Box3D(
        center=np.array(
            [vehicle.s - ego.s, -y_world, h / 2.0 - mount_height]
        ),
        dims=(l, w, h),
        yaw=-vehicle.yaw,  # handedness flip world -> sensor
        frame=Frame.KITTI_LIDAR,
        class_name="Car",
    )


@dataclass
class RayHits:
    """Geometric (noise-free) ray casting result: nearest hit per returning ray."""

    directions: np.ndarray  # (K, 3) unit vectors
    ranges: np.ndarray  # (K,) meters
    surface: np.ndarray  # (K,) int: 0 ground, 1 + vehicle index


def _ray_box_ranges(dirs: np.ndarray, box: Box3D) -> np.ndarray:
    """Range to a box per ray (inf on miss), via the slab test in box coords."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    rot = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])  # world -> local
    origin = rot @ (-box.center)
    d = dirs @ rot.T
    half = np.array([box.dims[0] / 2.0, box.dims[1] / 2.0, box.dims[2] / 2.0])
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half - origin) / d
        t2 = (half - origin) / d
    near = np.fmin(t1, t2).max(axis=1)
    far = np.fmax(t1, t2).min(axis=1)
    # rays parallel to a slab miss unless the origin lies inside that slab
    parallel = np.abs(d) < 1e-12
    inside = np.abs(origin) <= half
    miss_parallel = (parallel & ~inside).any(axis=1)
    hit = (far >= near) & (far > 1e-6) & ~miss_parallel
    t = np.where(near > 1e-6, near, far)
    return np.where(hit, t, np.inf)


def cast_rays(state: SceneState, config: LidarConfig, lane_width: float = 3.5, ego_lane: int | None = None) -> RayHits:
    """Nearest-hit ray casting against the flat ground and every non-ego box."""
    if ego_lane is None:
        ego_lane = int(round(state.ego.lane))
    dirs = ray_directions(config)
    n = len(dirs)
    best_t = np.full(n, np.inf)
    best_surf = np.full(n, -1, dtype=np.int64)

    dz = dirs[:, 2]
    with np.errstate(divide="ignore"):
        t_ground = np.where(dz < 0.0, -config.mount_height / dz, np.inf)
    mask = t_ground < best_t
    best_t[mask] = t_ground[mask]
    best_surf[mask] = 0

    for i, vehicle in enumerate(state.others):
        box = vehicle_sensor_box(vehicle, state.ego, lane_width, ego_lane, config.mount_height)
        t_box = _ray_box_ranges(dirs, box)
        mask = t_box < best_t
        best_t[mask] = t_box[mask]
        best_surf[mask] = 1 + i

    returning = np.isfinite(best_t) & (best_t <= config.max_range)
    return RayHits(
        directions=dirs[returning],
        ranges=best_t[returning],
        surface=best_surf[returning],
    )


def apply_weather(
    hits: RayHits, config: LidarConfig, weather: WeatherPreset, rng_seed
) -> PointCloud:
    """Corrupt geometric hits into a recorded cloud: range noise, dropout,
    intensity attenuation.  Deterministic for a given seed.

    Draw order is fixed (all range noise, then all dropout draws) so that,
    for one scene and seed, a harsher preset drops a superset of the points
    a milder one drops.
    """
    rng = np.random.default_rng(rng_seed)
    n = len(hits.ranges)
    noise = np.clip(rng.standard_normal(n), -_NOISE_CLIP_SIGMA, _NOISE_CLIP_SIGMA)
    noisy_range = hits.ranges + weather.range_noise_sigma * noise

    u = rng.uniform(size=n)
    p_drop = weather.dropout_base * (
        1.0 + weather.precipitation * hits.ranges / config.max_range
    )
    keep = u >= p_drop

    reflect = np.where(hits.surface == 0, GROUND_REFLECTIVITY, VEHICLE_REFLECTIVITY)
    intensity = np.clip(
        reflect
        * weather.intensity_scale
        * np.exp(-weather.attenuation_coeff * hits.ranges),
        0.0,
        1.0,
    )

    pts = hits.directions[keep] * noisy_range[keep, None]
    return PointCloud(np.column_stack([pts, intensity[keep]]).astype(np.float32))


def simulate_lidar(
    state: SceneState,
    config: LidarConfig,
    weather: WeatherPreset,
    rng_seed,
    lane_width: float = 3.5,
) -> PointCloud:
    """One recorded sweep for a scene under a weather preset."""
    return apply_weather(cast_rays(state, config, lane_width), config, weather, rng_seed)


def _azimuth_interval(box: Box3D) -> tuple[float, float]:
    """Azimuth span of a box's footprint as (center, half_width), radians."""
    from ..box_geometry import bev_footprint

    corners = bev_footprint(box)
    az = np.arctan2(corners[:, 1], corners[:, 0])
    center = math.atan2(float(np.sin(az).mean()), float(np.cos(az).mean()))
    rel = (az - center + math.pi) % (2.0 * math.pi) - math.pi
    return center, float(np.abs(rel).max())


def _blocked_fraction(target: Box3D, blockers: list[Box3D]) -> float:
    """Fraction of the target's azimuth span covered by nearer boxes."""
    t_center, t_half = _azimuth_interval(target)
    if t_half <= 0.0:
        return 0.0
    t_range = float(np.linalg.norm(target.center[:2]))
    covered = 0.0
    intervals = []
    for b in blockers:
        if float(np.linalg.norm(b.center[:2])) >= t_range:
            continue
        b_center, b_half = _azimuth_interval(b)
        rel = (b_center - t_center + math.pi) % (2.0 * math.pi) - math.pi
        lo = max(rel - b_half, -t_half)
        hi = min(rel + b_half, t_half)
        if hi > lo:
            intervals.append((lo, hi))
    if not intervals:
        return 0.0
    intervals.sort()
    cur_lo, cur_hi = intervals[0]
    for lo, hi in intervals[1:]:
        if lo > cur_hi:
            covered += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    covered += cur_hi - cur_lo
    return covered / (2.0 * t_half)


def occlusion_grade(target: Box3D, blockers: list[Box3D]) -> int:
    """0: under 10% of the azimuth span blocked, 1: under 50%, 2: otherwise."""
    frac = _blocked_fraction(target, blockers)
    if frac < 0.10:
        return 0
    if frac < 0.50:
        return 1
    return 2


def points_in_box(points: np.ndarray, box: Box3D, tol: float = 1e-6) -> int:
    """Count points inside an upright sensor-frame box (boundary inclusive)."""
    d = points[:, :3].astype(np.float64) - box.center
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    u = c * d[:, 0] + s * d[:, 1]
    v = -s * d[:, 0] + c * d[:, 1]
    l, w, h = box.dims
    inside = (
        (np.abs(u) <= l / 2.0 + tol)
        & (np.abs(v) <= w / 2.0 + tol)
        & (np.abs(d[:, 2]) <= h / 2.0 + tol)
    )
    return int(np.count_nonzero(inside))


def visibility_filter(
    state: SceneState,
    config: LidarConfig,
    box: Box3D,
    n_min: int = 8,
    lane_width: float = 3.5,
) -> tuple[bool, int]:
    """Whether a box collects at least ``n_min`` geometric returns, plus its
    occlusion grade from nearer boxes."""
    hits = cast_rays(state, config, lane_width)
    pts = hits.directions * hits.ranges[:, None]
    visible = points_in_box(pts, box) >= n_min
    ego_lane = int(round(state.ego.lane))
    blockers = [
        vehicle_sensor_box(v, state.ego, lane_width, ego_lane, config.mount_height)
        for v in state.others
    ]
    blockers = [b for b in blockers if not np.allclose(b.center, box.center)]
    return visible, occlusion_grade(box, blockers)
