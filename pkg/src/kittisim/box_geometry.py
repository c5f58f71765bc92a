"""Oriented 3D box algebra: frame conversions, corners, projection, rotated IoU.

Boxes are upright (gravity-aligned) oriented boxes in one of three tagged
frames:

* ``CARLA_WORLD`` — left-handed, x forward, y right, z up, centered on the
  sensor carrier; yaw about z.
* ``KITTI_LIDAR`` — right-handed sensor frame, x forward, y left, z up;
  yaw about z.
* ``KITTI_CAMERA`` — x right, y down, z forward; yaw (``rotation_y``) about
  the y axis.

Rotated overlap is computed by Sutherland–Hodgman clipping of the two
bird's-eye-view footprints followed by the shoelace formula; the 3D overlap
multiplies that area by the vertical interval overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BehindCamera, FrameMismatch
from .kitti_io import CalibrationSet, LabelRecord


class Frame(Enum):
    CARLA_WORLD = "carla_world"
    KITTI_LIDAR = "kitti_lidar"
    KITTI_CAMERA = "kitti_camera"


def normalize_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return float((a + math.pi) % (2.0 * math.pi) - math.pi)


@dataclass
class Box3D:
    """Oriented box: geometric center, (l, w, h) extents, yaw, frame tag.

    ``yaw`` is the rotation about the frame's vertical axis (z for the two
    z-up frames, y for the camera frame, where it plays the role of the
    KITTI ``rotation_y`` field).
    """

    center: np.ndarray
    dims: tuple[float, float, float]
    yaw: float
    frame: Frame
    class_name: str = "Car"
    score: float | None = None

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.center.shape != (3,):
            raise ValueError(f"center must be a 3-vector, got shape {self.center.shape}")
        if not np.all(np.isfinite(self.center)):
            raise ValueError("box center must be finite")
        l, w, h = (float(v) for v in self.dims)
        if not (l > 0 and w > 0 and h > 0) or not all(map(math.isfinite, (l, w, h))):
            raise ValueError(f"box dims must be positive and finite, got {self.dims}")
        self.dims = (l, w, h)
        if not math.isfinite(self.yaw):
            raise ValueError("box yaw must be finite")
        self.yaw = normalize_angle(float(self.yaw))
        if not isinstance(self.frame, Frame):
            raise ValueError(f"frame must be a Frame, got {self.frame!r}")

    @property
    def volume(self) -> float:
        l, w, h = self.dims
        return l * w * h


# Corner layout: indices 0-3 trace the bottom face counter-clockwise (seen
# from above), 4-7 the top face in the same order, starting at the
# (+length, -width) corner.
_CORNER_SIGNS = np.array(
    [
        [+1, -1, -1],
        [+1, +1, -1],
        [-1, +1, -1],
        [-1, -1, -1],
        [+1, -1, +1],
        [+1, +1, +1],
        [-1, +1, +1],
        [-1, -1, +1],
    ],
    dtype=np.float64,
)


def corners_3d(box: Box3D) -> np.ndarray:
    """Return the 8 corner points, shape (8, 3), in the box's own frame."""
    l, w, h = box.dims
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    if box.frame is Frame.KITTI_CAMERA:
        # length along x, width along z, height along y (down); yaw about y
        local = _CORNER_SIGNS * np.array([l / 2.0, w / 2.0, h / 2.0])
        local = local[:, [0, 2, 1]]  # (x, z, y) signs -> (x, y, z) columns
        rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    else:
        # length along x, width along y, height along z; yaw about z
        local = _CORNER_SIGNS * np.array([l / 2.0, w / 2.0, h / 2.0])
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return local @ rot.T + box.center


def bev_footprint(box: Box3D) -> np.ndarray:
    """Footprint rectangle in the frame's horizontal plane, (4, 2), CCW.

    Plane axes are (x, y) for the z-up frames and (x, z) for the camera
    frame.
    """
    corners = corners_3d(box)
    if box.frame is Frame.KITTI_CAMERA:
        pts = corners[:4][:, [0, 2]]
    else:
        pts = corners[:4][:, [0, 1]]
    if shoelace_area(pts) < 0:
        pts = pts[::-1]
    # contiguous so identical vertex sets sum identically in the shoelace
    return np.ascontiguousarray(pts)


def shoelace_area(pts: np.ndarray) -> float:
    """Signed polygon area; positive for counter-clockwise vertex order."""
    pts = np.asarray(pts, dtype=np.float64)
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland–Hodgman clip of a convex polygon against a convex CCW one.

    Returns the intersection polygon vertices, shape (K, 2); K may be 0.
    Edge- or point-touching contact yields a degenerate polygon of area 0.
    """
    output = [tuple(p) for p in np.asarray(subject, dtype=np.float64)]
    clip = np.asarray(clip, dtype=np.float64)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inputs = output
        output = []
        sx, sy = inputs[-1]
        s_in = ex * (sy - ay) - ey * (sx - ax) >= 0.0  # on the edge counts as inside
        for px, py in inputs:
            p_in = ex * (py - ay) - ey * (px - ax) >= 0.0
            if p_in != s_in:
                # segment (s, p) crosses the clip edge line
                dcx, dcy = ax - bx, ay - by
                dpx, dpy = sx - px, sy - py
                den = dcx * dpy - dcy * dpx
                if abs(den) > 1e-12:
                    n1 = ax * by - ay * bx
                    n2 = sx * py - sy * px
                    output.append(((n1 * dpx - n2 * dcx) / den, (n1 * dpy - n2 * dcy) / den))
            if p_in:
                output.append((px, py))
            sx, sy, s_in = px, py, p_in
    return np.array(output, dtype=np.float64).reshape(-1, 2)


def intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    poly = clip_convex(a, b)
    return abs(shoelace_area(poly))


def _require_same_frame(a: Box3D, b: Box3D) -> None:
    if a.frame is not b.frame:
        raise FrameMismatch(f"boxes in different frames: {a.frame.value} vs {b.frame.value}")


def bev_iou(a: Box3D, b: Box3D) -> float:
    """Bird's-eye-view overlap-over-union of the two footprints, in [0, 1]."""
    _require_same_frame(a, b)
    fa, fb = bev_footprint(a), bev_footprint(b)
    inter = intersection_area(fa, fb)
    union = abs(shoelace_area(fa)) + abs(shoelace_area(fb)) - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def _vertical_interval(box: Box3D) -> tuple[float, float]:
    axis = 1 if box.frame is Frame.KITTI_CAMERA else 2
    h = box.dims[2]
    c = float(box.center[axis])
    return c - h / 2.0, c + h / 2.0


def iou_3d(a: Box3D, b: Box3D) -> float:
    """Volume overlap-over-union of two upright oriented boxes, in [0, 1]."""
    _require_same_frame(a, b)
    fa, fb = bev_footprint(a), bev_footprint(b)
    inter_area = intersection_area(fa, fb)
    alo, ahi = _vertical_interval(a)
    blo, bhi = _vertical_interval(b)
    overlap_h = max(0.0, min(ahi, bhi) - max(alo, blo))
    inter_vol = inter_area * overlap_h
    # heights from the same interval endpoints so that iou(a, a) is exactly 1
    vol_a = abs(shoelace_area(fa)) * (ahi - alo)
    vol_b = abs(shoelace_area(fb)) * (bhi - blo)
    union = vol_a + vol_b - inter_vol
    if union <= 0.0:
        return 0.0
    return min(max(inter_vol / union, 0.0), 1.0)


# --- frame conversions ------------------------------------------------------
#
# The left-handed world and the sensor frame differ by a y flip, which also
# negates yaw.  The sensor-to-camera yaw map is fixed as
# rotation_y = yaw_sensor - pi/2 so that, composed with the flip, a world box
# gets rotation_y = -yaw_world - pi/2 -- the convention the dataset writer
# uses, so labels and detector output stay mutually consistent.


def carla_to_lidar(box: Box3D) -> Box3D:
    if box.frame is not Frame.CARLA_WORLD:
        raise FrameMismatch(f"expected CARLA_WORLD box, got {box.frame.value}")
    cx, cy, cz = box.center
    return Box3D(
        center=np.array([cx, -cy, cz]),
        dims=box.dims,
        yaw=normalize_angle(-box.yaw),
        frame=Frame.KITTI_LIDAR,
        class_name=box.class_name,
        score=box.score,
    )


def lidar_to_carla(box: Box3D) -> Box3D:
    if box.frame is not Frame.KITTI_LIDAR:
        raise FrameMismatch(f"expected KITTI_LIDAR box, got {box.frame.value}")
    cx, cy, cz = box.center
    return Box3D(
        center=np.array([cx, -cy, cz]),
        dims=box.dims,
        yaw=normalize_angle(-box.yaw),
        frame=Frame.CARLA_WORLD,
        class_name=box.class_name,
        score=box.score,
    )


def lidar_to_camera(box: Box3D, calib: CalibrationSet) -> Box3D:
    if box.frame is not Frame.KITTI_LIDAR:
        raise FrameMismatch(f"expected KITTI_LIDAR box, got {box.frame.value}")
    p = calib.Tr_velo_to_cam @ np.append(box.center, 1.0)
    p = calib.R0_rect @ p
    return Box3D(
        center=p,
        dims=box.dims,
        yaw=normalize_angle(box.yaw - math.pi / 2.0),
        frame=Frame.KITTI_CAMERA,
        class_name=box.class_name,
        score=box.score,
    )


def camera_to_lidar(box: Box3D, calib: CalibrationSet) -> Box3D:
    if box.frame is not Frame.KITTI_CAMERA:
        raise FrameMismatch(f"expected KITTI_CAMERA box, got {box.frame.value}")
    p = calib.R0_rect.T @ box.center
    rot = calib.Tr_velo_to_cam[:, :3]
    t = calib.Tr_velo_to_cam[:, 3]
    p = rot.T @ (p - t)
    return Box3D(
        center=p,
        dims=box.dims,
        yaw=normalize_angle(box.yaw + math.pi / 2.0),
        frame=Frame.KITTI_LIDAR,
        class_name=box.class_name,
        score=box.score,
    )


def carla_to_kitti(box: Box3D, calib: CalibrationSet) -> Box3D:
    """Left-handed world box -> camera-frame box (handedness flip, then rigid
    sensor-to-camera transform); rotation_y comes out as -yaw_world - pi/2."""
    return lidar_to_camera(carla_to_lidar(box), calib)


def kitti_to_carla(box: Box3D, calib: CalibrationSet) -> Box3D:
    """Exact inverse of :func:`carla_to_kitti`."""
    return lidar_to_carla(camera_to_lidar(box, calib))


def box_from_label(rec: LabelRecord) -> Box3D:
    """Camera-frame box from a label line (location is the bottom center,
    dims are stored (h, w, l))."""
    h, w, l = rec.dims
    x, y, z = rec.location
    return Box3D(
        center=np.array([x, y - h / 2.0, z]),
        dims=(l, w, h),
        yaw=rec.rotation_y,
        frame=Frame.KITTI_CAMERA,
        class_name=rec.class_name,
        score=rec.score,
    )


def sensor_box_to_label(
    box: Box3D,
    calib: CalibrationSet,
    occlusion: int = 0,
    image_size: tuple[int, int] = (1242, 375),
    max_truncation: float = 0.99,
) -> LabelRecord | None:
    """Sensor-frame box -> label record, or None when it cannot be labeled
    (behind the camera, fully truncated, or a degenerate 2D footprint)."""
    cam = lidar_to_camera(box, calib)
    try:
        bbox, truncation = project_to_image(cam, calib.P2, image_size)
    except BehindCamera:
        return None
    if truncation >= max_truncation:
        return None
    left, top, right, bottom = bbox
    if right - left < 1.0 or bottom - top < 1.0:
        return None
    l, w, h = cam.dims
    cx, cy, cz = cam.center
    return LabelRecord(
        class_name=box.class_name,
        truncation=truncation,
        occlusion=occlusion,
        alpha=normalize_angle(cam.yaw - math.atan2(cx, cz)),
        bbox2d=bbox,
        dims=(h, w, l),
        location=(cx, cy + h / 2.0, cz),
        rotation_y=cam.yaw,
        score=box.score,
    )


# --- image projection -------------------------------------------------------

_MIN_DEPTH = 0.1  # meters in front of the image plane


def project_to_image(
    box: Box3D,
    P2: np.ndarray,
    image_size: tuple[int, int] = (1242, 375),
) -> tuple[tuple[float, float, float, float], float]:
    """Project a camera-frame box and return (bbox2d, truncation).

    bbox2d is the axis-aligned hull of the projected corners clipped to the
    image; truncation is the clipped-away area fraction of that hull.
    Raises BehindCamera when every corner is behind the image plane.
    """
    if box.frame is not Frame.KITTI_CAMERA:
        raise FrameMismatch(f"expected KITTI_CAMERA box, got {box.frame.value}")
    corners = corners_3d(box)
    z = corners[:, 2]
    if np.all(z <= _MIN_DEPTH):
        raise BehindCamera(f"box at z={box.center[2]:.2f} m is behind the camera")
    # corners straddling the image plane are clamped to the near plane
    zc = np.maximum(z, _MIN_DEPTH)
    pts = (P2 @ np.column_stack([corners[:, 0], corners[:, 1], zc, np.ones(8)]).T).T
    uv = pts[:, :2] / pts[:, 2:3]
    left, top = uv.min(axis=0)
    right, bottom = uv.max(axis=0)
    full_area = (right - left) * (bottom - top)
    w, h = image_size
    cl, ct = max(left, 0.0), max(top, 0.0)
    cr, cb = min(right, float(w)), min(bottom, float(h))
    clipped_area = max(0.0, cr - cl) * max(0.0, cb - ct)
    if full_area <= 0.0 or clipped_area <= 0.0:
        return (0.0, 0.0, 0.0, 0.0), 1.0
    truncation = min(max(1.0 - clipped_area / full_area, 0.0), 1.0)
    return (float(cl), float(ct), float(cr), float(cb)), truncation
