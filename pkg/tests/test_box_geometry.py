import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kittisim import errors
from kittisim.box_geometry import (
    Box3D,
    Frame,
    bev_iou,
    carla_to_kitti,
    carla_to_lidar,
    corners_3d,
    iou_3d,
    kitti_to_carla,
    project_to_image,
    shoelace_area,
)
from kittisim.kitti_io import default_calibration


def lidar_box(center, dims, yaw, score=None):
    return Box3D(np.array(center, float), dims, yaw, Frame.KITTI_LIDAR, score=score)


# --- independent oracles ------------------------------------------------------


def contains(box: Box3D, pts: np.ndarray) -> np.ndarray:
    """Point-in-box test written from scratch (direct trig, no shared code)."""
    d = pts - box.center
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    l, wd, h = box.dims
    if box.frame is Frame.KITTI_CAMERA:
        # R_y(yaw) maps local (x, z) by [[c, s], [-s, c]]; invert via transpose
        u = c * d[:, 0] - s * d[:, 2]
        w = s * d[:, 0] + c * d[:, 2]
        return (np.abs(u) <= l / 2) & (np.abs(d[:, 1]) <= h / 2) & (np.abs(w) <= wd / 2)
    # R_z(yaw) maps local (x, y) by [[c, -s], [s, c]]; invert via transpose
    u = c * d[:, 0] + s * d[:, 1]
    v = -s * d[:, 0] + c * d[:, 1]
    return (np.abs(u) <= l / 2) & (np.abs(v) <= wd / 2) & (np.abs(d[:, 2]) <= h / 2)


def monte_carlo_iou(a: Box3D, b: Box3D, n: int, rng) -> float:
    """Volume IoU estimated by uniform sampling over the pair's bounding box."""
    corners = np.vstack([corners_3d(a), corners_3d(b)])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    pts = rng.uniform(lo, hi, size=(n, 3))
    in_a, in_b = contains(a, pts), contains(b, pts)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


# --- corners -------------------------------------------------------------------


def test_corners_unit_cube():
    box = lidar_box((0, 0, 0), (1, 1, 1), 0.0)
    corners = corners_3d(box)
    expected = {(sx * 0.5, sy * 0.5, sz * 0.5) for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)}
    got = {tuple(np.round(c, 12)) for c in corners}
    assert got == expected


def test_corners_yaw_quarter_turn_swaps_footprint_axes():
    box = lidar_box((0, 0, 0), (4, 2, 1), 0.0)
    turned = lidar_box((0, 0, 0), (4, 2, 1), math.pi / 2)
    c0, c1 = corners_3d(box), corners_3d(turned)
    assert c0[:, 0].max() == pytest.approx(2.0)
    assert c0[:, 1].max() == pytest.approx(1.0)
    assert c1[:, 0].max() == pytest.approx(1.0)
    assert c1[:, 1].max() == pytest.approx(2.0)


def test_corners_centroid_and_diagonals():
    rng = np.random.default_rng(11)
    for _ in range(50):
        dims = tuple(rng.uniform(0.3, 6.0, 3))
        box = lidar_box(rng.uniform(-20, 20, 3), dims, rng.uniform(-math.pi, math.pi))
        corners = corners_3d(box)
        np.testing.assert_allclose(corners.mean(axis=0), box.center, atol=1e-12)
        l, w, h = dims
        # edge lengths along the three box axes, read off the corner layout
        assert np.linalg.norm(corners[0] - corners[3]) == pytest.approx(l, abs=1e-9)
        assert np.linalg.norm(corners[0] - corners[1]) == pytest.approx(w, abs=1e-9)
        assert np.linalg.norm(corners[0] - corners[4]) == pytest.approx(h, abs=1e-9)


# --- frame conversions -----------------------------------------------------------


def test_carla_origin_maps_to_camera_origin():
    calib = default_calibration()
    box = Box3D(np.zeros(3), (4.0, 2.0, 1.5), 0.0, Frame.CARLA_WORLD)
    cam = carla_to_kitti(box, calib)
    assert cam.frame is Frame.KITTI_CAMERA
    np.testing.assert_allclose(cam.center, np.zeros(3), atol=1e-12)
    assert cam.yaw == pytest.approx(-math.pi / 2)


def test_handedness_flip_negates_y():
    box = Box3D(np.array([0.0, 5.0, 0.0]), (4.0, 2.0, 1.5), 0.3, Frame.CARLA_WORLD)
    sensor = carla_to_lidar(box)
    np.testing.assert_allclose(sensor.center, [0.0, -5.0, 0.0])
    assert sensor.yaw == pytest.approx(-0.3)


def test_yaw_convention_pinned():
    calib = default_calibration()
    for yaw in (0.0, 0.4, -1.2, 2.9):
        box = Box3D(np.array([10.0, 2.0, 0.5]), (4.0, 2.0, 1.5), yaw, Frame.CARLA_WORLD)
        cam = carla_to_kitti(box, calib)
        assert cam.yaw == pytest.approx(
            (-yaw - math.pi / 2 + math.pi) % (2 * math.pi) - math.pi, abs=1e-12
        )


@given(
    st.tuples(st.floats(-40, 40), st.floats(-10, 10), st.floats(-2, 2)),
    st.tuples(st.floats(0.5, 6), st.floats(0.5, 3), st.floats(0.5, 2.5)),
    st.floats(-math.pi, math.pi),
)
def test_round_trip_conversion_identity(center, dims, yaw):
    calib = default_calibration()
    box = Box3D(np.array(center), dims, yaw, Frame.CARLA_WORLD)
    back = kitti_to_carla(carla_to_kitti(box, calib), calib)
    assert back.frame is Frame.CARLA_WORLD
    np.testing.assert_allclose(back.center, box.center, atol=1e-12)
    assert abs((back.yaw - box.yaw + math.pi) % (2 * math.pi) - math.pi) < 1e-12


def test_frame_mismatch_rejected():
    a = lidar_box((0, 0, 0), (1, 1, 1), 0.0)
    b = Box3D(np.zeros(3), (1.0, 1.0, 1.0), 0.0, Frame.KITTI_CAMERA)
    with pytest.raises(errors.FrameMismatch):
        iou_3d(a, b)
    with pytest.raises(errors.FrameMismatch):
        carla_to_lidar(a)


# --- IoU -------------------------------------------------------------------------


def test_bev_iou_identical_boxes():
    a = lidar_box((3, -2, 0.5), (4.2, 1.9, 1.6), 0.7)
    assert bev_iou(a, a) == 1.0


def test_bev_iou_disjoint():
    a = lidar_box((0, 0, 0), (1, 1, 1), 0.2)
    b = lidar_box((100, 0, 0), (1, 1, 1), -0.4)
    assert bev_iou(a, b) == 0.0


def test_bev_iou_half_shift_closed_form():
    a = lidar_box((0, 0, 0), (1, 1, 1), 0.0)
    b = lidar_box((0.5, 0, 0), (1, 1, 1), 0.0)
    assert bev_iou(a, b) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_bev_iou_edge_contact_is_zero():
    a = lidar_box((0, 0, 0), (1, 1, 1), 0.0)
    b = lidar_box((1.0, 0, 0), (1, 1, 1), 0.0)
    assert bev_iou(a, b) == pytest.approx(0.0, abs=1e-12)


def test_iou3d_identical_exact():
    a = lidar_box((5, 1, 0.7), (4.5, 1.8, 1.5), -2.1)
    assert iou_3d(a, a) == 1.0


def test_iou3d_unit_cubes_offset_half():
    a = lidar_box((0, 0, 0), (1, 1, 1), 0.0)
    b = lidar_box((0.5, 0, 0), (1, 1, 1), 0.0)
    assert iou_3d(a, b) == pytest.approx(1.0 / 3.0, abs=1e-9)


def test_iou3d_yaw_plus_pi_self_overlap():
    a = lidar_box((2, 3, 0.5), (4.0, 1.8, 1.4), 0.6)
    b = lidar_box((2, 3, 0.5), (4.0, 1.8, 1.4), 0.6 + math.pi)
    assert iou_3d(a, b) == pytest.approx(1.0, abs=1e-9)


boxes = st.builds(
    lidar_box,
    st.tuples(st.floats(-10, 10), st.floats(-10, 10), st.floats(-2, 2)),
    st.tuples(st.floats(0.3, 6), st.floats(0.3, 6), st.floats(0.3, 4)),
    st.floats(-math.pi, math.pi),
)


@given(boxes, boxes)
@settings(max_examples=60)
def test_iou_symmetry_and_range(a, b):
    v = iou_3d(a, b)
    assert 0.0 <= v <= 1.0
    assert iou_3d(b, a) == pytest.approx(v, abs=1e-12)
    assert iou_3d(a, a) == 1.0
    bv = bev_iou(a, b)
    assert 0.0 <= bv <= 1.0
    assert bev_iou(b, a) == pytest.approx(bv, abs=1e-12)


def overlapping_pairs(rng, count):
    pairs = []
    while len(pairs) < count:
        dims_a = tuple(rng.uniform(0.5, 4.0, 3))
        a = lidar_box(rng.uniform(-5, 5, 3), dims_a, rng.uniform(-math.pi, math.pi))
        offset = rng.uniform(-0.6, 0.6, 3) * np.array(dims_a)
        b = lidar_box(
            a.center + offset,
            tuple(rng.uniform(0.5, 4.0, 3)),
            rng.uniform(-math.pi, math.pi),
        )
        if iou_3d(a, b) > 0.0:
            pairs.append((a, b))
    return pairs


def test_iou3d_matches_monte_carlo():
    rng = np.random.default_rng(2024)
    for a, b in overlapping_pairs(rng, 100):
        mc = monte_carlo_iou(a, b, 100_000, rng)
        assert iou_3d(a, b) == pytest.approx(mc, abs=0.02)


def test_iou3d_rotation_invariance():
    rng = np.random.default_rng(5)
    for a, b in overlapping_pairs(rng, 20):
        base = iou_3d(a, b)
        dyaw = rng.uniform(-math.pi, math.pi)
        shift = rng.uniform(-10, 10, 3)
        c, s = math.cos(dyaw), math.sin(dyaw)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        moved = [
            lidar_box(rot @ x.center + shift, x.dims, x.yaw + dyaw) for x in (a, b)
        ]
        assert iou_3d(*moved) == pytest.approx(base, abs=1e-9)


def test_camera_frame_iou_matches_sensor_frame_for_aligned_traffic():
    # the exporter-style yaw map preserves pair geometry exactly when boxes
    # are parallel to the sensor x axis (the highway case)
    from kittisim.box_geometry import lidar_to_camera

    calib = default_calibration()
    rng = np.random.default_rng(9)
    for _ in range(20):
        yaw = rng.choice([0.0, math.pi])
        a = lidar_box(rng.uniform([5, -4, -1], [40, 4, 0]), (4.8, 1.9, 1.5), yaw)
        b = lidar_box(a.center + rng.uniform(-1.5, 1.5, 3), (4.6, 1.8, 1.4), yaw)
        ca, cb = lidar_to_camera(a, calib), lidar_to_camera(b, calib)
        assert iou_3d(ca, cb) == pytest.approx(iou_3d(a, b), abs=1e-9)


# --- image projection -------------------------------------------------------------


def cam_box(center, dims, yaw):
    return Box3D(np.array(center, float), dims, yaw, Frame.KITTI_CAMERA)


def test_project_centered_box_untruncated():
    calib = default_calibration()
    box = cam_box((0, 0.5, 20), (4.0, 1.8, 1.5), -math.pi / 2)
    bbox, trunc = project_to_image(box, calib.P2)
    assert trunc == 0.0
    left, top, right, bottom = bbox
    assert 0 < left < right < 1242
    assert 0 < top < bottom < 375


def test_project_behind_camera():
    calib = default_calibration()
    with pytest.raises(errors.BehindCamera):
        project_to_image(cam_box((0, 0, -20), (4, 2, 1.5), 0.0), calib.P2)


def test_project_fully_out_of_frustum_laterally():
    calib = default_calibration()
    box = cam_box((80.0, 0.5, 10.0), (1.0, 1.0, 1.0), 0.0)
    bbox, trunc = project_to_image(box, calib.P2)
    assert trunc == 1.0


def test_project_half_clipped():
    calib = default_calibration()
    # cube straddling the left image edge: center ray at u = 621 - 720*z... place
    # so the projected hull is split near 50/50 by the u=0 border
    z = 20.0
    # u = 720*x/z + 621 = 0  ->  x = -621*z/720
    x_edge = -621.0 * z / 720.0
    box = cam_box((x_edge, 0.5, z), (0.02, 2.0, 1.0), 0.0)
    bbox, trunc = project_to_image(box, calib.P2)
    assert trunc == pytest.approx(0.5, abs=0.05)


def test_shoelace_ccw_positive():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert shoelace_area(square) == pytest.approx(1.0)
    assert shoelace_area(square[::-1]) == pytest.approx(-1.0)
