"""Dataset emission: turn the simulated timeline into a KITTI-format tree.

Per recorded frame this writes the velodyne binary, the label file (one
"Car" line per visible vehicle, camera frame), a fixed calibration file and
a schematic top-down PNG, then the split files and a ``manifest.json``
sidecar mapping frame id -> (weather preset, simulation step, scene-state
hash).  Identical config and seed reproduce the tree byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .. import __version__
from ..box_geometry import (
    Box3D,
    bev_footprint,
    box_from_label,
    camera_to_lidar,
    sensor_box_to_label,
)
from ..errors import InfeasibleConfig
from ..kitti_io import (
    CalibrationSet,
    DatasetIndex,
    default_calibration,
    frame_name,
    parse_label_line,
    serialize_label,
    validate_dataset,
    write_calib,
    write_split_files,
)
from ..pngio import encode_png
from .lidar import (
    LidarConfig,
    apply_weather,
    cast_rays,
    occlusion_grade,
    points_in_box,
    vehicle_sensor_box,
)
from .scenario import SceneState, ScenarioConfig, build_timeline
from .weather import default_schedule, preset

IMAGE_SIZE = (1242, 375)
MIN_LABEL_POINTS = 8  # returns a box must contain to be labeled
_MAX_TRUNCATION = 0.99
_BEV_SCALE = 0.1  # meters per pixel in the schematic render


def config_digest(config: ScenarioConfig, lidar: LidarConfig, schedule: list[str]) -> str:
    payload = {
        "scenario": asdict(config),
        "lidar": asdict(lidar),
        "schedule": schedule,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


# --- schematic image ---------------------------------------------------------


def _draw_segment(img: np.ndarray, p0, p1, color) -> None:
    h, w = img.shape[:2]
    n = int(max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1]))) + 2
    cols = np.rint(np.linspace(p0[0], p1[0], n)).astype(int)
    rows = np.rint(np.linspace(p0[1], p1[1], n)).astype(int)
    ok = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
    img[rows[ok], cols[ok]] = color


def _to_pixels(x: float, y: float) -> tuple[float, float]:
    col = x / _BEV_SCALE
    row = IMAGE_SIZE[1] / 2.0 - y / _BEV_SCALE
    return col, row


def render_bev(state: SceneState, config: ScenarioConfig, boxes: list[Box3D]) -> np.ndarray:
    """Top-down wireframe: lane boundaries, ego marker, vehicle footprints."""
    w, h = IMAGE_SIZE
    img = np.full((h, w, 3), (15, 15, 18), dtype=np.uint8)
    for i in range(config.lane_count + 1):
        boundary_world_y = (i + 0.5 - config.ego_lane) * config.lane_width
        _, row = _to_pixels(0.0, -boundary_world_y)
        if 0 <= int(row) < h:
            img[int(row), :, :] = (70, 70, 75)
    ego_fp = np.array(
        [
            [dx * state.ego.box_dims[0] / 2.0, dy * state.ego.box_dims[1] / 2.0]
            for dx, dy in ((1, -1), (1, 1), (-1, 1), (-1, -1))
        ]
    )
    for fp, color in [(ego_fp, (120, 180, 120))] + [
        (bev_footprint(b), (235, 235, 235)) for b in boxes
    ]:
        for k in range(4):
            _draw_segment(
                img,
                _to_pixels(*fp[k]),
                _to_pixels(*fp[(k + 1) % 4]),
                color,
            )
    return img


# --- labels -------------------------------------------------------------------


def _quantized_label(
    sensor_box: Box3D,
    occlusion: int,
    calib: CalibrationSet,
) -> tuple[str, Box3D] | None:
    """Serialize a vehicle box as a KITTI line; returns (line, quantized
    sensor-frame box) or None when the box cannot be labeled."""
    rec = sensor_box_to_label(sensor_box, calib, occlusion, IMAGE_SIZE, _MAX_TRUNCATION)
    if rec is None:
        return None
    line = serialize_label(rec)
    quantized = parse_label_line(line, expect_score=rec.score is not None)
    return line, camera_to_lidar(box_from_label(quantized), calib)


def _frame_payload(
    state: SceneState,
    config: ScenarioConfig,
    lidar: LidarConfig,
    weather_name: str,
    frame_index: int,
    calib: CalibrationSet,
) -> dict:
    """Everything one frame writes, as bytes, plus its manifest entry."""
    hits = cast_rays(state, lidar, config.lane_width)
    cloud = apply_weather(hits, lidar, preset(weather_name), [config.seed, frame_index])

    sensor_boxes = [
        vehicle_sensor_box(v, state.ego, config.lane_width, config.ego_lane, lidar.mount_height)
        for v in state.others
    ]
    lines = []
    for i, box in enumerate(sensor_boxes):
        blockers = sensor_boxes[:i] + sensor_boxes[i + 1 :]
        made = _quantized_label(box, occlusion_grade(box, blockers), calib)
        if made is None:
            continue
        line, quantized_box = made
        if points_in_box(cloud.points, quantized_box) >= MIN_LABEL_POINTS:
            lines.append(line)

    return {
        "velodyne": cloud.points.tobytes(),
        "label": "".join(line + "\n" for line in lines),
        "image": encode_png(render_bev(state, config, sensor_boxes)),
        "manifest": {
            "weather": weather_name,
            "sim_step": state.step,
            "state_hash": state.state_hash(),
        },
    }


# --- generation ----------------------------------------------------------------


def generate_dataset(
    config: ScenarioConfig,
    lidar: LidarConfig,
    weather_schedule: list[str] | None,
    out_root,
    calib: CalibrationSet | None = None,
    jobs: int = 1,
) -> DatasetIndex:
    """Simulate, record every ``record_every``-th step, and emit the tree."""
    out_root = Path(out_root)
    if weather_schedule is None:
        weather_schedule = default_schedule(config.total_recorded_frames)
    if len(weather_schedule) != config.total_recorded_frames:
        raise InfeasibleConfig(
            f"weather schedule covers {len(weather_schedule)} frames, "
            f"config records {config.total_recorded_frames}"
        )
    for name in set(weather_schedule):
        preset(name)  # fail fast on unknown names
    calib = calib or default_calibration()

    timeline = build_timeline(config)
    for sub in ("velodyne", "label_2", "calib", "image_2"):
        (out_root / sub).mkdir(parents=True, exist_ok=True)

    calib_blob_path = out_root / "calib" / "template.tmp"
    write_calib(calib, calib_blob_path)
    calib_bytes = calib_blob_path.read_bytes()
    calib_blob_path.unlink()

    def build(frame_index: int) -> dict:
        state = timeline[frame_index * config.record_every]
        return _frame_payload(
            state, config, lidar, weather_schedule[frame_index], frame_index, calib
        )

    frames = range(config.total_recorded_frames)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            payloads = list(pool.map(build, frames))
    else:
        payloads = [build(i) for i in frames]

    manifest_frames = {}
    for i, payload in enumerate(payloads):
        fid = frame_name(i)
        _atomic_write(out_root / "velodyne" / f"{fid}.bin", payload["velodyne"])
        _atomic_write(out_root / "label_2" / f"{fid}.txt", payload["label"].encode())
        _atomic_write(out_root / "calib" / f"{fid}.txt", calib_bytes)
        _atomic_write(out_root / "image_2" / f"{fid}.png", payload["image"])
        manifest_frames[fid] = payload["manifest"]

    ids = [frame_name(i) for i in frames]
    write_split_files(out_root, ids[: config.test_frames], ids[config.test_frames :])

    manifest = {
        "tool_version": __version__,
        "seed": config.seed,
        "config_digest": config_digest(config, lidar, weather_schedule),
        "frame_count": config.total_recorded_frames,
        "frames": manifest_frames,
    }
    _atomic_write(
        out_root / "manifest.json",
        json.dumps(manifest, sort_keys=True, indent=2).encode() + b"\n",
    )
    return validate_dataset(out_root)
