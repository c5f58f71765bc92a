"""Synthetic highway LiDAR dataset generation (KITTI format, 21 weather
presets) and 3D object detection evaluation (rotated-box IoU, AP11/AP40,
recall at fixed IoU thresholds)."""

__version__ = "0.1.0"

from .box_geometry import Box3D, Frame, bev_iou, carla_to_kitti, corners_3d, iou_3d
from .detector import DetectorConfig, detect_frame
from .evaluation.metrics import EvalConfig, EvalReport, evaluate
from .sim.dataset import generate_dataset
from .sim.lidar import LidarConfig, simulate_lidar
from .sim.scenario import ScenarioConfig, build_timeline
from .sim.weather import WeatherPreset, all_presets
from .kitti_io import (
    CalibrationSet,
    DatasetIndex,
    LabelRecord,
    PointCloud,
    default_calibration,
    parse_label_line,
    read_calib,
    read_label_file,
    read_velodyne,
    serialize_label,
    validate_dataset,
    write_calib,
    write_label_file,
    write_velodyne,
)

__all__ = [
    "Box3D",
    "CalibrationSet",
    "DatasetIndex",
    "DetectorConfig",
    "EvalConfig",
    "EvalReport",
    "Frame",
    "LabelRecord",
    "LidarConfig",
    "PointCloud",
    "ScenarioConfig",
    "WeatherPreset",
    "all_presets",
    "bev_iou",
    "build_timeline",
    "carla_to_kitti",
    "corners_3d",
    "default_calibration",
    "detect_frame",
    "evaluate",
    "generate_dataset",
    "iou_3d",
    "parse_label_line",
    "read_calib",
    "read_label_file",
    "read_velodyne",
    "serialize_label",
    "simulate_lidar",
    "validate_dataset",
    "write_calib",
    "write_label_file",
    "write_velodyne",
    "__version__",
]
