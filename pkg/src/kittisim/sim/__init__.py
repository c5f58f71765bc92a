from .weather import WeatherPreset, all_presets, default_schedule, preset, severity_chain
from .scenario import ScenarioConfig, SceneState, VehicleState, build_timeline
from .lidar import LidarConfig, cast_rays, simulate_lidar, visibility_filter
from .dataset import generate_dataset

__all__ = [
    "LidarConfig",
    "ScenarioConfig",
    "SceneState",
    "VehicleState",
    "WeatherPreset",
    "all_presets",
    "build_timeline",
    "cast_rays",
    "default_schedule",
    "generate_dataset",
    "preset",
    "severity_chain",
    "simulate_lidar",
    "visibility_filter",
]
