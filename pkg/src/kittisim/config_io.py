"""TOML run-configuration loading.

A run config holds up to five sections: [scenario], [lidar], [detector],
[eval], and [weather].  Missing sections fall back to defaults; unknown
sections or keys are rejected so typos fail loudly.  The optional
``weather.presets`` list restricts the recording to those presets
(contiguous equal blocks, in order); omitting it cycles all 21.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import toml

from .detector import DetectorConfig
from .errors import InfeasibleConfig
from .evaluation.metrics import EvalConfig
from .sim.lidar import LidarConfig
from .sim.scenario import ScenarioConfig
from .sim.weather import preset


class ConfigError(ValueError):
    """Malformed or contradictory run configuration."""


@dataclass
class RunConfig:
    scenario: ScenarioConfig
    lidar: LidarConfig
    detector: DetectorConfig
    eval: EvalConfig
    weather_presets: list[str] | None  # None -> all presets

    def schedule(self) -> list[str]:
        from .sim.weather import build_schedule

        return build_schedule(self.scenario.total_recorded_frames, self.weather_presets)


_TUPLE_FIELDS = {
    "vertical_fov",
    "min_extent",
    "ap_iou_thresholds",
    "recall_iou_thresholds",
    "difficulties",
}


def _build(cls, section: dict, name: str):
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - valid
    if unknown:
        raise ConfigError(f"[{name}] has unknown keys: {sorted(unknown)}")
    kwargs = {
        k: tuple(v) if k in _TUPLE_FIELDS and isinstance(v, list) else v
        for k, v in section.items()
    }
    try:
        return cls(**kwargs)
    except (TypeError, ValueError, InfeasibleConfig) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def parse_run_config(data: dict) -> RunConfig:
    known = {"scenario", "lidar", "detector", "eval", "weather"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    weather = data.get("weather", {})
    weather_unknown = set(weather) - {"presets"}
    if weather_unknown:
        raise ConfigError(f"[weather] has unknown keys: {sorted(weather_unknown)}")
    presets = weather.get("presets")
    if presets is not None:
        if not presets:
            raise ConfigError("[weather] presets list must not be empty")
        for name in presets:
            try:
                preset(name)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
    return RunConfig(
        scenario=_build(ScenarioConfig, data.get("scenario", {}), "scenario"),
        lidar=_build(LidarConfig, data.get("lidar", {}), "lidar"),
        detector=_build(DetectorConfig, data.get("detector", {}), "detector"),
        eval=_build(EvalConfig, data.get("eval", {}), "eval"),
        weather_presets=list(presets) if presets is not None else None,
    )


def load_run_config(path) -> RunConfig:
    try:
        data = toml.load(Path(path))
    except (OSError, toml.TomlDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    return parse_run_config(data)


def default_run_config() -> RunConfig:
    with resources.files("kittisim.data").joinpath("default_scenario.toml").open() as fh:
        return parse_run_config(toml.load(fh))
