"""The 21 named weather presets and their sensor-degradation parameters.

Seven severity levels cross three times of day (Noon, Night, Sunset).  The
naming follows the simulator convention the presets come from, including its
quirk that the mid-rain sunset preset drops the "y" (``MidRainSunset`` next
to ``MidRainyNoon``/``MidRainyNight``).

The sensor-noise numbers are artifact parameters, not measured values; tests
assert only their ordering (harsher weather never yields more points or
brighter returns).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class WeatherPreset:
    name: str
    precipitation: float  # fraction [0, 1]
    wetness: float  # fraction [0, 1]
    cloudiness: float  # fraction [0, 1]
    sun_altitude: float  # degrees
    range_noise_sigma: float  # meters, 1-sigma along the ray
    dropout_base: float  # base probability of losing a return
    attenuation_coeff: float  # 1/meter
    intensity_scale: float  # multiplies every return's intensity

    def __post_init__(self):
        for field_name in ("precipitation", "wetness", "cloudiness", "dropout_base", "intensity_scale"):
            v = getattr(self, field_name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{self.name}: {field_name}={v} outside [0, 1]")
        if self.range_noise_sigma < 0.0 or self.attenuation_coeff < 0.0:
            raise ValueError(f"{self.name}: noise parameters must be non-negative")


# severity rows in mild-to-harsh order:
# (sigma, dropout, attenuation, intensity factor, precipitation, wetness, cloudiness)
_SEVERITY = {
    "Clear": (0.010, 0.00, 0.0000, 1.00, 0.0, 0.0, 0.1),
    "Cloudy": (0.010, 0.02, 0.0005, 0.95, 0.0, 0.0, 0.8),
    "Wet": (0.015, 0.05, 0.0010, 0.90, 0.0, 0.5, 0.2),
    "WetCloudy": (0.020, 0.08, 0.0020, 0.85, 0.0, 0.5, 0.9),
    "SoftRain": (0.020, 0.10, 0.0030, 0.80, 0.3, 0.6, 0.9),
    "MidRain": (0.030, 0.20, 0.0060, 0.70, 0.6, 0.8, 1.0),
    "HardRain": (0.050, 0.35, 0.0120, 0.55, 0.9, 1.0, 1.0),
}

SEVERITY_ORDER = ("Clear", "Cloudy", "Wet", "WetCloudy", "SoftRain", "MidRain", "HardRain")

# (column name, sun altitude, intensity factor)
_TIME_COLUMNS = (("Noon", 75.0, 1.00), ("Night", -80.0, 0.80), ("Sunset", 0.5, 0.90))

# table row order within each time-of-day column
_TABLE_ROWS = ("Clear", "Cloudy", "Wet", "WetCloudy", "MidRain", "HardRain", "SoftRain")


def _preset_name(severity: str, column: str) -> str:
    if severity == "MidRain" and column in ("Noon", "Night"):
        return f"MidRainy{column}"
    return f"{severity}{column}"


def _build_registry() -> dict[str, WeatherPreset]:
    registry: dict[str, WeatherPreset] = {}
    for column, sun_alt, time_factor in _TIME_COLUMNS:
        for severity in _TABLE_ROWS:
            sigma, dropout, atten, factor, precip, wet, cloud = _SEVERITY[severity]
            name = _preset_name(severity, column)
            registry[name] = WeatherPreset(
                name=name,
                precipitation=precip,
                wetness=wet,
                cloudiness=cloud,
                sun_altitude=sun_alt,
                range_noise_sigma=sigma,
                dropout_base=dropout,
                attenuation_coeff=atten,
                intensity_scale=factor * time_factor,
            )
    return registry


_REGISTRY = _build_registry()


def preset(name: str) -> WeatherPreset:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown weather preset {name!r}; valid: {', '.join(_REGISTRY)}") from None


def all_presets() -> tuple[WeatherPreset, ...]:
    return tuple(_REGISTRY.values())


def severity_chain(column: str) -> tuple[str, ...]:
    """Preset names of one time-of-day column, mild to harsh."""
    if column not in {c for c, _, _ in _TIME_COLUMNS}:
        raise ValueError(f"unknown time-of-day column {column!r}")
    return tuple(_preset_name(sev, column) for sev in SEVERITY_ORDER)


def build_schedule(total_frames: int, names: list[str] | None = None) -> list[str]:
    """Partition frames into contiguous equal blocks over the given presets
    (all 21, in registry order, when names is None)."""
    if total_frames < 0:
        raise ValueError("total_frames must be non-negative")
    if names is None:
        names = list(_REGISTRY)
    for name in names:
        preset(name)
    if total_frames == 0:
        return []
    block = -(-total_frames // len(names))
    return [names[min(i // block, len(names) - 1)] for i in range(total_frames)]


def default_schedule(total_frames: int) -> list[str]:
    """Contiguous preset blocks of ceil(total/21) frames, registry order."""
    return build_schedule(total_frames)
