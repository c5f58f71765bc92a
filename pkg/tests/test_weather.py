import pytest

from kittisim.sim.weather import (
    SEVERITY_ORDER,
    all_presets,
    default_schedule,
    preset,
    severity_chain,
)

TABLE_NAMES = {
    "ClearNoon", "CloudyNoon", "WetNoon", "WetCloudyNoon",
    "MidRainyNoon", "HardRainNoon", "SoftRainNoon",
    "ClearNight", "CloudyNight", "WetNight", "WetCloudyNight",
    "MidRainyNight", "HardRainNight", "SoftRainNight",
    "ClearSunset", "CloudySunset", "WetSunset", "WetCloudySunset",
    "MidRainSunset", "HardRainSunset", "SoftRainSunset",
}


def test_exactly_21_presets_with_table_names():
    presets = all_presets()
    assert len(presets) == 21
    assert {p.name for p in presets} == TABLE_NAMES


def test_seven_presets_per_time_of_day():
    for column in ("Noon", "Night", "Sunset"):
        names = [p.name for p in all_presets() if p.name.endswith(column)]
        assert len(names) == 7


def test_severity_chain_ordering_of_noise_parameters():
    for column in ("Noon", "Night", "Sunset"):
        chain = [preset(n) for n in severity_chain(column)]
        assert len(chain) == len(SEVERITY_ORDER)
        for mild, harsh in zip(chain, chain[1:]):
            assert harsh.dropout_base > mild.dropout_base
            assert harsh.range_noise_sigma >= mild.range_noise_sigma
            assert harsh.attenuation_coeff > mild.attenuation_coeff
            assert harsh.intensity_scale < mild.intensity_scale


def test_preset_fields_in_range():
    for p in all_presets():
        assert 0.0 <= p.precipitation <= 1.0
        assert 0.0 <= p.wetness <= 1.0
        assert 0.0 <= p.cloudiness <= 1.0
        assert p.range_noise_sigma >= 0.0
        assert 0.0 <= p.dropout_base <= 1.0
        assert 0.0 < p.intensity_scale <= 1.0


def test_unknown_preset_rejected():
    with pytest.raises(ValueError):
        preset("SnowyNoon")


def test_default_schedule_covers_all_presets_contiguously():
    schedule = default_schedule(547)
    assert len(schedule) == 547
    assert len(set(schedule)) == 21
    # contiguous blocks: the schedule never revisits an earlier preset
    seen = []
    for name in schedule:
        if not seen or seen[-1] != name:
            assert name not in seen
            seen.append(name)
    block = -(-547 // 21)
    assert schedule[:block] == [schedule[0]] * block


def test_default_schedule_empty():
    assert default_schedule(0) == []
