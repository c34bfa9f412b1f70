import json

import pytest

from trainfootprint.cost import (
    CostRange,
    PriceSheet,
    Rate,
    UnknownHardware,
    cloud_cost_range,
    electricity_cost,
    load_price_sheet,
)
from trainfootprint.report import display_int


def shown(r: CostRange) -> tuple[int, int]:
    return display_int(r.lower_usd), display_int(r.upper_usd)


@pytest.mark.parametrize(
    "hw,n,hours,expect",
    [
        ("P100", 8, 12, (41, 140)),
        ("V100", 64, 79.2, (3751, 12_571)),
        ("P100", 8, 274_120, (942_973, 3_201_722)),
        ("TPUv3", 32, 168, (12_902, 43_008)),
        ("TPUv2", 16, 96, (2074, 6912)),
    ],
)
def test_cloud_cost_published(hw, n, hours, expect):
    assert shown(cloud_cost_range(hw, n, hours)) == expect


def test_cloud_cost_nas_unrounded():
    assert cloud_cost_range("P100", 8, 274_120).lower_usd == pytest.approx(942_972.8)


def test_cloud_cost_zero_hours():
    assert cloud_cost_range("V100", 5, 0) == CostRange(0, 0)


def test_cloud_cost_errors():
    with pytest.raises(UnknownHardware, match="P100"):
        cloud_cost_range("K80", 1, 1)
    with pytest.raises(ValueError):
        cloud_cost_range("P100", 0, 1)
    with pytest.raises(ValueError):
        cloud_cost_range("P100", 1, -1)


def test_electricity_cost():
    kwh = 120 * 217 * 1.58 / 1000
    assert kwh == pytest.approx(41.1432)
    assert display_int(electricity_cost(kwh)) == 5
    assert electricity_cost(0) == 0
    with pytest.raises(ValueError):
        electricity_cost(-1)


def test_electricity_cost_case_study_total():
    kwh = 239_942 * 217 * 1.58 / 1000
    usd = electricity_cost(kwh)
    assert display_int(usd) == 9872
    assert abs(usd - 9870) / 9870 < 0.005


def test_rate_invariant():
    with pytest.raises(ValueError):
        Rate(2.0, 1.0)
    with pytest.raises(ValueError):
        Rate(0, 1.0)
    with pytest.raises(ValueError):
        CostRange(5, 4)


def test_price_sheet_file(tmp_path):
    f = tmp_path / "prices.json"
    f.write_text(
        json.dumps(
            {"P100.preemptible": 0.5, "K80.preemptible": 0.1, "K80.on_demand": 0.45, "electricity_per_kwh": 0.2}
        )
    )
    sheet = load_price_sheet(f)
    assert sheet.rate("P100") == Rate(0.5, 1.46)
    assert sheet.rate("K80") == Rate(0.1, 0.45)
    assert sheet.electricity_usd_per_kwh == 0.2
    assert sheet.source == str(f)
    assert load_price_sheet(f, electricity_per_kwh=0.3).electricity_usd_per_kwh == 0.3


@pytest.mark.parametrize(
    "data",
    [{"P100.cheap": 1.0}, {"K80.preemptible": 0.1}, {"P100.preemptible": 9.0}],
)
def test_price_sheet_file_errors(tmp_path, data):
    f = tmp_path / "prices.json"
    f.write_text(json.dumps(data))
    with pytest.raises(ValueError):
        load_price_sheet(f)


def test_default_sheet_immutable():
    sheet = PriceSheet()
    with pytest.raises(TypeError):
        sheet.rates["P100"] = Rate(1, 2)
