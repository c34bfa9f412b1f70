import json

import pytest

from trainfootprint.footprint import (
    EnergyMix,
    FootprintConfig,
    PowerProfile,
    UnknownConsumer,
    UnknownPreset,
    co2e_lbs,
    combined_draw,
    energy_kwh,
    energy_mix,
    estimate_footprint,
    get_preset,
    load_config,
    load_energy_mixes,
    load_presets,
)
from trainfootprint.report import display_int


def test_combined_draw_gpu_only():
    assert combined_draw(PowerProfile(0, 0, 100, 8)) == 800.0


def test_combined_draw_ignores_gpu_when_none():
    assert combined_draw(PowerProfile(50, 10, 123.0, 0)) == 60.0


def test_combined_draw_published_total():
    assert combined_draw(PowerProfile.from_total(1515.43)) == 1515.43


@pytest.mark.parametrize("kw", [dict(p_cpu=-1), dict(p_gpu=-0.5), dict(n_gpu=-1)])
def test_profile_rejects_negative(kw):
    with pytest.raises(ValueError):
        PowerProfile(**kw)


@pytest.mark.parametrize(
    "watts,hours,exact,shown",
    [
        (1515.43, 84, 201.1278696, 201),
        (12041.51, 79.2, 1506.82639536, 1507),
        (1515.43, 274_120, 656347.281128, 656_347),
    ],
)
def test_energy_kwh_published_rows(watts, hours, exact, shown):
    kwh = energy_kwh(watts, hours)
    assert kwh == pytest.approx(exact, rel=1e-12)
    assert display_int(kwh) == shown


def test_bert_with_displayed_79_hours_does_not_reproduce():
    assert display_int(energy_kwh(12041.51, 79)) != 1507


def test_energy_zero_hours():
    assert energy_kwh(999.0, 0) == 0.0


def test_energy_rejects_negative():
    with pytest.raises(ValueError):
        energy_kwh(-1, 1)
    with pytest.raises(ValueError):
        energy_kwh(1, -1)


def test_co2e_published():
    assert display_int(co2e_lbs(656_347)) == 626_155
    assert co2e_lbs(27) == pytest.approx(25.758)
    assert display_int(co2e_lbs(27)) == 26
    assert co2e_lbs(0) == 0
    with pytest.raises(ValueError):
        co2e_lbs(-3)


def test_custom_config():
    cfg = FootprintConfig(pue=1.1, co2e_lbs_per_kwh=0.5)
    assert energy_kwh(1000, 10, cfg) == pytest.approx(11.0)
    assert co2e_lbs(10, cfg) == 5.0


def test_config_rejects_pue_below_one():
    with pytest.raises(ValueError):
        FootprintConfig(pue=0.9)


@pytest.mark.parametrize(
    "watts,hours,kwh,lbs",
    [(1515.43, 84, 201, 192), (517.66, 336, 275, 262), (1415.78, 12, 27, 26)],
)
def test_estimate_footprint_rows(watts, hours, kwh, lbs):
    est = estimate_footprint(PowerProfile.from_total(watts), hours)
    assert (display_int(est.kwh_pue), display_int(est.co2e_lbs)) == (kwh, lbs)
    assert est.kwh_pue == pytest.approx(1.58 * hours * watts / 1000, rel=1e-15)
    assert est.co2e_lbs == pytest.approx(0.954 * est.kwh_pue, rel=1e-15)
    assert not est.partial


def test_estimate_footprint_zero():
    est = estimate_footprint(PowerProfile(10, 2, 50, 2), 0)
    assert (est.kwh_pue, est.co2e_lbs) == (0, 0)
    assert est.combined_watts == 112


def test_energy_mix_rows():
    assert energy_mix("Google") == EnergyMix("Google", 56, 14, 15, 10)
    assert energy_mix("China") == EnergyMix("China", 22, 3, 65, 4)


def test_energy_mix_unknown_lists_names():
    with pytest.raises(UnknownConsumer, match="Amazon-AWS"):
        energy_mix("Mars")


def test_energy_mix_sums():
    mixes = load_energy_mixes()
    assert list(mixes) == ["China", "Germany", "United States", "Amazon-AWS", "Google", "Microsoft"]
    for m in mixes.values():
        total = m.renewable_pct + m.gas_pct + m.coal_pct + m.nuclear_pct
        assert total <= 100
        # The published China row leaves 6% unlisted; every other row leaves at most 5%.
        assert total >= (94 if m.consumer == "China" else 95)


def test_energy_mix_validation():
    with pytest.raises(ValueError):
        EnergyMix("x", 60, 30, 20, 0)


def test_mix_file_override(tmp_path):
    f = tmp_path / "mix.csv"
    f.write_text("consumer,renewable_pct,gas_pct,coal_pct,nuclear_pct\nMars,100,0,0,0\n")
    assert energy_mix("Mars", f).renewable_pct == 100


def test_presets_bundle():
    presets = load_presets()
    big = presets["transformer_big"]
    assert (big.hardware, big.unit_count, big.watts, big.hours) == ("P100", 8, 1515.43, 84)
    assert presets["bert_base_gpu"].hours == 79.2
    assert presets["gpt2"].watts is None
    with pytest.raises(UnknownPreset, match="transformer_base"):
        get_preset("nope")


def test_load_config_precedence(tmp_path):
    f = tmp_path / "cfg.json"
    f.write_text(json.dumps({"pue": 1.2, "co2e_lbs_per_kwh": 0.7}))
    assert load_config() == FootprintConfig()
    assert load_config(f) == FootprintConfig(1.2, 0.7)
    assert load_config(f, pue=1.4, co2e_lbs_per_kwh=None) == FootprintConfig(1.4, 0.7)
