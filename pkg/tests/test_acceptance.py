"""Exit criteria. Each check prints one PASS/FAIL line.

Run standalone with ``python tests/test_acceptance.py`` or through pytest
(``pytest tests/test_acceptance.py -s`` to see the lines).
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from trainfootprint.cost import cloud_cost_range
from trainfootprint.footprint import PowerProfile, co2e_lbs, energy_kwh, estimate_footprint, load_presets
from trainfootprint.ledger import load_case_study_jobs, scenario_costs, summarize
from trainfootprint.report import display_int

sys.path.insert(0, str(Path(__file__).parent))
import test_properties  # noqa: E402

RUNTIME_LIMIT_S = 1.0


def within(value: float, target: float, rel: float) -> bool:
    return abs(value - target) <= rel * abs(target)


def _timed(fn):
    t = time.perf_counter()
    failures = fn()
    return failures, time.perf_counter() - t


def criterion_1_model_energy():
    expected = {
        "transformer_base": (27, 26),
        "transformer_big": (201, 192),
        "elmo": (275, 262),
        "bert_base_gpu": (1507, 1438),
    }
    presets = load_presets()
    failures = []
    if presets["bert_base_gpu"].hours != 79.2:
        failures.append(f"bert_base_gpu hours {presets['bert_base_gpu'].hours} != 79.2")
    for name, (kwh, lbs) in expected.items():
        p = presets[name]
        est = estimate_footprint(PowerProfile.from_total(p.watts), p.hours)
        got = (display_int(est.kwh_pue), display_int(est.co2e_lbs))
        if got != (kwh, lbs):
            failures.append(f"{name}: got {got}, want {(kwh, lbs)}")
    return failures


def criterion_2_model_cost():
    presets = load_presets()
    gpu = {
        "transformer_base": (41, 140),
        "transformer_big": (289, 981),
        "elmo": (433, 1472),
        "bert_base_gpu": (3751, 12_571),
        "nas_gpu": (942_973, 3_201_722),
    }
    tpu = {
        "bert_base_tpu": (2074, 6912),
        "nas_tpu": (44_055, 146_848),
        "gpt2": (12_902, 43_008),
    }
    failures = []
    for name, (lo, hi) in gpu.items():
        p = presets[name]
        r = cloud_cost_range(p.hardware, p.unit_count, p.hours)
        if abs(display_int(r.lower_usd) - lo) > 1 or abs(display_int(r.upper_usd) - hi) > 1:
            failures.append(f"{name}: {r}")
    for name, (lo, hi) in tpu.items():
        p = presets[name]
        r = cloud_cost_range(p.hardware, p.unit_count, p.hours)
        if not (within(r.lower_usd, lo, 0.002) and within(r.upper_usd, hi, 0.002)):
            failures.append(f"{name}: {r}")
    return failures


def criterion_3_case_study():
    rows = [
        (120, (52, 175), 5, None),
        (2880, (1238, 4205), 118, None),
        (239_942, (103_000, 350_000), 9870, 0.005),
    ]
    failures = []
    for hours, (lo, hi), elec, rel in rows:
        s = scenario_costs(hours, 217.0)
        if rel is None:
            ok = (
                (display_int(s.cloud.lower_usd), display_int(s.cloud.upper_usd)) == (lo, hi)
                and display_int(s.electricity_usd) == elec
            )
        else:
            ok = (
                within(s.cloud.lower_usd, lo, rel)
                and within(s.cloud.upper_usd, hi, rel)
                and within(s.electricity_usd, elec, rel)
            )
        if not ok:
            failures.append(f"{hours} h: {s}")
    return failures


def criterion_4_pipeline_composition():
    failures = []
    pipeline = co2e_lbs(energy_kwh(217.0, 239_942))
    if not within(pipeline, 78_468, 0.005):
        failures.append(f"pipeline w/ tuning: {pipeline}")
    presets = load_presets()
    for name, lbs in (("nas_gpu", 626_155), ("transformer_big", 192)):
        p = presets[name]
        got = display_int(co2e_lbs(energy_kwh(p.watts, p.hours)))
        if got != lbs:
            failures.append(f"{name}: {got} != {lbs}")
    return failures


def criterion_5_case_study():
    s = summarize(load_case_study_jobs())
    failures = []
    if s.job_count != 4789:
        failures.append(f"job_count {s.job_count}")
    if not within(s.total_device_hours, 239_942, 0.001):
        failures.append(f"device-hours {s.total_device_hours}")
    if round(s.span_days) != 172:
        failures.append(f"span {s.span_days} days")
    if abs(s.avg_concurrent_devices - 58.1) > 0.2:
        failures.append(f"concurrency {s.avg_concurrent_devices}")
    return failures


PROPERTY_CHECKS = [
    test_properties.test_energy_additive_in_hours_exact,
    test_properties.test_energy_additive_in_hours_float,
    test_properties.test_energy_linear_monotone_in_watts,
    test_properties.test_co2e_linear_exact,
    test_properties.test_cloud_cost_linear_exact,
    test_properties.test_electricity_linear_exact,
    test_properties.test_scenario_linear_in_hours,
    test_properties.test_energy_delta_modular,
    test_properties.test_average_power_bounds,
    test_properties.test_average_power_constant_exact,
    test_properties.test_trace_roundtrip,
    test_properties.test_log_roundtrip,
    test_properties.test_summarize_shard_merge,
    test_properties.test_summarize_merge_associative,
    test_properties.test_price_sheet_lower_le_upper,
]


def criterion_6_properties():
    failures = []
    for check in PROPERTY_CHECKS:
        try:
            check()
        except Exception as exc:  # report every failing property, not just the first
            failures.append(f"{check.__name__}: {type(exc).__name__}: {exc}")
    return failures


def criterion_7_track_smoke():
    env = dict(os.environ, TRAINFOOTPRINT_MOCK_PROVIDERS="1")
    cmd = [
        sys.executable, "-m", "trainfootprint", "track", "--format", "jsonl", "--",
        sys.executable, "-c", "import time; time.sleep(5)",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True, env=env, timeout=60)
    if proc.returncode != 0:
        return [f"exit {proc.returncode}: {proc.stderr}"]
    objs = [json.loads(line) for line in proc.stdout.splitlines()]
    rows = [o for o in objs if o["kind"] == "row"]
    failures = []
    if len(rows) != 1:
        return [f"expected one report row, got {proc.stdout!r}"]
    row = rows[0]
    for key in ("watts", "hours", "kwh_pue", "co2e_lbs", "electricity_usd", "display"):
        if row.get(key) is None:
            failures.append(f"row missing {key}")
    if not (row.get("kwh_pue") or 0) > 0:
        failures.append(f"kWh not positive: {row.get('kwh_pue')}")
    prov = objs[-1]
    if prov.get("kind") != "provenance":
        failures.append("no provenance block")
    for key in ("pue", "co2e_lbs_per_kwh", "price_sheet", "electricity_usd_per_kwh", "providers"):
        if key not in prov:
            failures.append(f"provenance missing {key}")
    return failures


CRITERIA = [
    ("1 published-model energy/emissions golden", criterion_1_model_energy, True),
    ("2 published-model cloud cost golden", criterion_2_model_cost, True),
    ("3 case-study scenario golden", criterion_3_case_study, True),
    ("4 pipeline composition", criterion_4_pipeline_composition, True),
    ("5 Case-study summary", criterion_5_case_study, False),
    ("6 Property suite", criterion_6_properties, False),
    ("7 End-to-end track smoke", criterion_7_track_smoke, False),
]


def run_criterion(name, fn, timed):
    failures, elapsed = _timed(fn)
    if timed and elapsed >= RUNTIME_LIMIT_S:
        failures = failures + [f"runtime {elapsed:.3f}s >= {RUNTIME_LIMIT_S}s"]
    status = "PASS" if not failures else "FAIL"
    line = f"{status}  criterion {name}  ({elapsed:.2f}s)"
    if failures:
        line += "\n    " + "\n    ".join(failures)
    return not failures, line


@pytest.mark.parametrize("name,fn,timed", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, fn, timed, capsys):
    ok, line = run_criterion(name, fn, timed)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
