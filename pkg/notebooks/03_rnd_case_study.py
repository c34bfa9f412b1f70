"""
Cost of developing a model: a six-month job log
===============================================

The bundled log is a seeded synthetic stand-in for a real project's
training history: 4789 jobs from 123 grid searches over 172 days.
"""

import numpy as np

from trainfootprint import load_case_study_jobs, scenario_costs, summarize
from trainfootprint.ledger import typical_model_hours

jobs = load_case_study_jobs()
s = summarize(jobs)
print(f"jobs                {s.job_count}")
print(f"span                {s.span_days:.0f} days")
print(f"device-hours        {s.total_device_hours:,.0f} ({s.total_device_hours / 24:,.0f} days)")
print(f"job length          {s.min_job_hours:.2f} / {s.avg_job_hours:.1f} / {s.max_job_hours:.0f} h (min/avg/max)")
print(f"avg concurrent GPUs {s.avg_concurrent_devices:.1f}")

# %%
# Job length distribution: crashed and early-stopped jobs below a fixed
# five-day budget that full runs hit.

hours = np.array([j.hours for j in jobs])
counts, edges = np.histogram(hours, bins=[0, 1, 6, 24, 48, 96, 119.99, 120.01, 216.01])
for lo, hi, n in zip(edges[:-1], edges[1:], counts):
    print(f"  {lo:7.2f}-{hi:7.2f} h  {n:5d}")
print("typical model:", typical_model_hours(jobs), "h")

# %%
# Scenario costs at 217 W per GPU, priced as P100 device-hours.

model = typical_model_hours(jobs)
for label, h in (("1 model", model), ("24 models", 24 * model), ("all", s.total_device_hours)):
    c = scenario_costs(h)
    print(
        f"{label:10s} {h:>9,.0f} h  cloud ${c.cloud.lower_usd:,.0f}-${c.cloud.upper_usd:,.0f}"
        f"  electricity ${c.electricity_usd:,.0f}  CO2e {c.co2e_lbs:,.0f} lbs"
    )
