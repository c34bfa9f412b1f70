"""
Footprint and cloud cost of published training runs
====================================================

Each bundled preset is a published training run: hardware, device count,
combined power draw and wall-clock hours. Energy is PUE-scaled kWh and
emissions use the U.S. grid factor of 0.954 lbs CO2e per kWh.
"""

import sys

from trainfootprint import PowerProfile, estimate_footprint, load_presets
from trainfootprint.report import ReportDocument, provenance_for, render, row_from_preset
from trainfootprint import FootprintConfig, PriceSheet

presets = load_presets()
for p in presets.values():
    print(f"{p.name:18s} {p.hardware}x{p.unit_count:<3d} {p.hours:>9g} h  watts={p.watts}")

# %%
# One run by hand. ``PowerProfile.from_total`` treats a published wattage as
# an opaque combined draw.

big = presets["transformer_big"]
est = estimate_footprint(PowerProfile.from_total(big.watts), big.hours)
print(f"\n{big.label}: {est.kwh_pue:.2f} kWh*PUE, {est.co2e_lbs:.2f} lbs CO2e")

# %%
# The whole table. Rounding to whole numbers happens only when rendering.

config, sheet = FootprintConfig(), PriceSheet()
doc = ReportDocument(
    "Estimated cost of training",
    tuple(row_from_preset(p, config, sheet) for p in presets.values()),
    provenance_for(config, sheet),
)
sys.stdout.write("\n" + render(doc, "text").decode())

# %%
# Note on BERT: the table shows 79 hours, but only the underlying
# 79.2 hours (3.3 days) reproduces 1,507 kWh.

bert = presets["bert_base_gpu"]
for hours in (79, 79.2):
    e = estimate_footprint(PowerProfile.from_total(bert.watts), hours)
    print(f"BERT at {hours} h -> {e.kwh_pue:.1f} kWh*PUE")
