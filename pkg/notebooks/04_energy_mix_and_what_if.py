"""
Energy mixes and what-if settings
=================================

Emissions use one grid factor (lbs CO2e per kWh). The energy-source
breakdowns are reference data for comparing regions and cloud providers;
they are not turned into conversion factors.
"""

from trainfootprint import FootprintConfig, PowerProfile, estimate_footprint, load_energy_mixes
from trainfootprint import PriceSheet, Rate, cloud_cost_range

for m in load_energy_mixes().values():
    print(
        f"{m.consumer:14s} renewable {m.renewable_pct:4.0f}%  gas {m.gas_pct:3.0f}%  "
        f"coal {m.coal_pct:3.0f}%  nuclear {m.nuclear_pct:3.0f}%  other {m.other_pct:2.0f}%"
    )

# %%
# A more efficient facility and a cleaner grid.

profile = PowerProfile(p_cpu=120, p_dram=20, p_gpu=250, n_gpu=8)
for cfg in (FootprintConfig(), FootprintConfig(pue=1.1), FootprintConfig(pue=1.1, co2e_lbs_per_kwh=0.4)):
    e = estimate_footprint(profile, hours=72, config=cfg)
    print(f"pue={cfg.pue:<5} factor={cfg.co2e_lbs_per_kwh:<6} {e.kwh_pue:8.1f} kWh  {e.co2e_lbs:8.1f} lbs")

# %%
# Custom prices: a hypothetical accelerator.

sheet = PriceSheet({"A100": Rate(1.10, 3.67)})
r = cloud_cost_range("A100", 8, 72, sheet)
print(f"A100x8 for 72 h: ${r.lower_usd:,.0f}-${r.upper_usd:,.0f}")
