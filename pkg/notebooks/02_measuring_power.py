"""
Sampling power and replaying traces
===================================

Live sampling reads GPU board power through ``nvidia-smi`` and CPU/DRAM
energy counters through Linux powercap. This script uses deterministic
stand-ins so it runs anywhere; swap in ``GpuProvider`` and ``rapl_provider``
on a real machine.
"""

import io

from trainfootprint import telemetry as tm
from trainfootprint import estimate_footprint

providers = [
    tm.ConstantProvider(231.45, tm.Source.GPU, 0),
    tm.ConstantProvider(228.10, tm.Source.GPU, 1),
    tm.EnergyCounterProvider(tm.SimulatedEnergyCounter(62.0, tm.Source.CPU_PACKAGE), tm.Source.CPU_PACKAGE),
    tm.EnergyCounterProvider(tm.SimulatedEnergyCounter(9.5, tm.Source.DRAM), tm.Source.DRAM),
]
series = tm.run_sampler(providers, interval_ms=100, duration_ms=1000)
print(f"{len(series)} samples; energy counters skip their first tick")

# %%
# Energy counters are cumulative microjoules and wrap around. The delta is
# taken modulo the counter width.

a = tm.EnergyCounterReading(0, "cpu-package", 2**32 - 10**6)
b = tm.EnergyCounterReading(1000, "cpu-package", 10**6)
print("across a wrap:", tm.power_from_energy_delta(a, b), "W")

# %%
# Reduce to average draws and a footprint for a 24 hour run.

for src in tm.Source:
    print(f"{src.value:12s} total mean {tm.total_average_power(series, src):8.2f} W")
profile, missing = tm.power_profile(series)
est = estimate_footprint(profile, hours=24, partial=bool(missing))
print(f"24 h -> {est.kwh_pue:.2f} kWh*PUE, {est.co2e_lbs:.2f} lbs CO2e")

# %%
# Traces are plain CSV and round-trip exactly.

buf = io.StringIO()
tm.save_trace(series, buf)
print(buf.getvalue().splitlines()[:4])
assert tm.load_trace(io.StringIO(buf.getvalue())) == series
