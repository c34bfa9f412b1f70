"""Energy, emissions and cloud cost accounting for ML training runs."""

from .cost import CostRange, PriceSheet, Rate, cloud_cost_range, electricity_cost, load_price_sheet
from .footprint import (
    EnergyMix,
    FootprintConfig,
    FootprintEstimate,
    PowerProfile,
    Preset,
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
from .ledger import (
    ExperimentSummary,
    JobRecord,
    load_case_study_jobs,
    merge_summaries,
    parse_job_log,
    scenario_costs,
    summarize,
    write_job_log,
)
from .report import ReportDocument, ReportRow, render
from .telemetry import (
    EnergyCounterReading,
    PowerSample,
    SampleSeries,
    Source,
    average_power,
    load_trace,
    power_from_energy_delta,
    read_cpu_energy,
    read_gpu_power,
    run_sampler,
    save_trace,
)

__version__ = "0.1.0"
