"""Command-line entry point: ``track``, ``estimate``, ``mix`` and ``aggregate``.

Exit codes: 0 success, 1 data error, 2 environment or usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import subprocess
import sys
import threading
import time
from pathlib import Path

from . import telemetry as tm
from .cost import PriceSheet, UnknownHardware, cloud_cost_range, electricity_cost, load_price_sheet
from .footprint import (
    FootprintConfig,
    PowerProfile,
    UnknownConsumer,
    UnknownPreset,
    estimate_footprint,
    get_preset,
    load_config,
    load_energy_mixes,
    load_presets,
    energy_mix,
)
from .ledger import (
    DEFAULT_JOB_WATTS,
    DEFAULT_PROXY_HARDWARE,
    JobLogError,
    parse_job_log,
    scenario_costs,
    summarize,
    typical_model_hours,
)
from .report import (
    FORMATS,
    ReportDocument,
    ReportRow,
    provenance_for,
    render,
    render_mixes,
    row_from_preset,
    row_from_scenario,
)

logger = logging.getLogger(__name__)

MOCK_ENV = "TRAINFOOTPRINT_MOCK_PROVIDERS"
EXIT_OK, EXIT_DATA, EXIT_ENV = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA) -> None:
        super().__init__(message)
        self.code = code


def parse_duration_ms(text: str) -> int:
    """``"5s"``, ``"500ms"``, ``"2m"``, ``"1h"`` or bare seconds."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*(ms|s|m|h)?\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")
    scale = {"ms": 1, "s": 1000, "m": 60_000, "h": 3_600_000, None: 1000}[m.group(2)]
    return round(float(m.group(1)) * scale)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    parser.add_argument("--config", default=s, help="JSON file with pue / co2e_lbs_per_kwh")
    parser.add_argument("--format", choices=FORMATS, default=s)
    parser.add_argument("--prices", default=s, help="JSON price sheet")
    parser.add_argument("--mix-file", default=s, help="CSV of energy mixes")
    parser.add_argument("--presets-file", default=s, help="CSV of training presets")
    parser.add_argument("--pue", type=float, default=s)
    parser.add_argument("--co2e-lbs-per-kwh", type=float, default=s)
    parser.add_argument("--electricity-per-kwh", type=float, default=s)
    parser.add_argument("-v", "--verbose", action="store_true", default=s)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trainfootprint",
        description="Energy, CO2e and cloud cost accounting for ML training.",
    )
    _common_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="sample power while a workload runs, or replay a trace")
    _common_flags(p)
    p.add_argument("--replay", type=Path, help="power trace CSV to replay instead of live sampling")
    p.add_argument("--duration", type=parse_duration_ms, help="sample for a fixed time, e.g. 5s")
    p.add_argument("--interval-ms", type=int, default=tm.DEFAULT_INTERVAL_MS)
    p.add_argument("--trace-out", type=Path, help="write the collected samples here")
    p.add_argument("--hours", type=float, help="training hours to extrapolate to (default: measured)")
    p.add_argument("--hardware", help="hardware kind for cloud pricing, e.g. P100")
    p.add_argument("--count", type=int, help="GPU count (default: devices seen)")
    p.add_argument("workload", nargs=argparse.REMAINDER, help="-- command to run and monitor")

    p = sub.add_parser("estimate", help="footprint and cost of published or hypothetical runs")
    _common_flags(p)
    p.add_argument("--preset", action="append", help="preset name (repeatable) or 'all'")
    p.add_argument("--list", action="store_true", help="list presets and exit")
    p.add_argument("--watts", type=float, help="combined draw in watts")
    p.add_argument("--hours", type=float)
    p.add_argument("--hardware")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--label", default="custom")

    p = sub.add_parser("mix", help="electricity source breakdown by consumer")
    _common_flags(p)
    p.add_argument("consumer", nargs="?", help="omit to list all")

    p = sub.add_parser("aggregate", help="R&D cost ledger from a job log")
    _common_flags(p)
    p.add_argument("--log", type=Path, required=True)
    p.add_argument("--proxy-hardware", default=DEFAULT_PROXY_HARDWARE)
    p.add_argument("--watts", type=float, default=DEFAULT_JOB_WATTS, help="per-device draw")
    p.add_argument("--scenarios", default="1,24,all")
    p.add_argument("--model-hours", type=float, help="hours per model (default: most common job length)")
    return parser


def _settings(args: argparse.Namespace) -> tuple[FootprintConfig, PriceSheet]:
    try:
        config = load_config(
            getattr(args, "config", None),
            pue=getattr(args, "pue", None),
            co2e_lbs_per_kwh=getattr(args, "co2e_lbs_per_kwh", None),
        )
        sheet = load_price_sheet(
            getattr(args, "prices", None),
            electricity_per_kwh=getattr(args, "electricity_per_kwh", None),
        )
    except OSError as exc:
        raise CliError(str(exc), EXIT_ENV) from exc
    except ValueError as exc:
        raise CliError(f"bad configuration: {exc}") from exc
    return config, sheet


# ---------------------------------------------------------------------------
# track


def _mock_providers() -> list:
    return [
        tm.ConstantProvider(250.0, tm.Source.GPU, 0),
        tm.EnergyCounterProvider(tm.SimulatedEnergyCounter(65.0, tm.Source.CPU_PACKAGE), tm.Source.CPU_PACKAGE),
        tm.EnergyCounterProvider(tm.SimulatedEnergyCounter(12.0, tm.Source.DRAM), tm.Source.DRAM),
    ]


def _live_providers() -> list:
    providers: list = []
    try:
        out = tm.run_command(["nvidia-smi", "--query-gpu=index", "--format=csv,noheader"])
        providers += [tm.GpuProvider(int(line)) for line in out.split() if line.strip().isdigit()]
    except tm.TelemetryError as exc:
        logger.info("no GPU provider: %s", exc)
    socket = 0
    while True:
        try:
            providers.append(tm.rapl_provider(tm.Source.CPU_PACKAGE, socket))
        except tm.TelemetryError:
            break
        try:
            providers.append(tm.rapl_provider(tm.Source.DRAM, socket))
        except tm.TelemetryError as exc:
            logger.info("socket %d: %s", socket, exc)
        socket += 1
    return providers


def cmd_track(args: argparse.Namespace) -> int:
    config, sheet = _settings(args)
    workload = list(args.workload)
    if workload and workload[0] == "--":
        workload = workload[1:]
    if args.interval_ms <= 0:
        raise CliError("--interval-ms must be positive", EXIT_ENV)

    workload_rc = 0
    if args.replay is not None:
        try:
            trace = tm.load_trace(args.replay, args.interval_ms)
        except OSError as exc:
            raise CliError(f"cannot read trace: {exc}", EXIT_ENV) from exc
        except tm.TraceFormatError as exc:
            raise CliError(f"{args.replay}: {exc}") from exc
        if not len(trace):
            raise CliError(f"{args.replay}: trace has no samples")
        series = tm.run_sampler(
            tm.replay_providers(trace), args.interval_ms, stop=threading.Event(), sleep=lambda _: None
        )
        stamps = [s.timestamp_ms for s in series]
        measured_hours = (max(stamps) - min(stamps)) / 3_600_000
        mode = f"replay:{args.replay}"
    else:
        if os.environ.get(MOCK_ENV):
            providers, mode = _mock_providers(), "mock"
        else:
            providers, mode = _live_providers(), "live"
        if not providers:
            raise CliError("no power providers available (no GPU or RAPL); use --replay", EXIT_ENV)
        started = time.monotonic()
        if workload:
            with tm.BackgroundSampler(providers, args.interval_ms) as sampler:
                try:
                    workload_rc = subprocess.run(workload, check=False).returncode
                except OSError as exc:
                    raise CliError(f"cannot run workload: {exc}", EXIT_ENV) from exc
            series = sampler.stop()
        elif args.duration is not None:
            series = tm.run_sampler(providers, args.interval_ms, duration_ms=args.duration)
        else:
            raise CliError("give a workload command, --duration or --replay", EXIT_ENV)
        measured_hours = (time.monotonic() - started) / 3600
        if args.duration is not None and not workload:
            measured_hours = args.duration / 3_600_000

    if not len(series):
        raise CliError("no samples collected", EXIT_ENV)
    if args.trace_out is not None:
        with open(args.trace_out, "w", encoding="utf-8", newline="") as fh:
            tm.save_trace(series, fh)

    profile, missing = tm.power_profile(series, args.count)
    hours = args.hours if args.hours is not None else measured_hours
    est = estimate_footprint(profile, hours, config, partial=bool(missing))
    cloud = None
    if args.hardware:
        try:
            cloud = cloud_cost_range(args.hardware, max(profile.n_gpu, 1), hours, sheet)
        except UnknownHardware as exc:
            raise CliError(str(exc.args[0])) from exc
    row = ReportRow(
        label="tracked workload",
        hardware=args.hardware,
        device_count=profile.n_gpu if args.hardware else None,
        watts=est.combined_watts,
        hours=hours,
        kwh_pue=est.kwh_pue,
        co2e_lbs=est.co2e_lbs,
        cloud=cloud,
        electricity_usd=electricity_cost(est.kwh_pue, sheet),
        partial=est.partial,
    )
    notes = tuple(f"{m} domain missing; counted as 0 W" for m in missing)
    doc = ReportDocument(
        title="Tracked training footprint",
        rows=(row,),
        summary=(
            ("samples", str(len(series))),
            ("p_cpu_watts", f"{profile.p_cpu:.2f}"),
            ("p_dram_watts", f"{profile.p_dram:.2f}"),
            ("p_gpu_watts", f"{profile.p_gpu:.2f}"),
            ("gpu_count", str(profile.n_gpu)),
            ("measured_hours", f"{measured_hours:.6f}"),
        ),
        notes=notes,
        provenance=provenance_for(
            config, sheet, providers=mode, interval_ms=args.interval_ms, hours_source="flag" if args.hours is not None else "measured"
        ),
    )
    _emit(doc, args)
    return workload_rc


# ---------------------------------------------------------------------------
# estimate / mix / aggregate


def cmd_estimate(args: argparse.Namespace) -> int:
    config, sheet = _settings(args)
    presets_file = getattr(args, "presets_file", None)
    try:
        presets = load_presets(presets_file)
    except OSError as exc:
        raise CliError(str(exc), EXIT_ENV) from exc
    if args.list:
        for p in presets.values():
            print(f"{p.name:20s} {p.label} ({p.hardware}x{p.unit_count}, {p.hours:g} h)")
        return EXIT_OK
    rows: list[ReportRow] = []
    names = args.preset or []
    if "all" in names:
        names = list(presets)
    try:
        for name in names:
            rows.append(row_from_preset(get_preset(name, presets_file), config, sheet))
        if args.watts is not None or args.hours is not None:
            if args.watts is None or args.hours is None:
                raise CliError("--watts and --hours go together", EXIT_ENV)
            est = estimate_footprint(PowerProfile.from_total(args.watts), args.hours, config)
            rows.append(
                ReportRow(
                    label=args.label,
                    hardware=args.hardware,
                    device_count=args.count if args.hardware else None,
                    watts=args.watts,
                    hours=args.hours,
                    kwh_pue=est.kwh_pue,
                    co2e_lbs=est.co2e_lbs,
                    cloud=cloud_cost_range(args.hardware, args.count, args.hours, sheet) if args.hardware else None,
                    electricity_usd=electricity_cost(est.kwh_pue, sheet),
                )
            )
    except (UnknownPreset, UnknownHardware) as exc:
        raise CliError(str(exc.args[0])) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    if not rows:
        raise CliError("nothing to estimate: give --preset NAME or --watts/--hours", EXIT_ENV)
    doc = ReportDocument(
        title="Estimated cost of training",
        rows=tuple(rows),
        provenance=provenance_for(config, sheet, presets=presets_file or "bundled"),
    )
    _emit(doc, args)
    return EXIT_OK


def cmd_mix(args: argparse.Namespace) -> int:
    path = getattr(args, "mix_file", None)
    try:
        mixes = [energy_mix(args.consumer, path)] if args.consumer else list(load_energy_mixes(path).values())
    except UnknownConsumer as exc:
        raise CliError(str(exc.args[0])) from exc
    except OSError as exc:
        raise CliError(str(exc), EXIT_ENV) from exc
    sys.stdout.buffer.write(render_mixes(mixes, getattr(args, "format", "text")))
    sys.stdout.flush()
    return EXIT_OK


def cmd_aggregate(args: argparse.Namespace) -> int:
    config, sheet = _settings(args)
    try:
        jobs = parse_job_log(args.log)
    except OSError as exc:
        raise CliError(f"cannot read log: {exc}", EXIT_ENV) from exc
    except JobLogError as exc:
        raise CliError(f"{args.log}: {exc}") from exc
    if not jobs:
        raise CliError("empty log")
    summary = summarize(jobs)
    model_hours = args.model_hours if args.model_hours is not None else typical_model_hours(jobs)
    rows = []
    try:
        for token in (t.strip() for t in args.scenarios.split(",") if t.strip()):
            if token == "all":
                hours = summary.total_device_hours
                label = f"all ({summary.job_count} jobs)"
            else:
                n = int(token)
                hours = n * model_hours
                label = f"{n} model" + ("s" if n != 1 else "")
            s = scenario_costs(hours, args.watts, sheet, config, args.proxy_hardware, label)
            rows.append(row_from_scenario(s, args.proxy_hardware))
    except UnknownHardware as exc:
        raise CliError(str(exc.args[0])) from exc
    except ValueError as exc:
        raise CliError(f"bad --scenarios: {exc}", EXIT_ENV) from exc
    share = ", ".join(f"{k} {v:.1%}" for k, v in summary.hardware_share.items())
    doc = ReportDocument(
        title="Estimated R&D cost (cloud compute and electricity)",
        rows=tuple(rows),
        summary=(
            ("jobs", str(summary.job_count)),
            ("span_days", f"{summary.span_days:.2f}"),
            ("total_device_hours", f"{summary.total_device_hours:,.2f}"),
            ("total_device_days", f"{summary.total_device_hours / 24:,.1f}"),
            ("total_device_years", f"{summary.total_device_hours / 24 / 365:.1f}"),
            ("min_job_hours", f"{summary.min_job_hours:.2f}"),
            ("avg_job_hours", f"{summary.avg_job_hours:.2f}"),
            ("max_job_hours", f"{summary.max_job_hours:.2f}"),
            ("avg_concurrent_devices", f"{summary.avg_concurrent_devices:.1f}"),
            ("hardware_share", share),
            ("model_hours", f"{model_hours:g}"),
        ),
        provenance=provenance_for(
            config, sheet, log=args.log, proxy_hardware=args.proxy_hardware, watts_per_device=args.watts
        ),
    )
    _emit(doc, args)
    return EXIT_OK


def _emit(doc: ReportDocument, args: argparse.Namespace) -> None:
    sys.stdout.buffer.write(render(doc, getattr(args, "format", "text")))
    sys.stdout.flush()


COMMANDS = {
    "track": cmd_track,
    "estimate": cmd_estimate,
    "mix": cmd_mix,
    "aggregate": cmd_aggregate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"trainfootprint {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
