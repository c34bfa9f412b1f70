"""Experiment job logs and project-level (R&D) cost accounting.

A job log is CSV with header
``job_id,start_iso8601,end_iso8601,hardware,device_count,avg_total_watts``;
timestamps are ISO-8601 UTC and the watts column may be empty.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from functools import reduce
from importlib import resources
from pathlib import Path
from typing import TextIO

import numpy as np

from .cost import CostRange, PriceSheet, cloud_cost_range, electricity_cost
from .footprint import FootprintConfig, co2e_lbs, energy_kwh

LOG_HEADER = (
    "job_id",
    "start_iso8601",
    "end_iso8601",
    "hardware",
    "device_count",
    "avg_total_watts",
)
# Per-device draw implied by the case-study electricity bill.
DEFAULT_JOB_WATTS = 217.0
DEFAULT_PROXY_HARDWARE = "P100"
CASE_STUDY_SEED = 20190605
HOUR = timedelta(hours=1)


class JobLogError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyLog(ValueError):
    pass


@dataclass(frozen=True)
class JobRecord:
    job_id: str
    start: datetime
    end: datetime
    hardware: str
    device_count: int = 1
    avg_total_watts: float | None = None

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError(f"job {self.job_id}: end {self.end} is not after start {self.start}")
        if self.device_count < 1:
            raise ValueError(f"job {self.job_id}: device_count must be positive")
        if self.avg_total_watts is not None and not self.avg_total_watts >= 0:
            raise ValueError(f"job {self.job_id}: avg_total_watts must be >= 0")

    @property
    def duration(self) -> timedelta:
        return self.end - self.start

    @property
    def hours(self) -> float:
        return self.duration / HOUR

    @property
    def device_hours(self) -> float:
        return self.duration * self.device_count / HOUR


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    fmt = "%Y-%m-%dT%H:%M:%S.%fZ" if ts.microsecond else "%Y-%m-%dT%H:%M:%SZ"
    return ts.strftime(fmt)


def parse_job_log(stream: TextIO | str | Path) -> list[JobRecord]:
    """Parse a job log; errors carry the 1-based line number."""
    if isinstance(stream, (str, Path)):
        with open(stream, encoding="utf-8", newline="") as fh:
            return parse_job_log(fh)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return []
    if tuple(h.strip() for h in header) != LOG_HEADER:
        raise JobLogError(1, f"expected header {','.join(LOG_HEADER)}")
    jobs: list[JobRecord] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(LOG_HEADER):
            raise JobLogError(lineno, f"expected {len(LOG_HEADER)} fields, got {len(row)}")
        job_id, start, end, hardware, count, watts = (c.strip() for c in row)
        try:
            jobs.append(
                JobRecord(
                    job_id,
                    parse_timestamp(start),
                    parse_timestamp(end),
                    hardware,
                    int(count),
                    float(watts) if watts else None,
                )
            )
        except ValueError as exc:
            raise JobLogError(lineno, str(exc)) from None
    return jobs


def write_job_log(jobs: Iterable[JobRecord], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for j in jobs:
        watts = "" if j.avg_total_watts is None else repr(float(j.avg_total_watts))
        writer.writerow(
            (j.job_id, format_timestamp(j.start), format_timestamp(j.end), j.hardware, j.device_count, watts)
        )


def dumps_job_log(jobs: Iterable[JobRecord]) -> str:
    buf = io.StringIO()
    write_job_log(jobs, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class ExperimentSummary:
    """Aggregate statistics over a set of jobs.

    Durations are kept as ``timedelta`` (integer microseconds) so that totals
    are exact and merging shards is associative.
    """

    job_count: int
    first_start: datetime
    last_end: datetime
    device_time: timedelta
    job_time: timedelta
    min_job: timedelta
    max_job: timedelta
    hardware_device_time: dict[str, timedelta] = field(default_factory=dict)

    @property
    def span_days(self) -> float:
        return (self.last_end - self.first_start) / timedelta(days=1)

    @property
    def total_device_hours(self) -> float:
        return self.device_time / HOUR

    @property
    def min_job_hours(self) -> float:
        return self.min_job / HOUR

    @property
    def max_job_hours(self) -> float:
        return self.max_job / HOUR

    @property
    def avg_job_hours(self) -> float:
        return self.job_time / HOUR / self.job_count

    @property
    def avg_concurrent_devices(self) -> float:
        return self.device_time / (self.last_end - self.first_start)

    @property
    def hardware_share(self) -> dict[str, float]:
        """Fraction of device-hours per hardware kind."""
        return {k: v / self.device_time for k, v in sorted(self.hardware_device_time.items())}


def summarize(jobs: Sequence[JobRecord]) -> ExperimentSummary:
    if not jobs:
        raise EmptyLog("empty log")
    hardware: dict[str, timedelta] = {}
    device_time = job_time = timedelta(0)
    for j in jobs:
        d = j.duration
        job_time += d
        device_time += d * j.device_count
        hardware[j.hardware] = hardware.get(j.hardware, timedelta(0)) + d * j.device_count
    durations = [j.duration for j in jobs]
    return ExperimentSummary(
        job_count=len(jobs),
        first_start=min(j.start for j in jobs),
        last_end=max(j.end for j in jobs),
        device_time=device_time,
        job_time=job_time,
        min_job=min(durations),
        max_job=max(durations),
        hardware_device_time=hardware,
    )


def merge_summaries(a: ExperimentSummary, b: ExperimentSummary) -> ExperimentSummary:
    """Summary of the union of two disjoint job sets."""
    hardware = dict(a.hardware_device_time)
    for k, v in b.hardware_device_time.items():
        hardware[k] = hardware.get(k, timedelta(0)) + v
    return ExperimentSummary(
        job_count=a.job_count + b.job_count,
        first_start=min(a.first_start, b.first_start),
        last_end=max(a.last_end, b.last_end),
        device_time=a.device_time + b.device_time,
        job_time=a.job_time + b.job_time,
        min_job=min(a.min_job, b.min_job),
        max_job=max(a.max_job, b.max_job),
        hardware_device_time=hardware,
    )


def summarize_shards(shards: Iterable[Sequence[JobRecord]]) -> ExperimentSummary:
    return reduce(merge_summaries, (summarize(s) for s in shards))


def typical_model_hours(jobs: Sequence[JobRecord]) -> float:
    """Most frequent job length in hours (ties go to the longer length).

    Used as the cost of training one model: full runs share a fixed budget,
    while crashed or early-stopped jobs scatter below it.
    """
    if not jobs:
        raise EmptyLog("empty log")
    counts = Counter(j.duration for j in jobs)
    best = max(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
    return best / HOUR


@dataclass(frozen=True)
class ScenarioCost:
    label: str
    device_hours: float
    watts: float
    kwh_pue: float
    co2e_lbs: float
    cloud: CostRange
    electricity_usd: float


def scenario_costs(
    device_hours: float,
    watts: float = DEFAULT_JOB_WATTS,
    sheet: PriceSheet | None = None,
    config: FootprintConfig | None = None,
    proxy_hardware: str = DEFAULT_PROXY_HARDWARE,
    label: str = "",
) -> ScenarioCost:
    """Cloud and electricity cost of ``device_hours`` at a per-device draw of ``watts``.

    Cloud cost is priced at the proxy hardware's rates, one device per hour.
    """
    sheet = sheet or PriceSheet()
    config = config or FootprintConfig()
    kwh = energy_kwh(watts, device_hours, config)
    return ScenarioCost(
        label=label,
        device_hours=device_hours,
        watts=watts,
        kwh_pue=kwh,
        co2e_lbs=co2e_lbs(kwh, config),
        cloud=cloud_cost_range(proxy_hardware, 1, device_hours, sheet),
        electricity_usd=electricity_cost(kwh, sheet),
    )


def job_energy_kwh(
    jobs: Iterable[JobRecord],
    default_watts: float = DEFAULT_JOB_WATTS,
    config: FootprintConfig | None = None,
) -> float:
    """PUE-scaled energy summed per job; ``default_watts`` is per device and
    fills in jobs without a measured total draw."""
    total = 0.0
    for j in jobs:
        watts = j.avg_total_watts if j.avg_total_watts is not None else default_watts * j.device_count
        total += energy_kwh(watts, j.hours, config)
    return total


# ---------------------------------------------------------------------------
# Synthetic case-study corpus


def generate_case_study_jobs(
    seed: int = CASE_STUDY_SEED,
    n_jobs: int = 4789,
    n_searches: int = 123,
    span_days: int = 172,
    total_device_hours: int = 239_942,
    full_run_hours: int = 120,
    n_full_runs: int = 600,
    titan_x_share: float = 0.72,
    epoch: datetime = datetime(2017, 9, 1, tzinfo=timezone.utc),
) -> list[JobRecord]:
    """Deterministic stand-in for a six-month project's training log.

    Durations are whole minutes: one 3-minute crash, one 9-day job,
    ``n_full_runs`` jobs at exactly ``full_run_hours`` and the rest
    log-normally spread between those extremes, rescaled so the total hits
    ``total_device_hours`` exactly. One job starts at the epoch and the
    longest job ends exactly ``span_days`` later. Every job uses one device.
    """
    rng = np.random.default_rng(seed)
    min_minutes, max_minutes = 3, 9 * 24 * 60
    full_minutes = full_run_hours * 60
    span_minutes = span_days * 24 * 60
    n_rest = n_jobs - n_full_runs - 2
    rest_total = total_device_hours * 60 - min_minutes - max_minutes - n_full_runs * full_minutes
    if n_rest <= 0 or rest_total <= n_rest * (min_minutes + 1):
        raise ValueError("inconsistent corpus parameters")

    raw = rng.lognormal(mean=0.0, sigma=1.0, size=n_rest)
    rest = np.clip(np.rint(raw * rest_total / raw.sum()), min_minutes + 1, max_minutes - 1)
    rest = rest.astype(np.int64)

    def allowed(v: int) -> bool:
        return min_minutes < v < max_minutes and v != full_minutes

    rest[rest == full_minutes] -= 1
    residual = int(rest_total - rest.sum())
    order = rng.permutation(n_rest)
    i = 0
    while residual:
        step = 1 if residual > 0 else -1
        idx = order[i % n_rest]
        if allowed(int(rest[idx]) + step):
            rest[idx] += step
            residual -= step
        i += 1

    durations = np.concatenate(
        [[min_minutes, max_minutes], np.full(n_full_runs, full_minutes), rest]
    )
    durations = durations[np.concatenate([[0, 1], 2 + rng.permutation(n_jobs - 2)])]

    # Grid searches launch at random times; their jobs follow with small offsets.
    search_of = np.sort(
        np.concatenate(
            [np.arange(n_searches), rng.integers(0, n_searches, size=n_jobs - n_searches)]
        )
    )
    launch = np.sort(rng.integers(0, span_minutes, size=n_searches))
    starts = np.empty(n_jobs, dtype=np.int64)
    for j in range(n_jobs):
        offset = int(rng.integers(0, 3 * 24 * 60))
        latest = span_minutes - int(durations[j])
        starts[j] = min(int(launch[search_of[j]]) + offset, latest)
    # Pin the span: the crash at the epoch, the longest job ending at span_days.
    crash = int(np.flatnonzero(durations == min_minutes)[0])
    longest = int(np.flatnonzero(durations == max_minutes)[0])
    starts[crash] = 0
    starts[longest] = span_minutes - max_minutes

    n_titan = round(titan_x_share * n_jobs)
    hardware = np.array(["TitanX"] * n_titan + ["M40"] * (n_jobs - n_titan))[
        rng.permutation(n_jobs)
    ]

    per_search: Counter = Counter()
    jobs = []
    for j in np.argsort(starts, kind="stable"):
        s = int(search_of[j])
        per_search[s] += 1
        start = epoch + timedelta(minutes=int(starts[j]))
        jobs.append(
            JobRecord(
                job_id=f"s{s:03d}-j{per_search[s]:03d}",
                start=start,
                end=start + timedelta(minutes=int(durations[j])),
                hardware=str(hardware[j]),
                device_count=1,
            )
        )
    return jobs


def case_study_log_path() -> Path:
    return Path(str(resources.files("trainfootprint").joinpath("data", "case_study_jobs.csv")))


def load_case_study_jobs() -> list[JobRecord]:
    """The bundled corpus, as written by :func:`generate_case_study_jobs`."""
    return parse_job_log(case_study_log_path())
