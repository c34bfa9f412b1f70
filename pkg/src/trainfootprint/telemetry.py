"""Power telemetry: live GPU/CPU readers, a periodic sampler and trace replay.

GPU board power comes from ``nvidia-smi``; CPU package and DRAM energy come
from the Linux powercap (RAPL) counters, which are cumulative microjoule
values and have to be differenced into watts.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import subprocess
import threading
import time
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, TextIO

from .footprint import PowerProfile

logger = logging.getLogger(__name__)

DEFAULT_INTERVAL_MS = 1000
DEFAULT_COUNTER_WIDTH_BITS = 32
POWERCAP_ROOT = Path("/sys/class/powercap")
TRACE_HEADER = ("timestamp_ms", "source", "device_index", "watts")


class TelemetryError(Exception):
    """Base class for telemetry failures."""


class InterfaceUnavailable(TelemetryError):
    """The hardware management interface is missing on this host."""


class ParseFailure(TelemetryError):
    """The management interface produced output we cannot interpret."""


class DomainUnsupported(TelemetryError):
    """The requested energy counter domain does not exist on this CPU."""


class EmptySelection(TelemetryError):
    """No samples matched an averaging filter."""


class TraceFormatError(TelemetryError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class Source(str, enum.Enum):
    CPU_PACKAGE = "cpu-package"
    DRAM = "dram"
    GPU = "gpu"


def now_ms() -> int:
    return time.time_ns() // 1_000_000


@dataclass(frozen=True)
class PowerSample:
    """One power observation from one hardware domain."""

    timestamp_ms: int
    source: Source
    device_index: int
    watts: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "source", Source(self.source))
        if self.device_index < 0:
            raise ValueError(f"device_index must be >= 0, got {self.device_index}")
        if not self.watts >= 0:
            raise ValueError(f"watts must be >= 0, got {self.watts}")

    @property
    def channel(self) -> tuple[Source, int]:
        return (self.source, self.device_index)


@dataclass(frozen=True)
class EnergyCounterReading:
    """Raw cumulative energy counter value (microjoules)."""

    timestamp_ms: int
    domain: Source
    cumulative_microjoules: int
    counter_width_bits: int = DEFAULT_COUNTER_WIDTH_BITS

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", Source(self.domain))
        if self.domain is Source.GPU:
            raise ValueError("energy counters exist only for cpu-package and dram")
        if self.counter_width_bits <= 0:
            raise ValueError("counter_width_bits must be positive")
        if not 0 <= self.cumulative_microjoules < 2**self.counter_width_bits:
            raise ValueError(
                f"counter value {self.cumulative_microjoules} outside "
                f"[0, 2^{self.counter_width_bits})"
            )


@dataclass(frozen=True)
class SampleSeries:
    """Ordered power samples. ``sample_interval_ms`` is nominal metadata only
    and does not take part in equality."""

    samples: tuple[PowerSample, ...] = ()
    sample_interval_ms: int = field(default=DEFAULT_INTERVAL_MS, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[PowerSample]:
        return iter(self.samples)

    def select(
        self, source: Source | str | None = None, device_index: int | None = None
    ) -> list[PowerSample]:
        src = Source(source) if source is not None else None
        return [
            s
            for s in self.samples
            if (src is None or s.source is src)
            and (device_index is None or s.device_index == device_index)
        ]

    def devices(self, source: Source | str) -> list[int]:
        src = Source(source)
        return sorted({s.device_index for s in self.samples if s.source is src})


# ---------------------------------------------------------------------------
# Live readers


def run_command(args: Sequence[str]) -> str:
    try:
        proc = subprocess.run(
            list(args), capture_output=True, text=True, timeout=10, check=False
        )
    except (FileNotFoundError, PermissionError) as exc:
        raise InterfaceUnavailable(f"{args[0]} not found: {exc}") from exc
    except subprocess.TimeoutExpired as exc:
        raise InterfaceUnavailable(f"{args[0]} timed out") from exc
    if proc.returncode != 0:
        raise InterfaceUnavailable(
            f"{args[0]} exited with {proc.returncode}: {proc.stderr.strip()}"
        )
    return proc.stdout


def parse_power_draw(text: str) -> float:
    """Parse one ``power.draw`` value such as ``"231.45 W"`` or ``"231.45"``."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) != 1:
        raise ParseFailure(f"expected one power value, got {text!r}")
    value = lines[0]
    if value.upper().endswith("W"):
        value = value[:-1].strip()
    try:
        watts = float(value)
    except ValueError:
        raise ParseFailure(f"unparseable power value {lines[0]!r}") from None
    if not watts >= 0:
        raise ParseFailure(f"negative or NaN power value {lines[0]!r}")
    return watts


def read_gpu_power(
    device_index: int,
    runner: Callable[[Sequence[str]], str] | None = None,
    clock: Callable[[], int] = now_ms,
) -> PowerSample:
    """Query instantaneous board power of one GPU through ``nvidia-smi``.

    Raises:
        InterfaceUnavailable: no GPU or the tool is missing.
        ParseFailure: the tool printed something other than a wattage.
    """
    run = runner or run_command
    out = run(
        [
            "nvidia-smi",
            "--query-gpu=power.draw",
            "--format=csv,noheader,nounits",
            f"--id={device_index}",
        ]
    )
    return PowerSample(clock(), Source.GPU, device_index, parse_power_draw(out))


def _rapl_zone(root: Path, domain: Source, socket: int) -> Path:
    package = root / f"intel-rapl:{socket}"
    if not (package / "energy_uj").exists():
        raise DomainUnsupported(f"no RAPL package zone for socket {socket} under {root}")
    if domain is Source.CPU_PACKAGE:
        return package
    for sub in sorted(package.glob(f"intel-rapl:{socket}:*")):
        name = sub / "name"
        if name.exists() and name.read_text(encoding="utf-8").strip() == "dram":
            return sub
    raise DomainUnsupported(f"no dram RAPL domain for socket {socket}")


def read_cpu_energy(
    domain: Source | str,
    socket: int = 0,
    root: Path = POWERCAP_ROOT,
    counter_width_bits: int | None = None,
    clock: Callable[[], int] = now_ms,
) -> EnergyCounterReading:
    """Read a cumulative RAPL energy counter for ``cpu-package`` or ``dram``.

    When ``counter_width_bits`` is not given it is taken from the zone's
    ``max_energy_range_uj`` (bit length), falling back to 32 bits.
    """
    dom = Source(domain)
    if dom is Source.GPU:
        raise DomainUnsupported("gpu has no RAPL energy counter")
    root = Path(root)
    if not root.exists():
        raise InterfaceUnavailable(f"powercap interface not present at {root}")
    zone = _rapl_zone(root, dom, socket)
    try:
        raw = (zone / "energy_uj").read_text(encoding="utf-8").strip()
        value = int(raw)
    except PermissionError as exc:
        raise InterfaceUnavailable(f"cannot read {zone / 'energy_uj'}: {exc}") from exc
    except ValueError:
        raise ParseFailure(f"unparseable energy counter {raw!r}") from None
    width = counter_width_bits
    if width is None:
        width = DEFAULT_COUNTER_WIDTH_BITS
        range_file = zone / "max_energy_range_uj"
        if range_file.exists():
            try:
                width = int(range_file.read_text(encoding="utf-8").strip()).bit_length()
            except ValueError:
                pass
    return EnergyCounterReading(clock(), dom, value % 2**width, width)


def power_from_energy_delta(
    earlier: EnergyCounterReading, later: EnergyCounterReading
) -> float:
    """Average watts between two counter readings, tolerating one wraparound."""
    if earlier.domain is not later.domain:
        raise ValueError(f"mismatched domains {earlier.domain.value} / {later.domain.value}")
    if earlier.counter_width_bits != later.counter_width_bits:
        raise ValueError("mismatched counter widths")
    elapsed_ms = later.timestamp_ms - earlier.timestamp_ms
    if elapsed_ms <= 0:
        raise ValueError(f"elapsed time must be positive, got {elapsed_ms} ms")
    delta_uj = (later.cumulative_microjoules - earlier.cumulative_microjoules) % (
        2**earlier.counter_width_bits
    )
    return delta_uj / (elapsed_ms / 1000) / 1e6


# ---------------------------------------------------------------------------
# Providers


class ProviderExhausted(Exception):
    """A replay provider has no more samples."""


class PowerProvider(Protocol):
    source: Source
    device_index: int

    def poll(self, timestamp_ms: int) -> PowerSample | None:
        """Return a sample for this tick, or None when the tick yields nothing."""
        ...


class GpuProvider:
    def __init__(self, device_index: int = 0, runner=None) -> None:
        self.source = Source.GPU
        self.device_index = device_index
        self._runner = runner

    def poll(self, timestamp_ms: int) -> PowerSample:
        return read_gpu_power(self.device_index, self._runner, clock=lambda: timestamp_ms)


class EnergyCounterProvider:
    """Turns successive counter readings into power samples.

    The first poll only primes the counter. A failed read keeps the last good
    reading, so the next sample averages over the whole gap.
    """

    def __init__(
        self,
        read: Callable[[int], EnergyCounterReading],
        source: Source | str,
        device_index: int = 0,
    ) -> None:
        self.source = Source(source)
        self.device_index = device_index
        self._read = read
        self._last: EnergyCounterReading | None = None

    def poll(self, timestamp_ms: int) -> PowerSample | None:
        reading = self._read(timestamp_ms)
        last, self._last = self._last, reading
        if last is None:
            return None
        watts = power_from_energy_delta(last, reading)
        return PowerSample(reading.timestamp_ms, self.source, self.device_index, watts)


def rapl_provider(
    domain: Source | str, socket: int = 0, root: Path = POWERCAP_ROOT
) -> EnergyCounterProvider:
    dom = Source(domain)
    read_cpu_energy(dom, socket, root)  # probe now so absence surfaces early

    def read(ts: int) -> EnergyCounterReading:
        return read_cpu_energy(dom, socket, root, clock=lambda: ts)

    return EnergyCounterProvider(read, dom, socket)


class ConstantProvider:
    """Deterministic instantaneous provider (tests and mock mode)."""

    def __init__(self, watts: float, source: Source | str = Source.GPU, device_index: int = 0):
        self.source = Source(source)
        self.device_index = device_index
        self.watts = float(watts)

    def poll(self, timestamp_ms: int) -> PowerSample:
        return PowerSample(timestamp_ms, self.source, self.device_index, self.watts)


class SimulatedEnergyCounter:
    """A fake RAPL counter that accumulates a constant draw and wraps."""

    def __init__(
        self,
        watts: float,
        domain: Source | str = Source.CPU_PACKAGE,
        start_uj: int = 0,
        counter_width_bits: int = DEFAULT_COUNTER_WIDTH_BITS,
    ) -> None:
        self.watts = watts
        self.domain = Source(domain)
        self.start_uj = start_uj
        self.width = counter_width_bits
        self._origin_ms: int | None = None

    def __call__(self, timestamp_ms: int) -> EnergyCounterReading:
        if self._origin_ms is None:
            self._origin_ms = timestamp_ms
        uj = self.start_uj + round(self.watts * (timestamp_ms - self._origin_ms) * 1000)
        return EnergyCounterReading(timestamp_ms, self.domain, uj % 2**self.width, self.width)


class ReplayProvider:
    """Replays the recorded samples of one channel, one per tick, keeping
    their original timestamps."""

    def __init__(self, samples: Iterable[PowerSample]) -> None:
        self._samples = list(samples)
        if not self._samples:
            raise ValueError("nothing to replay")
        self.source = self._samples[0].source
        self.device_index = self._samples[0].device_index
        self._pos = 0

    def poll(self, timestamp_ms: int) -> PowerSample:
        if self._pos >= len(self._samples):
            raise ProviderExhausted
        sample = self._samples[self._pos]
        self._pos += 1
        return sample


def replay_providers(series: SampleSeries) -> list[ReplayProvider]:
    """One replay provider per channel, in order of first appearance."""
    channels: dict[tuple[Source, int], list[PowerSample]] = {}
    for s in series:
        channels.setdefault(s.channel, []).append(s)
    return [ReplayProvider(v) for v in channels.values()]


# ---------------------------------------------------------------------------
# Sampling loop


class SampleSink:
    """Append-only sample buffer: one writer, any number of snapshot readers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._samples: list[PowerSample] = []

    def append(self, sample: PowerSample) -> None:
        with self._lock:
            self._samples.append(sample)

    def snapshot(self, sample_interval_ms: int = DEFAULT_INTERVAL_MS) -> SampleSeries:
        with self._lock:
            return SampleSeries(tuple(self._samples), sample_interval_ms)


def run_sampler(
    providers: Sequence[PowerProvider],
    interval_ms: int = DEFAULT_INTERVAL_MS,
    duration_ms: int | None = None,
    stop: threading.Event | None = None,
    clock: Callable[[], int] = now_ms,
    sleep: Callable[[float], None] | None = None,
    sink: SampleSink | None = None,
) -> SampleSeries:
    """Poll every provider once per tick and collect the samples.

    With ``duration_ms`` the loop runs ``duration_ms // interval_ms`` ticks;
    otherwise it runs until ``stop`` is set or every provider is exhausted.
    A provider that raises is logged and skipped for that tick.
    """
    if interval_ms <= 0:
        raise ValueError("interval_ms must be positive")
    if not providers:
        raise ValueError("at least one provider is required")
    if duration_ms is None and stop is None:
        raise ValueError("need duration_ms or a stop event")
    if sleep is None:
        sleep = stop.wait if stop is not None else time.sleep
    sink = sink or SampleSink()
    ticks = duration_ms // interval_ms if duration_ms is not None else None
    live = list(providers)
    start = clock()
    tick = 0
    while live and (ticks is None or tick < ticks):
        if stop is not None and stop.is_set():
            break
        if tick:
            delay_ms = start + tick * interval_ms - clock()
            if delay_ms > 0:
                sleep(delay_ms / 1000)
            if stop is not None and stop.is_set():
                break
        ts = clock()
        for provider in list(live):
            try:
                sample = provider.poll(ts)
            except ProviderExhausted:
                live.remove(provider)
                continue
            except Exception as exc:
                logger.warning(
                    "provider %s[%d] failed at tick %d: %s",
                    provider.source.value,
                    provider.device_index,
                    tick,
                    exc,
                )
                continue
            if sample is not None:
                sink.append(sample)
        tick += 1
    return sink.snapshot(interval_ms)


class BackgroundSampler:
    """Runs :func:`run_sampler` on a daemon thread alongside a workload."""

    def __init__(self, providers: Sequence[PowerProvider], interval_ms: int = DEFAULT_INTERVAL_MS):
        self.providers = providers
        self.interval_ms = interval_ms
        self.sink = SampleSink()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._result: SampleSeries | None = None

    def start(self) -> BackgroundSampler:
        def target() -> None:
            self._result = run_sampler(
                self.providers, self.interval_ms, stop=self._stop, sink=self.sink
            )

        self._thread = threading.Thread(target=target, name="power-sampler", daemon=True)
        self._thread.start()
        return self

    def snapshot(self) -> SampleSeries:
        return self.sink.snapshot(self.interval_ms)

    def stop(self) -> SampleSeries:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
        return self._result if self._result is not None else self.snapshot()

    def __enter__(self) -> BackgroundSampler:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


# ---------------------------------------------------------------------------
# Reduction


def average_power(
    series: SampleSeries | Iterable[PowerSample],
    source: Source | str | None = None,
    device_index: int | None = None,
) -> float:
    """Arithmetic mean of the matching samples' watts."""
    if not isinstance(series, SampleSeries):
        series = SampleSeries(tuple(series))
    chosen = series.select(source, device_index)
    if not chosen:
        raise EmptySelection(
            f"no samples for source={source!r} device_index={device_index!r}"
        )
    values = [s.watts for s in chosen]
    lo, hi = min(values), max(values)
    if lo == hi:
        return lo
    # Guard the [min, max] bound against last-bit rounding of the mean.
    return min(hi, max(lo, sum(values) / len(values)))


def total_average_power(series: SampleSeries, source: Source | str) -> float:
    """Sum over devices of each device's mean draw (0.0 if none present)."""
    return sum(average_power(series, source, d) for d in series.devices(source))


def power_profile(series: SampleSeries, gpu_count: int | None = None) -> tuple[PowerProfile, list[str]]:
    """Average draws per domain as a footprint profile.

    CPU and DRAM draws are summed over sockets; the GPU draw is the mean per
    device. Also returns the names of CPU/DRAM domains with no samples, which
    count as 0 W and make the estimate partial.
    """
    missing = [s.value for s in (Source.CPU_PACKAGE, Source.DRAM) if not series.select(s)]
    p_cpu = total_average_power(series, Source.CPU_PACKAGE)
    p_dram = total_average_power(series, Source.DRAM)
    gpus = series.devices(Source.GPU)
    p_gpu = total_average_power(series, Source.GPU) / len(gpus) if gpus else 0.0
    n_gpu = gpu_count if gpu_count is not None else len(gpus)
    return PowerProfile(p_cpu, p_dram, p_gpu, n_gpu), missing


# ---------------------------------------------------------------------------
# Trace I/O


def _format_watts(w: float) -> str:
    return repr(float(w))


def save_trace(series: SampleSeries | Iterable[PowerSample], stream: TextIO) -> None:
    """Write samples as CSV with the canonical ``timestamp_ms,source,device_index,watts`` header."""
    stream.write(",".join(TRACE_HEADER) + "\n")
    for s in series:
        stream.write(
            f"{s.timestamp_ms},{s.source.value},{s.device_index},{_format_watts(s.watts)}\n"
        )


def load_trace(
    stream: TextIO | str | Path, sample_interval_ms: int = DEFAULT_INTERVAL_MS
) -> SampleSeries:
    """Parse a CSV power trace.

    Raises:
        TraceFormatError: bad header, malformed row or timestamps going
            backwards within one (source, device) channel.
    """
    if isinstance(stream, (str, Path)):
        with open(stream, encoding="utf-8", newline="") as fh:
            return load_trace(fh, sample_interval_ms)
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
        raise TraceFormatError(1, f"expected header {','.join(TRACE_HEADER)}")
    samples: list[PowerSample] = []
    last_ts: dict[tuple[Source, int], int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise TraceFormatError(lineno, f"expected 4 fields, got {len(row)}")
        try:
            sample = PowerSample(int(row[0]), Source(row[1]), int(row[2]), float(row[3]))
        except ValueError as exc:
            raise TraceFormatError(lineno, str(exc)) from None
        prev = last_ts.get(sample.channel)
        if prev is not None and sample.timestamp_ms < prev:
            raise TraceFormatError(
                lineno,
                f"timestamp {sample.timestamp_ms} precedes {prev} for "
                f"{sample.source.value}[{sample.device_index}]",
            )
        last_ts[sample.channel] = sample.timestamp_ms
        samples.append(sample)
    return SampleSeries(tuple(samples), sample_interval_ms)


def dumps_trace(series: SampleSeries) -> str:
    buf = io.StringIO()
    save_trace(series, buf)
    return buf.getvalue()
