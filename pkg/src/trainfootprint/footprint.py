"""PUE-scaled training energy and CO2-equivalent emissions.

Energy in kWh is ``pue * hours * (p_cpu + p_dram + n_gpu * p_gpu) / 1000``
and emissions are a flat grid factor (lbs CO2e per kWh) times that energy.
Everything here stays at full precision; rounding belongs to the reporting
layer.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path

DEFAULT_PUE = 1.58
# U.S. EPA grid average, lbs CO2e per kWh.
DEFAULT_CO2E_LBS_PER_KWH = 0.954


class UnknownConsumer(KeyError):
    pass


class UnknownPreset(KeyError):
    pass


@dataclass(frozen=True)
class PowerProfile:
    """Average draws in watts. ``p_gpu`` is per device and ignored when ``n_gpu == 0``."""

    p_cpu: float = 0.0
    p_dram: float = 0.0
    p_gpu: float = 0.0
    n_gpu: int = 0

    def __post_init__(self) -> None:
        for name in ("p_cpu", "p_dram", "p_gpu"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.n_gpu < 0:
            raise ValueError(f"n_gpu must be >= 0, got {self.n_gpu}")

    @classmethod
    def from_total(cls, watts: float) -> PowerProfile:
        """Profile for an opaque combined draw (published figures)."""
        return cls(p_cpu=watts)


@dataclass(frozen=True)
class FootprintConfig:
    pue: float = DEFAULT_PUE
    co2e_lbs_per_kwh: float = DEFAULT_CO2E_LBS_PER_KWH

    def __post_init__(self) -> None:
        if not self.pue >= 1.0:
            raise ValueError(f"pue must be >= 1.0, got {self.pue}")
        if not self.co2e_lbs_per_kwh > 0:
            raise ValueError(f"co2e_lbs_per_kwh must be positive, got {self.co2e_lbs_per_kwh}")


@dataclass(frozen=True)
class FootprintEstimate:
    combined_watts: float
    hours: float
    kwh_pue: float
    co2e_lbs: float
    partial: bool = False


@dataclass(frozen=True)
class EnergyMix:
    consumer: str
    renewable_pct: float
    gas_pct: float
    coal_pct: float
    nuclear_pct: float

    def __post_init__(self) -> None:
        parts = (self.renewable_pct, self.gas_pct, self.coal_pct, self.nuclear_pct)
        if any(not 0 <= p <= 100 for p in parts) or sum(parts) > 100:
            raise ValueError(f"invalid energy mix for {self.consumer}: {parts}")

    @property
    def other_pct(self) -> float:
        return 100 - (self.renewable_pct + self.gas_pct + self.coal_pct + self.nuclear_pct)


@dataclass(frozen=True)
class Preset:
    """A published training run: hardware, device count, combined draw, wall hours.

    ``watts`` is None for hardware without public power figures (TPUs).
    """

    name: str
    label: str
    hardware: str
    unit_count: int
    watts: float | None
    hours: float


def combined_draw(profile: PowerProfile) -> float:
    gpu = profile.n_gpu * profile.p_gpu if profile.n_gpu else 0.0
    return profile.p_cpu + profile.p_dram + gpu


def energy_kwh(combined_watts: float, hours: float, config: FootprintConfig | None = None) -> float:
    config = config or FootprintConfig()
    if combined_watts < 0 or hours < 0:
        raise ValueError("combined_watts and hours must be non-negative")
    return config.pue * hours * combined_watts / 1000


def co2e_lbs(kwh: float, config: FootprintConfig | None = None) -> float:
    config = config or FootprintConfig()
    if kwh < 0:
        raise ValueError("kwh must be non-negative")
    return config.co2e_lbs_per_kwh * kwh


def estimate_footprint(
    profile: PowerProfile,
    hours: float,
    config: FootprintConfig | None = None,
    partial: bool = False,
) -> FootprintEstimate:
    config = config or FootprintConfig()
    watts = combined_draw(profile)
    kwh = energy_kwh(watts, hours, config)
    return FootprintEstimate(watts, hours, kwh, co2e_lbs(kwh, config), partial)


# ---------------------------------------------------------------------------
# Bundled data and config files


def _open_data(name: str, override: str | Path | None):
    if override is not None:
        return open(override, encoding="utf-8", newline="")
    return resources.files("trainfootprint").joinpath("data", name).open(
        "r", encoding="utf-8", newline=""
    )


def load_energy_mixes(path: str | Path | None = None) -> dict[str, EnergyMix]:
    with _open_data("energy_mix.csv", path) as fh:
        return {
            row["consumer"]: EnergyMix(
                row["consumer"],
                float(row["renewable_pct"]),
                float(row["gas_pct"]),
                float(row["coal_pct"]),
                float(row["nuclear_pct"]),
            )
            for row in csv.DictReader(fh)
        }


def energy_mix(consumer: str, path: str | Path | None = None) -> EnergyMix:
    mixes = load_energy_mixes(path)
    try:
        return mixes[consumer]
    except KeyError:
        raise UnknownConsumer(
            f"unknown consumer {consumer!r}; valid: {', '.join(mixes)}"
        ) from None


def load_presets(path: str | Path | None = None) -> dict[str, Preset]:
    with _open_data("presets.csv", path) as fh:
        return {
            row["name"]: Preset(
                row["name"],
                row["label"],
                row["hardware"],
                int(row["unit_count"]),
                float(row["watts"]) if row["watts"].strip() else None,
                float(row["hours"]),
            )
            for row in csv.DictReader(fh)
        }


def get_preset(name: str, path: str | Path | None = None) -> Preset:
    presets = load_presets(path)
    try:
        return presets[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; available: {', '.join(presets)}") from None


def load_config(path: str | Path | None = None, **overrides: float | None) -> FootprintConfig:
    """Build a config from defaults, then a JSON file, then explicit overrides.

    The file is a flat JSON object with optional keys ``pue`` and
    ``co2e_lbs_per_kwh``; ``None`` overrides are ignored.
    """
    values: dict[str, float] = {}
    known = {f.name for f in fields(FootprintConfig)}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a JSON object")
        values.update({k: float(v) for k, v in data.items() if k in known})
    values.update({k: float(v) for k, v in overrides.items() if v is not None})
    return FootprintConfig(**values)
