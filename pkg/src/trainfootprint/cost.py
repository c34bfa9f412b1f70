"""Cloud compute and electricity cost.

Cloud cost is a range: pre-emptible rates give the lower bound and on-demand
rates the upper bound, both per device-hour.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

DEFAULT_ELECTRICITY_USD_PER_KWH = 0.12


class UnknownHardware(KeyError):
    pass


@dataclass(frozen=True)
class Rate:
    preemptible: float
    on_demand: float

    def __post_init__(self) -> None:
        if not 0 < self.preemptible <= self.on_demand:
            raise ValueError(
                f"need 0 < preemptible <= on_demand, got {self.preemptible}, {self.on_demand}"
            )


# GPU rates are the published U.S. ranges. TPU per-chip rates are back-solved
# from the published per-run totals, which the quoted TPU hourly ranges do not reproduce.
DEFAULT_RATES: Mapping[str, Rate] = MappingProxyType(
    {
        "P100": Rate(0.43, 1.46),
        "V100": Rate(0.74, 2.48),
        "TPUv2": Rate(1.35, 4.50),
        "TPUv3": Rate(2.40, 8.00),
    }
)


@dataclass(frozen=True)
class PriceSheet:
    rates: Mapping[str, Rate] = field(default_factory=lambda: dict(DEFAULT_RATES))
    electricity_usd_per_kwh: float = DEFAULT_ELECTRICITY_USD_PER_KWH
    source: str = "defaults"

    def __post_init__(self) -> None:
        object.__setattr__(self, "rates", MappingProxyType(dict(self.rates)))
        if not self.electricity_usd_per_kwh > 0:
            raise ValueError("electricity_usd_per_kwh must be positive")

    def rate(self, hardware: str) -> Rate:
        try:
            return self.rates[hardware]
        except KeyError:
            raise UnknownHardware(
                f"no price for hardware {hardware!r}; known: {', '.join(self.rates)}"
            ) from None


@dataclass(frozen=True)
class CostRange:
    lower_usd: float
    upper_usd: float

    def __post_init__(self) -> None:
        if not 0 <= self.lower_usd <= self.upper_usd:
            raise ValueError(f"invalid cost range {self.lower_usd}..{self.upper_usd}")

    def __mul__(self, k: float) -> CostRange:
        return CostRange(self.lower_usd * k, self.upper_usd * k)

    __rmul__ = __mul__


def cloud_cost_range(
    hardware: str, unit_count: int, hours: float, sheet: PriceSheet | None = None
) -> CostRange:
    """Cost of running ``unit_count`` devices for ``hours`` wall-clock hours."""
    sheet = sheet or PriceSheet()
    if unit_count < 1:
        raise ValueError(f"unit_count must be positive, got {unit_count}")
    if hours < 0:
        raise ValueError(f"hours must be non-negative, got {hours}")
    rate = sheet.rate(hardware)
    device_hours = hours * unit_count
    return CostRange(device_hours * rate.preemptible, device_hours * rate.on_demand)


def electricity_cost(kwh: float, sheet: PriceSheet | None = None) -> float:
    sheet = sheet or PriceSheet()
    if kwh < 0:
        raise ValueError(f"kwh must be non-negative, got {kwh}")
    return kwh * sheet.electricity_usd_per_kwh


def load_price_sheet(path: str | Path | None = None, **overrides: float | None) -> PriceSheet:
    """Defaults overlaid with a flat JSON object of ``<hardware>.preemptible``,
    ``<hardware>.on_demand`` and ``electricity_per_kwh`` keys."""
    sheet = PriceSheet()
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a JSON object")
        partial: dict[str, dict[str, float]] = {}
        electricity = sheet.electricity_usd_per_kwh
        for key, value in data.items():
            if key == "electricity_per_kwh":
                electricity = float(value)
                continue
            hardware, sep, kind = key.rpartition(".")
            if not sep or kind not in ("preemptible", "on_demand"):
                raise ValueError(f"{path}: unrecognised price key {key!r}")
            partial.setdefault(hardware, {})[kind] = float(value)
        rates = dict(sheet.rates)
        for hardware, kinds in partial.items():
            base = rates.get(hardware)
            if base is None and len(kinds) != 2:
                raise ValueError(f"{path}: {hardware} needs both preemptible and on_demand")
            rates[hardware] = Rate(
                kinds.get("preemptible", base.preemptible if base else 0.0),
                kinds.get("on_demand", base.on_demand if base else 0.0),
            )
        sheet = PriceSheet(rates, electricity, str(path))
    if overrides.get("electricity_per_kwh") is not None:
        sheet = replace(sheet, electricity_usd_per_kwh=float(overrides["electricity_per_kwh"]))
    return sheet
