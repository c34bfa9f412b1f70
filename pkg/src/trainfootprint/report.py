"""Report documents and their text / CSV / JSON-lines rendering.

Display rounding happens only here: energy, emissions and dollars to whole
numbers (half away from zero), watts to two decimals. Machine formats carry
both the full-precision value and the rounded display value.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .cost import CostRange, PriceSheet, cloud_cost_range, electricity_cost
from .footprint import EnergyMix, FootprintConfig, Preset, PowerProfile, estimate_footprint
from .ledger import ScenarioCost

FORMATS = ("text", "csv", "jsonl")

CSV_COLUMNS = (
    "label",
    "hardware",
    "device_count",
    "watts",
    "hours",
    "kwh_pue",
    "co2e_lbs",
    "cloud_lower_usd",
    "cloud_upper_usd",
    "electricity_usd",
    "partial",
    "kwh_pue_display",
    "co2e_lbs_display",
    "cloud_lower_usd_display",
    "cloud_upper_usd_display",
    "electricity_usd_display",
)


def display_int(x: float) -> int:
    return int(Decimal(repr(float(x))).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ReportRow:
    label: str
    hardware: str | None = None
    device_count: int | None = None
    watts: float | None = None
    hours: float | None = None
    kwh_pue: float | None = None
    co2e_lbs: float | None = None
    cloud: CostRange | None = None
    electricity_usd: float | None = None
    partial: bool = False

    def display(self) -> dict[str, int | None]:
        def r(x):
            return None if x is None else display_int(x)

        return {
            "kwh_pue": r(self.kwh_pue),
            "co2e_lbs": r(self.co2e_lbs),
            "cloud_lower_usd": r(self.cloud.lower_usd) if self.cloud else None,
            "cloud_upper_usd": r(self.cloud.upper_usd) if self.cloud else None,
            "electricity_usd": r(self.electricity_usd),
        }


@dataclass(frozen=True)
class ReportDocument:
    title: str
    rows: tuple[ReportRow, ...]
    provenance: tuple[tuple[str, str], ...] = ()
    summary: tuple[tuple[str, str], ...] = ()
    notes: tuple[str, ...] = field(default=())


def provenance_for(config: FootprintConfig, sheet: PriceSheet, **extra: object) -> tuple[tuple[str, str], ...]:
    items = [
        ("pue", repr(config.pue)),
        ("co2e_lbs_per_kwh", repr(config.co2e_lbs_per_kwh)),
        ("price_sheet", sheet.source),
        ("electricity_usd_per_kwh", repr(sheet.electricity_usd_per_kwh)),
    ]
    items += [(k, str(v)) for k, v in extra.items()]
    return tuple(items)


# ---------------------------------------------------------------------------
# Row builders


def row_from_preset(
    preset: Preset, config: FootprintConfig | None = None, sheet: PriceSheet | None = None
) -> ReportRow:
    config = config or FootprintConfig()
    sheet = sheet or PriceSheet()
    kwh = co2 = elec = None
    if preset.watts is not None:
        est = estimate_footprint(PowerProfile.from_total(preset.watts), preset.hours, config)
        kwh, co2 = est.kwh_pue, est.co2e_lbs
        elec = electricity_cost(kwh, sheet)
    return ReportRow(
        label=preset.label,
        hardware=preset.hardware,
        device_count=preset.unit_count,
        watts=preset.watts,
        hours=preset.hours,
        kwh_pue=kwh,
        co2e_lbs=co2,
        cloud=cloud_cost_range(preset.hardware, preset.unit_count, preset.hours, sheet),
        electricity_usd=elec,
    )


def row_from_scenario(s: ScenarioCost, hardware: str | None = None) -> ReportRow:
    return ReportRow(
        label=s.label,
        hardware=hardware,
        device_count=1,
        watts=s.watts,
        hours=s.device_hours,
        kwh_pue=s.kwh_pue,
        co2e_lbs=s.co2e_lbs,
        cloud=s.cloud,
        electricity_usd=s.electricity_usd,
    )


# ---------------------------------------------------------------------------
# Rendering


def _fmt_int(x: float | None) -> str:
    return "---" if x is None else f"{display_int(x):,}"


def _fmt_usd(x: float | None) -> str:
    return "---" if x is None else f"${display_int(x):,}"


def _fmt_watts(x: float | None) -> str:
    return "---" if x is None else f"{x:,.2f}"


def _fmt_hours(x: float | None) -> str:
    if x is None:
        return "---"
    if float(x).is_integer():
        return f"{int(x):,}"
    return f"{x:,.2f}".rstrip("0").rstrip(".")


def _hardware_cell(row: ReportRow) -> str:
    if row.hardware is None:
        return "---"
    return f"{row.hardware}x{row.device_count}" if row.device_count else row.hardware


def _table(header: Sequence[str], body: Sequence[Sequence[str]], numeric_from: int) -> list[str]:
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]

    def line(cells: Sequence[str]) -> str:
        parts = [
            c.ljust(w) if i < numeric_from else c.rjust(w)
            for i, (c, w) in enumerate(zip(cells, widths))
        ]
        return "  ".join(parts).rstrip()

    out = [line(header), "  ".join("-" * w for w in widths)]
    out += [line(r) for r in body]
    return out


def _render_text(doc: ReportDocument) -> str:
    header = (
        "Model",
        "Hardware",
        "Power (W)",
        "Hours",
        "kWh*PUE",
        "CO2e (lbs)",
        "Cloud compute cost",
        "Electricity",
    )
    body = []
    for r in doc.rows:
        cloud = "---" if r.cloud is None else f"{_fmt_usd(r.cloud.lower_usd)}-{_fmt_usd(r.cloud.upper_usd)}"
        body.append(
            (
                r.label + (" (partial)" if r.partial else ""),
                _hardware_cell(r),
                _fmt_watts(r.watts),
                _fmt_hours(r.hours),
                _fmt_int(r.kwh_pue),
                _fmt_int(r.co2e_lbs),
                cloud,
                _fmt_usd(r.electricity_usd),
            )
        )
    lines = [doc.title, ""]
    lines += _table(header, body, numeric_from=2)
    if doc.summary:
        lines += ["", "Summary"]
        width = max(len(k) for k, _ in doc.summary)
        lines += [f"  {k.ljust(width)}  {v}" for k, v in doc.summary]
    if doc.notes:
        lines += [""] + [f"note: {n}" for n in doc.notes]
    if doc.provenance:
        lines += ["", "Provenance"]
        width = max(len(k) for k, _ in doc.provenance)
        lines += [f"  {k.ljust(width)}  {v}" for k, v in doc.provenance]
    return "\n".join(lines) + "\n"


def _num(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def _row_cells(r: ReportRow) -> list[str]:
    d = r.display()
    return [
        r.label,
        r.hardware or "",
        _num(r.device_count),
        _num(r.watts),
        _num(r.hours),
        _num(r.kwh_pue),
        _num(r.co2e_lbs),
        _num(r.cloud.lower_usd) if r.cloud else "",
        _num(r.cloud.upper_usd) if r.cloud else "",
        _num(r.electricity_usd),
        "true" if r.partial else "false",
        _num(d["kwh_pue"]),
        _num(d["co2e_lbs"]),
        _num(d["cloud_lower_usd"]),
        _num(d["cloud_upper_usd"]),
        _num(d["electricity_usd"]),
    ]


def _render_csv(doc: ReportDocument) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in doc.rows:
        writer.writerow(_row_cells(r))
    return buf.getvalue()


def _render_jsonl(doc: ReportDocument) -> str:
    lines = []
    for r in doc.rows:
        obj = {
            "kind": "row",
            "label": r.label,
            "hardware": r.hardware,
            "device_count": r.device_count,
            "watts": r.watts,
            "hours": r.hours,
            "kwh_pue": r.kwh_pue,
            "co2e_lbs": r.co2e_lbs,
            "cloud_lower_usd": r.cloud.lower_usd if r.cloud else None,
            "cloud_upper_usd": r.cloud.upper_usd if r.cloud else None,
            "electricity_usd": r.electricity_usd,
            "partial": r.partial,
            "display": r.display(),
        }
        lines.append(json.dumps(obj, ensure_ascii=True))
    if doc.summary:
        lines.append(json.dumps({"kind": "summary", **dict(doc.summary)}, ensure_ascii=True))
    if doc.notes:
        lines.append(json.dumps({"kind": "notes", "notes": list(doc.notes)}, ensure_ascii=True))
    lines.append(
        json.dumps({"kind": "provenance", "title": doc.title, **dict(doc.provenance)}, ensure_ascii=True)
    )
    return "\n".join(lines) + "\n"


def render(doc: ReportDocument, fmt: str = "text") -> bytes:
    """Deterministic UTF-8 bytes for ``doc`` in ``text``, ``csv`` or ``jsonl``."""
    if fmt == "text":
        return _render_text(doc).encode("utf-8")
    if fmt == "csv":
        return _render_csv(doc).encode("utf-8")
    if fmt in ("jsonl", "json-lines"):
        return _render_jsonl(doc).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


def parse_csv(data: bytes | str) -> list[ReportRow]:
    """Inverse of the CSV rendering (display columns are recomputed, not read)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError("not a report CSV")

    def f(v: str) -> float | None:
        return float(v) if v else None

    rows = []
    for rec in reader:
        lower, upper = f(rec["cloud_lower_usd"]), f(rec["cloud_upper_usd"])
        rows.append(
            ReportRow(
                label=rec["label"],
                hardware=rec["hardware"] or None,
                device_count=int(rec["device_count"]) if rec["device_count"] else None,
                watts=f(rec["watts"]),
                hours=f(rec["hours"]),
                kwh_pue=f(rec["kwh_pue"]),
                co2e_lbs=f(rec["co2e_lbs"]),
                cloud=CostRange(lower, upper) if lower is not None else None,
                electricity_usd=f(rec["electricity_usd"]),
                partial=rec["partial"] == "true",
            )
        )
    return rows


def render_mixes(mixes: Iterable[EnergyMix], fmt: str = "text") -> bytes:
    mixes = list(mixes)
    cols = ("consumer", "renewable_pct", "gas_pct", "coal_pct", "nuclear_pct", "other_pct")

    def pct(x: float) -> str:
        return f"{x:g}"

    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for m in mixes:
            w.writerow([m.consumer, *(pct(getattr(m, c)) for c in cols[1:])])
        return buf.getvalue().encode("utf-8")
    if fmt in ("jsonl", "json-lines"):
        lines = [json.dumps({c: getattr(m, c) for c in cols}) for m in mixes]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "text":
        header = ("Consumer", "Renew.", "Gas", "Coal", "Nuc.", "Other")
        body = [(m.consumer, *(f"{pct(getattr(m, c))}%" for c in cols[1:])) for m in mixes]
        return ("\n".join(_table(header, body, numeric_from=1)) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")
