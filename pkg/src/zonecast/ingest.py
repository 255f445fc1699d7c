"""Telemetry and device-metadata ingestion.

The interchange surface is deliberately plain:

- telemetry CSV, one reading per row: ``timestamp,device_id,measurement,value``
  (RFC 3339 UTC timestamps, decimal values);
- device metadata CSV: ``device_id,name,namespace,device_type,zone_id,floor,x,y``;
- a canonical store with one CSV per (device, kind) plus a JSON manifest
  carrying step, start, length, and missing counts.

Rows with measurement names outside the nine ingested kinds are skipped and
counted, not errors: the raw building export carries many more channels.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone, tzinfo
from enum import Enum
from pathlib import Path

import numpy as np

from .series import (
    DeviceMeta,
    DeviceType,
    MeasurementKind,
    TimeSeries,
    format_rfc3339,
    missing_ratio,
    parse_rfc3339,
)

RAW_STEP_SECONDS = 300
MALFORMED_HARD_LIMIT = 0.10

_KNOWN_MEASUREMENTS = {k.value for k in MeasurementKind}


@dataclass(frozen=True)
class RawRecord:
    timestamp: int
    device_id: str
    measurement: MeasurementKind
    value: float


@dataclass
class ParseReport:
    path: str
    n_rows: int = 0
    n_accepted: int = 0
    n_skipped_unknown: int = 0
    n_malformed: int = 0
    errors: list = field(default_factory=list)  # (line_no, message), capped

    MAX_ERRORS_KEPT = 50

    def add_error(self, line_no: int, message: str) -> None:
        self.n_malformed += 1
        if len(self.errors) < self.MAX_ERRORS_KEPT:
            self.errors.append((line_no, message))


def parse_long_csv(path, default_tz: tzinfo = timezone.utc) -> tuple[list[RawRecord], ParseReport]:
    """Parse one telemetry file.

    Malformed rows (bad timestamp or value) are collected with line numbers;
    more than 10% malformed is a hard failure.
    """
    path = Path(path)
    report = ParseReport(path=str(path))
    records: list[RawRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["timestamp", "device_id", "measurement", "value"]:
            raise ValueError(f"{path}: expected header 'timestamp,device_id,measurement,value'")
        ts_cache: dict[str, int] = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            report.n_rows += 1
            if len(row) != 4:
                report.add_error(line_no, f"expected 4 fields, got {len(row)}")
                continue
            ts_text, device_id, measurement, value_text = row
            if measurement not in _KNOWN_MEASUREMENTS:
                report.n_skipped_unknown += 1
                continue
            ts = ts_cache.get(ts_text)
            if ts is None:
                try:
                    ts = parse_rfc3339(ts_text, default_tz)
                except ValueError:
                    report.add_error(line_no, f"bad timestamp {ts_text!r}")
                    continue
                ts_cache[ts_text] = ts
            try:
                value = float(value_text)
            except ValueError:
                report.add_error(line_no, f"bad value {value_text!r}")
                continue
            if not np.isfinite(value):
                report.add_error(line_no, f"non-finite value {value_text!r}")
                continue
            records.append(RawRecord(ts, device_id, MeasurementKind(measurement), value))
            report.n_accepted += 1
    if report.n_rows and report.n_malformed / report.n_rows > MALFORMED_HARD_LIMIT:
        raise ValueError(
            f"{path}: {report.n_malformed}/{report.n_rows} rows malformed "
            f"(limit {MALFORMED_HARD_LIMIT:.0%})"
        )
    return records, report


@dataclass
class BuildReport:
    duplicate_overwrites: int = 0
    per_key: dict = field(default_factory=dict)  # (device_id, kind) -> count


def build_series(
    records, step_seconds: int = RAW_STEP_SECONDS
) -> tuple[dict, BuildReport]:
    """Bucket records onto uniform grids, one series per (device, kind).

    Grid points with no record stay missing; two records in one bucket keep
    the later one (file order) and bump the duplicate counter.
    """
    groups: dict[tuple[str, MeasurementKind], list[RawRecord]] = {}
    for rec in records:
        groups.setdefault((rec.device_id, rec.measurement), []).append(rec)
    report = BuildReport()
    series: dict[tuple[str, MeasurementKind], TimeSeries] = {}
    for key in sorted(groups, key=lambda k: (k[0], k[1].value)):
        recs = groups[key]
        t_min = min(r.timestamp for r in recs)
        t_max = max(r.timestamp for r in recs)
        start = t_min - t_min % step_seconds
        n = (t_max - start) // step_seconds + 1
        values = np.full(n, np.nan)
        filled = np.zeros(n, dtype=bool)
        dups = 0
        for r in recs:  # file order: last write wins
            i = (r.timestamp - start) // step_seconds
            if filled[i]:
                dups += 1
            values[i] = r.value
            filled[i] = True
        if dups:
            report.per_key[key] = dups
            report.duplicate_overwrites += dups
        series[key] = TimeSeries(key[0], key[1], step_seconds, int(start), values)
    return series, report


def parse_device_meta(path) -> list[DeviceMeta]:
    path = Path(path)
    expected = ["device_id", "name", "namespace", "device_type", "zone_id", "floor", "x", "y"]
    out: list[DeviceMeta] = []
    seen: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 8:
                raise ValueError(f"{path}:{line_no}: expected 8 fields, got {len(row)}")
            device_id, name, namespace, dtype, zone_id, floor, x, y = [f.strip() for f in row]
            if device_id in seen:
                raise ValueError(f"{path}:{line_no}: duplicate device_id {device_id!r}")
            seen.add(device_id)
            try:
                device_type = DeviceType(dtype)
            except ValueError:
                raise ValueError(f"{path}:{line_no}: unknown device_type {dtype!r}") from None
            out.append(
                DeviceMeta(
                    device_id=device_id,
                    name=name,
                    namespace=namespace,
                    device_type=device_type,
                    zone_id=zone_id,
                    floor=int(floor),
                    x=float(x),
                    y=float(y),
                )
            )
    return out


# ---------------------------------------------------------------------------
# split validation

class SplitLabel(Enum):
    TRAIN_2022 = "train_2022"
    VAL_2022 = "val_2022"
    TRAIN_2023 = "train_2023"
    VAL_2023 = "val_2023"
    TEST_2024 = "test_2024"


def _epoch(y: int, m: int, d: int) -> int:
    return int(datetime(y, m, d, tzinfo=timezone.utc).timestamp())


SPLIT_CALENDAR = {
    SplitLabel.TRAIN_2022: (_epoch(2022, 1, 1), _epoch(2022, 7, 1)),
    SplitLabel.VAL_2022: (_epoch(2022, 7, 1), _epoch(2023, 1, 1)),
    SplitLabel.TRAIN_2023: (_epoch(2023, 1, 1), _epoch(2023, 7, 1)),
    SplitLabel.VAL_2023: (_epoch(2023, 7, 1), _epoch(2024, 1, 1)),
    SplitLabel.TEST_2024: (_epoch(2024, 1, 1), _epoch(2024, 7, 1)),
}


@dataclass
class DatasetManifest:
    split_label: SplitLabel
    files: list
    row_count: int
    device_count: int


@dataclass
class ValidationReport:
    split_label: SplitLabel
    violations: list  # (device_id, kind_name, timestamp) outside the calendar range
    violation_count: int
    missing_ratios: dict  # device_id -> worst channel missing ratio

    MAX_KEPT = 100

    @property
    def ok(self) -> bool:
        return self.violation_count == 0


def validate_split(manifest: DatasetManifest, series: dict) -> ValidationReport:
    """Check every timestamp against the split's calendar range."""
    lo, hi = SPLIT_CALENDAR[manifest.split_label]
    violations = []
    count = 0
    ratios: dict[str, float] = {}
    for (device_id, kind), s in sorted(series.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        ratios[device_id] = max(ratios.get(device_id, 0.0), missing_ratio(s))
        ts = s.timestamps()
        bad = ts[(ts < lo) | (ts >= hi)]
        count += bad.size
        for t in bad[: ValidationReport.MAX_KEPT]:
            if len(violations) < ValidationReport.MAX_KEPT:
                violations.append((device_id, kind.value, int(t)))
    return ValidationReport(
        split_label=manifest.split_label,
        violations=violations,
        violation_count=count,
        missing_ratios=ratios,
    )


# ---------------------------------------------------------------------------
# canonical store

STORE_MANIFEST = "manifest.json"


def _series_filename(device_id: str, kind: MeasurementKind) -> str:
    return f"{device_id}__{kind.value}.csv"


def write_canonical(series: dict, store_dir) -> None:
    """One CSV per (device, kind) plus manifest.json; values round-trip
    bit-exactly (repr) and missing entries are written as empty fields."""
    store = Path(store_dir)
    store.mkdir(parents=True, exist_ok=True)
    entries = []
    ts_cache: dict[tuple[int, int, int], list[str]] = {}
    for key in sorted(series, key=lambda k: (k[0], k[1].value)):
        s = series[key]
        grid_key = (s.start, s.step_seconds, len(s))
        stamps = ts_cache.get(grid_key)
        if stamps is None:
            stamps = [format_rfc3339(t) for t in s.timestamps()]
            ts_cache[grid_key] = stamps
        fname = _series_filename(*key)
        lines = ["timestamp,value"]
        vals = s.values
        for i in range(len(s)):
            v = vals[i]
            lines.append(f"{stamps[i]},{'' if np.isnan(v) else repr(float(v))}")
        (store / fname).write_text("\n".join(lines) + "\n")
        entries.append(
            {
                "device_id": key[0],
                "kind": key[1].value,
                "step_seconds": s.step_seconds,
                "start": s.start,
                "length": len(s),
                "missing": int(np.isnan(vals).sum()),
                "path": fname,
            }
        )
    (store / STORE_MANIFEST).write_text(json.dumps({"series": entries}, indent=1))


def read_canonical(store_dir) -> dict:
    store = Path(store_dir)
    manifest_path = store / STORE_MANIFEST
    if not manifest_path.exists():
        raise FileNotFoundError(f"canonical store manifest not found: {manifest_path}")
    doc = json.loads(manifest_path.read_text())
    series: dict[tuple[str, MeasurementKind], TimeSeries] = {}
    for e in doc["series"]:
        kind = MeasurementKind(e["kind"])
        values = np.full(e["length"], np.nan)
        with open(store / e["path"], newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            for i, row in enumerate(reader):
                if row[1] != "":
                    values[i] = float(row[1])
        series[(e["device_id"], kind)] = TimeSeries(
            e["device_id"], kind, e["step_seconds"], e["start"], values
        )
    return series
