"""Canonical time-series and zone-frame types.

Every sensor stream is a uniformly spaced series of floats with NaN marking
missing readings; timestamps are implicit (``start + i * step_seconds``, UTC
epoch seconds). Zone frames are row-aligned multivariate views built from
several streams after imputation. All types are immutable after construction
and all operations are pure functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone, tzinfo
from enum import Enum
from typing import ClassVar, Iterable, Mapping

import numpy as np

MISSING = float("nan")

ALLOWED_STEPS = (300, 900, 3600)


class MeasurementKind(Enum):
    """The nine telemetry channels the pipeline ingests.

    The enum order is the canonical channel order everywhere (frames,
    feature layouts, reports).
    """

    ZONE_AIR_TEMPERATURE_SENSOR = "zone_air_temperature_sensor"
    ZONE_AIR_COOLING_SETPOINT = "zone_air_cooling_setpoint"
    ZONE_AIR_HEATING_SETPOINT = "zone_air_heating_setpoint"
    SUPPLY_AIR_FLOWRATE_SENSOR = "supply_air_flowrate_sensor"
    SUPPLY_AIR_FLOWRATE_SETPOINT = "supply_air_flowrate_setpoint"
    SUPPLY_AIR_PRESSURE_SETPOINT = "supply_air_pressure_setpoint"
    SUPPLY_AIR_TEMPERATURE_SETPOINT = "supply_air_temperature_setpoint"
    SUPPLY_WATER_TEMPERATURE_SETPOINT = "supply_water_temperature_setpoint"
    OUTSIDE_AIR_TEMPERATURE_SENSOR = "outside_air_temperature_sensor"

    @classmethod
    def from_name(cls, name: str) -> "MeasurementKind":
        try:
            return cls(name)
        except ValueError:
            raise ValueError(f"unknown measurement kind: {name!r}") from None


class DeviceType(Enum):
    VAV = "VAV"
    AHU = "AHU"
    WEATHER = "WEATHER"


@dataclass(frozen=True)
class DeviceMeta:
    """One row of the device-metadata table."""

    device_id: str
    name: str
    namespace: str
    device_type: DeviceType
    zone_id: str
    floor: int
    x: float
    y: float

    def __post_init__(self):
        if self.device_type is DeviceType.VAV and not self.zone_id:
            raise ValueError(f"VAV device {self.device_id!r} has no zone_id")


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly spaced single-channel stream for one device.

    ``values`` is a float64 array; NaN entries are missing readings.
    Present values must be finite.
    """

    device_id: str
    kind: MeasurementKind
    step_seconds: int
    start: int
    values: np.ndarray

    def __post_init__(self):
        if self.step_seconds not in ALLOWED_STEPS:
            raise ValueError(f"step_seconds must be one of {ALLOWED_STEPS}, got {self.step_seconds}")
        if self.start < 0:
            raise ValueError("start must be a non-negative epoch timestamp")
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("values must be a non-empty 1-D array")
        if np.isinf(arr).any():
            raise ValueError("series contains non-finite present values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> int:
        """Timestamp of the last sample (inclusive)."""
        return self.start + (len(self) - 1) * self.step_seconds

    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(len(self), dtype=np.int64) * self.step_seconds

    def with_values(self, values: np.ndarray) -> "TimeSeries":
        return TimeSeries(self.device_id, self.kind, self.step_seconds, self.start, values)


@dataclass(frozen=True)
class ZoneFrame:
    """Time-aligned multivariate matrix for one zone.

    Frames are built only after imputation: no missing entries allowed.
    """

    zone_id: str
    step_seconds: int
    start: int
    channels: Mapping[MeasurementKind, np.ndarray] = field(default_factory=dict)

    REQUIRED: ClassVar[tuple] = (
        MeasurementKind.ZONE_AIR_TEMPERATURE_SENSOR,
        MeasurementKind.ZONE_AIR_COOLING_SETPOINT,
        MeasurementKind.ZONE_AIR_HEATING_SETPOINT,
        MeasurementKind.SUPPLY_AIR_FLOWRATE_SENSOR,
        MeasurementKind.OUTSIDE_AIR_TEMPERATURE_SENSOR,
    )

    def __post_init__(self):
        if not self.channels:
            raise ValueError("frame needs at least one channel")
        lengths = set()
        cols = {}
        for kind, col in self.channels.items():
            arr = np.asarray(col, dtype=np.float64)
            if not np.isfinite(arr).all():
                raise ValueError(f"channel {kind.value} contains missing values")
            arr = arr.copy()
            arr.flags.writeable = False
            cols[kind] = arr
            lengths.add(arr.size)
        if len(lengths) != 1:
            raise ValueError(f"channel lengths differ: {sorted(lengths)}")
        object.__setattr__(self, "channels", cols)

    @property
    def n_rows(self) -> int:
        return next(iter(self.channels.values())).size

    def column(self, kind: MeasurementKind) -> np.ndarray:
        return self.channels[kind]

    def timestamps(self) -> np.ndarray:
        return self.start + np.arange(self.n_rows, dtype=np.int64) * self.step_seconds

    def slice_rows(self, lo: int, hi: int) -> "ZoneFrame":
        """Contiguous row slice [lo, hi) as a new frame."""
        if not (0 <= lo < hi <= self.n_rows):
            raise ValueError(f"bad row slice [{lo}, {hi}) for frame of {self.n_rows} rows")
        return ZoneFrame(
            zone_id=self.zone_id,
            step_seconds=self.step_seconds,
            start=self.start + lo * self.step_seconds,
            channels={k: v[lo:hi] for k, v in self.channels.items()},
        )


# ---------------------------------------------------------------------------
# unit conversions

def fahrenheit_to_celsius(t):
    """(t - 32) * 5/9; accepts a float or an array."""
    arr = np.asarray(t, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("temperature must be finite")
    out = (arr - 32.0) * 5.0 / 9.0
    return float(out) if np.isscalar(t) or arr.ndim == 0 else out


def celsius_to_fahrenheit(t):
    arr = np.asarray(t, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("temperature must be finite")
    out = arr * 9.0 / 5.0 + 32.0
    return float(out) if np.isscalar(t) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# timestamps

def parse_rfc3339(text: str, default_tz: tzinfo = timezone.utc) -> int:
    """RFC 3339 string to UTC epoch seconds.

    Naive timestamps are interpreted in ``default_tz`` (the dataset's declared
    timezone; UTC unless configured otherwise).
    """
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=default_tz)
    return int(dt.timestamp())


def format_rfc3339(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# operations

def missing_ratio(s: TimeSeries) -> float:
    """Fraction of missing entries, in [0, 1]."""
    return float(np.isnan(s.values).sum()) / len(s)


def resample_mean(s: TimeSeries, target_step: int) -> TimeSeries:
    """Downsample by bucket means on the epoch-aligned target grid.

    Buckets ignore missing entries; a bucket with no present value stays
    missing. The output start is the boundary of the bucket containing the
    first sample, so nested resampling composes on complete data.
    """
    if target_step % s.step_seconds != 0:
        raise ValueError(
            f"target step {target_step} is not a multiple of series step {s.step_seconds}"
        )
    if target_step <= s.step_seconds:
        raise ValueError("target step must be coarser than the series step")
    first_bucket = s.start // target_step
    last_bucket = s.end // target_step
    n_buckets = int(last_bucket - first_bucket + 1)
    idx = (s.timestamps() // target_step - first_bucket).astype(np.int64)
    present = np.isfinite(s.values)
    sums = np.bincount(idx[present], weights=s.values[present], minlength=n_buckets)
    counts = np.bincount(idx[present], minlength=n_buckets)
    out = np.full(n_buckets, np.nan)
    np.divide(sums, counts, out=out, where=counts > 0)
    return TimeSeries(s.device_id, s.kind, target_step, int(first_bucket * target_step), out)


def align_channels(
    series: Iterable[TimeSeries],
    required: Iterable[MeasurementKind],
    zone_id: str = "",
) -> ZoneFrame:
    """Row-align several imputed series into one frame over their common range.

    All series must share the step and sit on the same time grid. Raises if a
    required kind is absent, the overlap is empty, or any value inside the
    overlap is still missing.
    """
    series = list(series)
    required = set(required)
    if not series:
        raise ValueError("no series given")
    by_kind = {}
    for s in series:
        if s.kind in by_kind:
            raise ValueError(f"duplicate channel {s.kind.value}")
        by_kind[s.kind] = s
    absent = required - set(by_kind)
    if absent:
        names = ", ".join(sorted(k.value for k in absent))
        raise ValueError(f"missing required channels: {names}")
    steps = {s.step_seconds for s in series}
    if len(steps) != 1:
        raise ValueError(f"series steps differ: {sorted(steps)}")
    step = steps.pop()
    if len({s.start % step for s in series}) != 1:
        raise ValueError("empty overlap: series grids are not aligned")
    t0 = max(s.start for s in series)
    t1 = min(s.end for s in series)
    if t1 < t0:
        raise ValueError("empty overlap")
    n = (t1 - t0) // step + 1
    channels = {}
    for kind in MeasurementKind:
        if kind not in by_kind:
            continue
        s = by_kind[kind]
        lo = (t0 - s.start) // step
        col = s.values[lo : lo + n]
        if np.isnan(col).any():
            raise ValueError(f"channel {kind.value} has missing values inside the overlap")
        channels[kind] = col
    return ZoneFrame(zone_id=zone_id, step_seconds=step, start=int(t0), channels=channels)


def slice_windows(frame: ZoneFrame, window_seconds: int) -> list[ZoneFrame]:
    """Non-overlapping consecutive windows; the trailing remainder is dropped."""
    if window_seconds <= 0 or window_seconds % frame.step_seconds != 0:
        raise ValueError(
            f"window {window_seconds}s is not a positive multiple of step {frame.step_seconds}s"
        )
    rows = window_seconds // frame.step_seconds
    count = frame.n_rows // rows
    return [frame.slice_rows(i * rows, (i + 1) * rows) for i in range(count)]
