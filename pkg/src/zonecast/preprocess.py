"""Outlier removal, gap imputation, and downsampling.

The per-series pipeline order is fixed: remove_outliers -> impute ->
downsample. Outliers fall to physical bounds first, then to a rolling
median/MAD test; imputation fills only short gaps so long dropouts stay
missing and exclude their windows from training instead of fabricating
dynamics.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .series import MeasurementKind, TimeSeries, resample_mean

MAD_FLOOR = 1e-6

# The rolling-MAD stage only makes sense for continuously varying measured
# channels. Command channels (setpoints) are legitimate step functions whose
# robust spread is zero, so with the MAD floor every step transition would be
# flagged; VAV flow sensors are nearly as step-like (parked at minimum flow
# for long stretches), so they rely on the physical bounds alone.
DEFAULT_MAD_KINDS = frozenset(
    {
        MeasurementKind.ZONE_AIR_TEMPERATURE_SENSOR,
        MeasurementKind.OUTSIDE_AIR_TEMPERATURE_SENSOR,
    }
)

# Physical plausibility bounds per channel; deliberately loose, and
# config-overridable. Temperatures degF, flow kg/s, pressure Pa.
DEFAULT_BOUNDS = {
    MeasurementKind.ZONE_AIR_TEMPERATURE_SENSOR: (-30.0, 130.0),
    MeasurementKind.ZONE_AIR_COOLING_SETPOINT: (-30.0, 130.0),
    MeasurementKind.ZONE_AIR_HEATING_SETPOINT: (-30.0, 130.0),
    MeasurementKind.SUPPLY_AIR_FLOWRATE_SENSOR: (0.0, 20.0),
    MeasurementKind.SUPPLY_AIR_FLOWRATE_SETPOINT: (0.0, 20.0),
    MeasurementKind.SUPPLY_AIR_PRESSURE_SETPOINT: (0.0, 2000.0),
    MeasurementKind.SUPPLY_AIR_TEMPERATURE_SETPOINT: (-30.0, 130.0),
    MeasurementKind.SUPPLY_WATER_TEMPERATURE_SETPOINT: (-30.0, 130.0),
    MeasurementKind.OUTSIDE_AIR_TEMPERATURE_SENSOR: (-30.0, 130.0),
}


@dataclass
class PreprocessConfig:
    max_gap_steps: int = 6
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    mad_window: int = 96
    mad_k: float = 6.0
    target_step_seconds: int = 900
    mad_kinds: frozenset = DEFAULT_MAD_KINDS

    def __post_init__(self):
        if self.max_gap_steps < 1:
            raise ValueError("max_gap_steps must be >= 1")
        if self.mad_k <= 0:
            raise ValueError("mad_k must be positive")
        if self.target_step_seconds not in (900, 3600):
            raise ValueError("target_step_seconds must be 900 or 3600")
        for kind, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ValueError(f"bounds for {kind.value} are not ordered: ({lo}, {hi})")


@dataclass
class OutlierReport:
    device_id: str
    kind: MeasurementKind
    bound_count: int = 0
    mad_count: int = 0
    imputed_count: int = 0


def _rolling_nanmedian(x: np.ndarray, window: int) -> np.ndarray:
    """Centered rolling median ignoring NaN; windows shrink at the edges."""
    half = window // 2
    padded = np.concatenate([np.full(half, np.nan), x, np.full(window - half - 1, np.nan)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)  # all-NaN windows
        return np.nanmedian(sliding_window_view(padded, window), axis=1)


def remove_outliers(s: TimeSeries, cfg: PreprocessConfig) -> tuple[TimeSeries, OutlierReport]:
    """Mask values outside physical bounds, then rolling median/MAD outliers.

    The MAD stage applies only to kinds in cfg.mad_kinds (measured channels)."""
    if s.kind not in cfg.bounds:
        raise ValueError(f"no bounds configured for {s.kind.value}")
    lo, hi = cfg.bounds[s.kind]
    report = OutlierReport(device_id=s.device_id, kind=s.kind)
    v = s.values.copy()
    present = np.isfinite(v)
    out_of_bounds = present & ((v < lo) | (v > hi))
    report.bound_count = int(out_of_bounds.sum())
    v[out_of_bounds] = np.nan
    if s.kind not in cfg.mad_kinds:
        return s.with_values(v), report

    med = _rolling_nanmedian(v, cfg.mad_window)
    dev = np.abs(v - med)
    mad = _rolling_nanmedian(dev, cfg.mad_window)
    mad = np.maximum(mad, MAD_FLOOR)
    with np.errstate(invalid="ignore"):
        flagged = np.isfinite(v) & np.isfinite(med) & (dev > cfg.mad_k * mad)
    report.mad_count = int(flagged.sum())
    v[flagged] = np.nan
    return s.with_values(v), report


def impute(s: TimeSeries, cfg: PreprocessConfig) -> TimeSeries:
    """Fill gaps up to max_gap_steps: linear interpolation inside, nearest
    value at the edges. Longer gaps stay missing; present values never change."""
    v = s.values.copy()
    present = np.isfinite(v)
    if not present.any():
        raise ValueError(f"series {s.device_id}/{s.kind.value} is entirely missing")
    pos = np.flatnonzero(present)
    interp = np.interp(np.arange(v.size), pos, v[pos])  # edges clamp to nearest
    gap = ~present
    boundaries = np.diff(gap.astype(np.int8))
    starts = list(np.flatnonzero(boundaries == 1) + 1)
    ends = list(np.flatnonzero(boundaries == -1) + 1)
    if gap[0]:
        starts.insert(0, 0)
    if gap[-1]:
        ends.append(v.size)
    for a, b in zip(starts, ends):
        if b - a <= cfg.max_gap_steps:
            v[a:b] = interp[a:b]
    return s.with_values(v)


def downsample(s: TimeSeries, cfg: PreprocessConfig) -> TimeSeries:
    if s.step_seconds != 300:
        raise ValueError(f"downsample expects a 5-minute series, got step {s.step_seconds}")
    return resample_mean(s, cfg.target_step_seconds)


def clean_series(s: TimeSeries, cfg: PreprocessConfig) -> tuple[TimeSeries, OutlierReport]:
    """Full per-series pass: remove_outliers -> impute -> downsample."""
    cleaned, report = remove_outliers(s, cfg)
    missing_before = int(np.isnan(cleaned.values).sum())
    imputed = impute(cleaned, cfg)
    report.imputed_count = missing_before - int(np.isnan(imputed.values).sum())
    return downsample(imputed, cfg), report


def write_outlier_report(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["device_id", "kind", "bound_count", "mad_count", "imputed_count"])
        for r in sorted(reports, key=lambda r: (r.device_id, r.kind.value)):
            w.writerow([r.device_id, r.kind.value, r.bound_count, r.mad_count, r.imputed_count])
