"""Autoregressive design matrices and the calendar train/val/test split.

Each sample predicts the zone temperature one step ahead from L past lags of
the target plus, per exogenous channel, L past lags and the current-step
value (the controller knows its own setpoints at time t). Multi-step
forecasts come from feeding predictions back in, not from multi-output rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .series import MeasurementKind, ZoneFrame

TARGET_KIND = MeasurementKind.ZONE_AIR_TEMPERATURE_SENSOR

# Exogenous channel order; the pressure setpoint participates only when the
# frame carries it (it is an AHU-level channel some sites lack).
DEFAULT_EXOGENOUS = (
    MeasurementKind.OUTSIDE_AIR_TEMPERATURE_SENSOR,
    MeasurementKind.ZONE_AIR_COOLING_SETPOINT,
    MeasurementKind.ZONE_AIR_HEATING_SETPOINT,
    MeasurementKind.SUPPLY_AIR_FLOWRATE_SENSOR,
    MeasurementKind.SUPPLY_AIR_PRESSURE_SETPOINT,
)

WEEK_SECONDS = 7 * 86400


@dataclass(frozen=True)
class ForecastConfig:
    """Lookback/horizon geometry at one working step."""

    step_seconds: int
    lookback_steps: int
    horizon_steps: int
    exogenous: tuple = DEFAULT_EXOGENOUS

    def __post_init__(self):
        if self.lookback_steps < 1 or self.horizon_steps < 1:
            raise ValueError("lookback and horizon must be >= 1 steps")

    @classmethod
    def for_step(cls, step_seconds: int, lookback_steps=None, horizon_steps=None) -> "ForecastConfig":
        """Defaults: one week of lookback, two weeks of horizon."""
        return cls(
            step_seconds=step_seconds,
            lookback_steps=lookback_steps or WEEK_SECONDS // step_seconds,
            horizon_steps=horizon_steps or 2 * WEEK_SECONDS // step_seconds,
        )


@dataclass
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    sample_timestamps: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]


def resolve_exogenous(frame: ZoneFrame, cfg: ForecastConfig) -> tuple:
    """Configured exogenous kinds actually present in the frame, in order."""
    missing = [k for k in ZoneFrame.REQUIRED if k not in frame.channels]
    if missing:
        raise ValueError(f"frame lacks required channels: {[k.value for k in missing]}")
    return tuple(k for k in cfg.exogenous if k in frame.channels)


def build_design(frame: ZoneFrame, cfg: ForecastConfig) -> DesignMatrix:
    """One-step-ahead supervised rows for every t in [L, n_rows)."""
    L = cfg.lookback_steps
    n = frame.n_rows
    if n <= L:
        raise ValueError(f"frame has {n} rows; need at least {L + 1} for lookback {L}")
    exogs = resolve_exogenous(frame, cfg)
    target = frame.column(TARGET_KIND)
    cols: list[np.ndarray] = []
    names: list[str] = []
    for lag in range(L, 0, -1):
        cols.append(target[L - lag : n - lag])
        names.append(f"{TARGET_KIND.value}[t-{lag}]")
    for kind in exogs:
        col = frame.column(kind)
        for lag in range(L, 0, -1):
            cols.append(col[L - lag : n - lag])
            names.append(f"{kind.value}[t-{lag}]")
        cols.append(col[L:])
        names.append(f"{kind.value}[t]")
    X = np.column_stack(cols)
    return DesignMatrix(
        X=X,
        y=target[L:].copy(),
        feature_names=names,
        sample_timestamps=frame.timestamps()[L:],
    )


def design_row(frame_cols: dict, t: int, L: int, exogs: tuple, target: np.ndarray) -> np.ndarray:
    """Feature row for time index t; mirrors build_design's layout exactly."""
    parts = [target[t - L : t]]
    for kind in exogs:
        col = frame_cols[kind]
        parts.append(col[t - L : t])
        parts.append(col[t : t + 1])
    return np.concatenate(parts)


def export_design_csv(dm: DesignMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(dm.feature_names + ["target", "timestamp"])
        for i in range(dm.n_samples):
            w.writerow(
                [repr(v) for v in dm.X[i]] + [repr(dm.y[i]), int(dm.sample_timestamps[i])]
            )


# ---------------------------------------------------------------------------
# calendar split

def _epoch(year: int, month: int, day: int) -> int:
    return int(datetime(year, month, day, tzinfo=timezone.utc).timestamp())


# Half-open [start, end) ranges; a row exactly on a boundary belongs to the
# later set.
SPLIT_RANGES = {
    "train": ((_epoch(2022, 1, 1), _epoch(2022, 7, 1)), (_epoch(2023, 1, 1), _epoch(2023, 7, 1))),
    "val": ((_epoch(2022, 7, 1), _epoch(2023, 1, 1)), (_epoch(2023, 7, 1), _epoch(2024, 1, 1))),
    "test": ((_epoch(2024, 1, 1), _epoch(2024, 7, 1)),),
}


@dataclass
class SplitFrames:
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)


def _label_rows(ts: np.ndarray) -> np.ndarray:
    labels = np.full(ts.size, -1, dtype=np.int8)
    for i, name in enumerate(("train", "val", "test")):
        for lo, hi in SPLIT_RANGES[name]:
            labels[(ts >= lo) & (ts < hi)] = i
    return labels


def calendar_split(frames) -> SplitFrames:
    """First half of 2022/2023 to train, second halves to val, H1 2024 to test.

    Frames straddling a boundary are cut at it; rows outside every range are
    dropped.
    """
    out = SplitFrames()
    buckets = (out.train, out.val, out.test)
    for frame in frames:
        labels = _label_rows(frame.timestamps())
        i = 0
        n = frame.n_rows
        while i < n:
            j = i
            while j < n and labels[j] == labels[i]:
                j += 1
            if labels[i] >= 0:
                buckets[labels[i]].append(frame.slice_rows(i, j))
            i = j
    return out
