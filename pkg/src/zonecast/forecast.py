"""Recursive multi-step forecasting over a zone frame.

Inside the forecast window, target lags come from the model's own previous
predictions; exogenous channels are read from recorded actuals over the whole
horizon (perfect-foresight convention for future setpoints and weather).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .features import TARGET_KIND, ForecastConfig, resolve_exogenous
from .metrics import mae, rmse
from .series import ZoneFrame, format_rfc3339


@dataclass
class ForecastResult:
    zone_id: str
    start_index: int
    horizon_steps: int
    predicted: np.ndarray  # degF
    actual: np.ndarray  # degF
    mae: float
    rmse: float
    start_timestamp: int = 0


def recursive_forecast(
    model,
    frame: ZoneFrame,
    cfg: ForecastConfig,
    start_index: int,
    horizon: int | None = None,
) -> ForecastResult:
    """Iterate one-step predictions for ``horizon`` steps from ``start_index``.

    ``horizon`` defaults to cfg.horizon_steps; model selection passes shorter
    horizons when a validation block cannot hold a full window.
    """
    L = cfg.lookback_steps
    H = cfg.horizon_steps if horizon is None else horizon
    if start_index < L:
        raise ValueError(f"start_index {start_index} < lookback {L}")
    if start_index + H > frame.n_rows:
        raise ValueError(
            f"horizon {H} from index {start_index} exceeds frame of {frame.n_rows} rows"
        )
    exogs = resolve_exogenous(frame, cfg)
    cols = {k: frame.column(k) for k in exogs}
    actual = frame.column(TARGET_KIND)
    work = actual.copy()  # predictions overwrite rows inside the window
    n_feat = L + len(exogs) * (L + 1)
    row = np.empty(n_feat)
    for h in range(H):
        t = start_index + h
        row[:L] = work[t - L : t]
        off = L
        for kind in exogs:
            col = cols[kind]
            row[off : off + L] = col[t - L : t]
            row[off + L] = col[t]
            off += L + 1
        pred = float(model.predict_row(row))
        if not np.isfinite(pred):
            raise ValueError(f"model produced a non-finite prediction at step {h}")
        work[t] = pred
    predicted = work[start_index : start_index + H].copy()
    truth = actual[start_index : start_index + H]
    return ForecastResult(
        zone_id=frame.zone_id,
        start_index=start_index,
        horizon_steps=H,
        predicted=predicted,
        actual=truth.copy(),
        mae=mae(predicted, truth),
        rmse=rmse(predicted, truth),
        start_timestamp=int(frame.start + start_index * frame.step_seconds),
    )


def window_starts(n_rows: int, lookback: int, horizon: int) -> list[int]:
    """Consecutive full-horizon forecast origins after the lookback warmup."""
    starts = []
    s = lookback
    while s + horizon <= n_rows:
        starts.append(s)
        s += horizon
    return starts


def write_forecast_trace(result: ForecastResult, step_seconds: int, path) -> None:
    """Plot-ready trace: timestamp,actual_f,predicted_f."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "actual_f", "predicted_f"])
        for i in range(result.horizon_steps):
            ts = result.start_timestamp + i * step_seconds
            w.writerow([format_rfc3339(ts), repr(float(result.actual[i])), repr(float(result.predicted[i]))])
