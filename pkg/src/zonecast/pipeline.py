"""End-to-end pipeline steps behind the CLI commands.

Each step reads and writes only the documented files under the configured
output directory:

    canonical/              raw 5-minute canonical store + manifest
    clean_<step>/           cleaned, downsampled store
    outlier_report_<step>.csv
    models_<step>/          model bank (bank_index.json + models/*.json)
    cv_scores_<step>.csv
    evaluation_<split>_<step>.csv, summary_<split>_<step>.json
    forecast_trace_<zone>_<step>.csv
    tariff.csv, mpc_trace.csv, baseline_trace.csv, mpc_summary.json
    report/
"""

from __future__ import annotations

import json
import shutil
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import RunConfig
from .features import ForecastConfig, SplitFrames, calendar_split
from .forecast import recursive_forecast, window_starts, write_forecast_trace
from .ingest import (
    build_series,
    parse_device_meta,
    parse_long_csv,
    read_canonical,
    write_canonical,
)
from .models import RegressorSpec
from .mpc import (
    MpcConfig,
    MpcPlant,
    MpcState,
    MpcZone,
    TariffSchedule,
    best_constant_baseline,
    load_tariff_csv,
    make_spike_tariff,
    receding_horizon,
    write_mpc_trace_csv,
    write_tariff_csv,
)
from .plant import PlantParams
from .preprocess import clean_series, write_outlier_report
from .rng import derive_seed
from .selection import (
    ModelBank,
    TscvPlan,
    evaluate_bank,
    load_bank,
    save_bank,
    select_model,
    write_cv_scores_csv,
    write_evaluation_csv,
    write_summary_json,
)
from .series import (
    DeviceType,
    MeasurementKind,
    TimeSeries,
    ZoneFrame,
    fahrenheit_to_celsius,
    parse_rfc3339,
)
from .synthetic import (
    DEVICE_META_FILE,
    deterministic_outside_temp_c,
    generate_synthetic,
    zone_physical_params,
)

VAV_KINDS = (
    MeasurementKind.ZONE_AIR_TEMPERATURE_SENSOR,
    MeasurementKind.ZONE_AIR_COOLING_SETPOINT,
    MeasurementKind.ZONE_AIR_HEATING_SETPOINT,
    MeasurementKind.SUPPLY_AIR_FLOWRATE_SENSOR,
)


def run_simulate(cfg: RunConfig) -> dict:
    return generate_synthetic(cfg.data_dir, cfg.synthetic_config())


def run_ingest(cfg: RunConfig) -> dict:
    data_dir = Path(cfg.data_dir)
    telemetry_files = sorted(data_dir.glob("telemetry*.csv"))
    if not telemetry_files:
        raise FileNotFoundError(f"no telemetry*.csv under {data_dir}")
    meta_path = data_dir / DEVICE_META_FILE
    if not meta_path.exists():
        raise FileNotFoundError(f"device metadata not found: {meta_path}")
    parse_device_meta(meta_path)  # validate early
    records = []
    reports = []
    for path in telemetry_files:
        recs, report = parse_long_csv(path)
        records.extend(recs)
        reports.append(report)
    series, build_report = build_series(records)
    store = Path(cfg.output_dir) / "canonical"
    write_canonical(series, store)
    summary = {
        "files": [r.path for r in reports],
        "rows": sum(r.n_rows for r in reports),
        "accepted": sum(r.n_accepted for r in reports),
        "skipped_unknown": sum(r.n_skipped_unknown for r in reports),
        "malformed": sum(r.n_malformed for r in reports),
        "duplicate_overwrites": build_report.duplicate_overwrites,
        "series": len(series),
        "store": str(store),
    }
    (Path(cfg.output_dir) / "ingest_report.json").write_text(json.dumps(summary, indent=1))
    return summary


def run_preprocess(cfg: RunConfig, step: int | None = None) -> dict:
    pp = cfg.preprocess_config(step_override=step)
    raw = read_canonical(Path(cfg.output_dir) / "canonical")
    cleaned = {}
    reports = []
    for key in sorted(raw, key=lambda k: (k[0], k[1].value)):
        out, report = clean_series(raw[key], pp)
        cleaned[key] = out
        reports.append(report)
    out_dir = Path(cfg.output_dir) / f"clean_{pp.target_step_seconds}"
    write_canonical(cleaned, out_dir)
    report_path = Path(cfg.output_dir) / f"outlier_report_{pp.target_step_seconds}.csv"
    write_outlier_report(reports, report_path)
    return {
        "step_seconds": pp.target_step_seconds,
        "series": len(cleaned),
        "store": str(out_dir),
        "outlier_report": str(report_path),
    }


# ---------------------------------------------------------------------------
# frame assembly

def aligned_segments(series_list, required, zone_id: str) -> list[ZoneFrame]:
    """Frames over every maximal contiguous stretch where all channels are
    present. Long unimputed gaps split the record; windows never span them."""
    series_list = list(series_list)
    steps = {s.step_seconds for s in series_list}
    if len(steps) != 1:
        raise ValueError(f"series steps differ: {sorted(steps)}")
    step = steps.pop()
    if len({s.start % step for s in series_list}) != 1:
        return []
    t0 = max(s.start for s in series_list)
    t1 = min(s.end for s in series_list)
    if t1 < t0:
        return []
    n = (t1 - t0) // step + 1
    cols = {}
    ok = np.ones(n, dtype=bool)
    for s in series_list:
        lo = (t0 - s.start) // step
        col = s.values[lo : lo + n]
        cols[s.kind] = col
        ok &= np.isfinite(col)
    frames = []
    i = 0
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j < n and ok[j]:
            j += 1
        frames.append(
            ZoneFrame(
                zone_id=zone_id,
                step_seconds=step,
                start=int(t0 + i * step),
                channels={k: v[i:j] for k, v in cols.items()},
            )
        )
        i = j
    return frames


def build_zone_frames(series: dict, meta_path) -> dict:
    """Per-zone frame lists from a cleaned store: the zone's VAV channels plus
    the site outside temperature and, when present, the AHU pressure setpoint."""
    meta = parse_device_meta(meta_path)
    weather_ids = [m.device_id for m in meta if m.device_type is DeviceType.WEATHER]
    ahu_ids = [m.device_id for m in meta if m.device_type is DeviceType.AHU]
    outside = None
    for dev in sorted(weather_ids):
        outside = series.get((dev, MeasurementKind.OUTSIDE_AIR_TEMPERATURE_SENSOR))
        if outside is not None:
            break
    pressure = None
    for dev in sorted(ahu_ids):
        pressure = series.get((dev, MeasurementKind.SUPPLY_AIR_PRESSURE_SETPOINT))
        if pressure is not None:
            break
    frames_by_zone: dict[str, list[ZoneFrame]] = {}
    for m in sorted(meta, key=lambda m: m.device_id):
        if m.device_type is not DeviceType.VAV:
            continue
        chans = [series.get((m.device_id, k)) for k in VAV_KINDS]
        if any(c is None for c in chans) or outside is None:
            continue  # zone not fully instrumented in this store
        stack = chans + [outside]
        if pressure is not None:
            stack.append(pressure)
        segs = aligned_segments(stack, ZoneFrame.REQUIRED, m.zone_id)
        if segs:
            frames_by_zone[m.zone_id] = segs
    return frames_by_zone


def _forecast_config(cfg: RunConfig, step: int) -> ForecastConfig:
    return ForecastConfig.for_step(
        step,
        lookback_steps=cfg.get("features", "lookback_steps"),
        horizon_steps=cfg.get("features", "horizon_steps"),
    )


def _split_frames(cfg: RunConfig, step: int) -> tuple[dict, dict, dict]:
    store = Path(cfg.output_dir) / f"clean_{step}"
    series = read_canonical(store)
    frames_by_zone = build_zone_frames(series, Path(cfg.data_dir) / DEVICE_META_FILE)
    out = ({}, {}, {})
    for zone_id, frames in frames_by_zone.items():
        split = calendar_split(frames)
        for bucket, fs in zip(out, (split.train, split.val, split.test)):
            if fs:
                bucket[zone_id] = fs
    return out


def _candidates_for_zone(cfg: RunConfig, zone_id: str) -> list[RegressorSpec]:
    hp = cfg.regressor_hyperparameters()
    return [
        RegressorSpec(kind=kind, hyperparameters=hp[kind], seed=derive_seed(cfg.seed, f"{zone_id}/{kind.value}"))
        for kind in cfg.candidate_kinds()
    ]


def _select_one(args):
    frames, fc, candidates, plan, max_windows = args
    return select_model(frames, fc, candidates, plan, max_windows_per_fold=max_windows)


def run_train(cfg: RunConfig, step: int | None = None, jobs: int = 1, zones=None) -> dict:
    step = step or cfg.get("preprocess", "target_step_seconds")
    train_frames, _, _ = _split_frames(cfg, step)
    if zones:
        train_frames = {z: f for z, f in train_frames.items() if z in set(zones)}
    if not train_frames:
        raise ValueError("no training frames; run preprocess first or check zone filters")
    fc = _forecast_config(cfg, step)
    plan = TscvPlan(
        n_folds=cfg.get("selection", "n_folds"),
        min_train_samples=cfg.get("selection", "min_train_samples"),
    )
    max_windows = cfg.get("selection", "max_windows_per_fold")
    tasks = [
        (frames, fc, _candidates_for_zone(cfg, zone_id), plan, max_windows)
        for zone_id, frames in sorted(train_frames.items())
    ]
    bank = ModelBank()
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for entry in pool.map(_select_one, tasks):
                bank.put(entry)
    else:
        for task in tasks:
            bank.put(_select_one(task))
    bank_dir = Path(cfg.output_dir) / f"models_{step}"
    save_bank(bank, bank_dir)
    scores_path = Path(cfg.output_dir) / f"cv_scores_{step}.csv"
    write_cv_scores_csv(bank, scores_path)
    return {
        "step_seconds": step,
        "zones": sorted(z for z, _ in bank.entries),
        "winners": {z: e.spec.kind.value for (z, _), e in sorted(bank.entries.items())},
        "bank": str(bank_dir),
        "cv_scores": str(scores_path),
    }


def _load_bank_for(cfg: RunConfig, step: int) -> ModelBank:
    return load_bank(Path(cfg.output_dir) / f"models_{step}")


def run_evaluate(cfg: RunConfig, step: int | None = None, split: str = "val") -> dict:
    step = step or cfg.get("preprocess", "target_step_seconds")
    bank = _load_bank_for(cfg, step)
    train_f, val_f, test_f = _split_frames(cfg, step)
    frames = {"train": train_f, "val": val_f, "test": test_f}[split]
    if not frames:
        raise ValueError(f"no frames in split {split!r}")
    fc = _forecast_config(cfg, step)
    report = evaluate_bank(bank, frames, fc)
    csv_path = Path(cfg.output_dir) / f"evaluation_{split}_{step}.csv"
    json_path = Path(cfg.output_dir) / f"summary_{split}_{step}.json"
    write_evaluation_csv(report, csv_path)
    write_summary_json(report, json_path)
    return {
        "step_seconds": step,
        "split": split,
        "overall_mae_f": report.overall_mae,
        "overall_rmse_f": report.overall_rmse,
        "n_windows": len(report.rows),
        "evaluation_csv": str(csv_path),
        "summary_json": str(json_path),
    }


def run_forecast(cfg: RunConfig, zone: str, step: int | None = None, split: str = "val", window: int = 0) -> dict:
    step = step or cfg.get("preprocess", "target_step_seconds")
    bank = _load_bank_for(cfg, step)
    entry = bank.get(zone, step)
    if entry is None:
        raise ValueError(f"zone {zone!r} not in the model store for step {step}")
    train_f, val_f, test_f = _split_frames(cfg, step)
    frames = {"train": train_f, "val": val_f, "test": test_f}[split].get(zone)
    if not frames:
        raise ValueError(f"no {split} frames for zone {zone!r}")
    fc = _forecast_config(cfg, step)
    starts = []
    for frame in sorted(frames, key=lambda f: f.start):
        starts.extend((frame, s) for s in window_starts(frame.n_rows, fc.lookback_steps, fc.horizon_steps))
    if not starts:
        raise ValueError(f"no full forecast window fits the {split} frames of zone {zone!r}")
    if not 0 <= window < len(starts):
        raise ValueError(f"window index {window} out of range; {len(starts)} available")
    frame, start_row = starts[window]
    result = recursive_forecast(entry.model, frame, fc, start_row)
    path = Path(cfg.output_dir) / f"forecast_trace_{zone}_{step}.csv"
    write_forecast_trace(result, step, path)
    return {"zone": zone, "mae_f": result.mae, "rmse_f": result.rmse, "trace": str(path)}


# ---------------------------------------------------------------------------
# MPC

def _mpc_setup(cfg: RunConfig, tariff_path=None, hours: int | None = None):
    syn = cfg.synthetic_config()
    g = lambda k: cfg.get("mpc", k)
    mpc_cfg = MpcConfig(
        horizon_hours=g("horizon_hours"),
        comfort_center_c=g("comfort_center_c"),
        comfort_band_c=g("comfort_band_c"),
        comfort_weight=g("comfort_weight"),
        smooth_weight=g("smooth_weight"),
        supply_temp_bounds=(g("supply_temp_lo_c"), g("supply_temp_hi_c")),
        pressure_bounds=(g("pressure_lo_pa"), g("pressure_hi_pa")),
        inner_step_seconds=g("inner_step_seconds"),
        rollout_substep_seconds=g("rollout_substep_seconds"),
    )
    total_hours = hours or g("total_hours")
    start_text = g("start")
    if start_text:
        start_epoch = parse_rfc3339(start_text)
    else:
        # cooling season of the simulated year
        sim_start = parse_rfc3339(syn.start)
        year = datetime.fromtimestamp(sim_start, tz=timezone.utc).year
        start_epoch = int(datetime(year, 7, 1, tzinfo=timezone.utc).timestamp())
    n_hours = total_hours + mpc_cfg.horizon_hours + 1
    if tariff_path:
        tariff = load_tariff_csv(tariff_path)
        if len(tariff) < n_hours:
            raise ValueError(f"tariff file covers {len(tariff)} hours; need {n_hours}")
    else:
        tariff = make_spike_tariff(
            n_hours,
            base_price=g("tariff_base_price"),
            spike_multiplier=g("tariff_spike_multiplier"),
            spike_hours=range(g("tariff_spike_start_hour"), g("tariff_spike_end_hour")),
            start_epoch=start_epoch,
        )
    weather = np.array(
        [deterministic_outside_temp_c(syn, start_epoch + h * 3600) for h in range(n_hours)]
    )
    occupied_gain_profile = lambda occ_gain: tuple(
        occ_gain if 8 <= h < 18 else 0.3 for h in range(24)
    )
    zones = []
    for i in range(g("zones")):
        rc, gain = zone_physical_params(syn, i)
        zones.append(
            MpcZone(
                rc=rc,
                cool_setpoint_c=fahrenheit_to_celsius(syn.occupied_cool_f),
                flow_min_kg_s=syn.flow_min_kg_s,
                flow_max_kg_s=syn.flow_max_kg_s,
                flow_kp_kg_s_per_k=syn.flow_kp_kg_s_per_k,
                internal_gain_profile_kw=occupied_gain_profile(gain),
            )
        )
    plant = MpcPlant(params=PlantParams(), zones=zones, outside_temp_c=weather)
    state = MpcState(
        zone_temps_c=np.full(len(zones), mpc_cfg.comfort_center_c),
        prev_supply_temp_c=0.5 * sum(mpc_cfg.supply_temp_bounds),
        prev_pressure_pa=0.5 * sum(mpc_cfg.pressure_bounds),
        hour=0,
    )
    return mpc_cfg, plant, state, tariff, total_hours


def run_optimize(cfg: RunConfig, tariff_path=None, hours: int | None = None, baseline: bool = True) -> dict:
    mpc_cfg, plant, state, tariff, total_hours = _mpc_setup(cfg, tariff_path, hours)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_tariff_csv(tariff, out / "tariff.csv")
    trace = receding_horizon(state, plant, tariff, mpc_cfg, total_hours)
    write_mpc_trace_csv(trace, out / "mpc_trace.csv")
    summary = {
        "total_hours": total_hours,
        "mpc_total_cost": trace.total_cost,
        "mpc_energy_kwh": trace.total_energy_kwh(),
        "mpc_violation_hours": trace.violation_hours(mpc_cfg),
        "trace": str(out / "mpc_trace.csv"),
        "tariff": str(out / "tariff.csv"),
    }
    if baseline:
        (bl_u, bl_trace) = best_constant_baseline(state, plant, tariff, mpc_cfg, total_hours)
        write_mpc_trace_csv(bl_trace, out / "baseline_trace.csv")
        summary.update(
            {
                "baseline_setpoints": list(bl_u),
                "baseline_total_cost": bl_trace.total_cost,
                "baseline_energy_kwh": bl_trace.total_energy_kwh(),
                "baseline_violation_hours": bl_trace.violation_hours(mpc_cfg),
                "baseline_trace": str(out / "baseline_trace.csv"),
                "cost_reduction_frac": 1.0 - trace.total_cost / bl_trace.total_cost
                if bl_trace.total_cost > 0
                else 0.0,
            }
        )
    (out / "mpc_summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary


def run_report(cfg: RunConfig) -> dict:
    """Gather the plot-ready CSV artifacts into output/report/."""
    out = Path(cfg.output_dir)
    report_dir = out / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    patterns = (
        "evaluation_*.csv",
        "summary_*.json",
        "cv_scores_*.csv",
        "forecast_trace_*.csv",
        "outlier_report_*.csv",
        "mpc_trace.csv",
        "baseline_trace.csv",
        "mpc_summary.json",
        "tariff.csv",
    )
    copied = []
    for pattern in patterns:
        for src in sorted(out.glob(pattern)):
            shutil.copyfile(src, report_dir / src.name)
            copied.append(src.name)
    index = report_dir / "index.txt"
    index.write_text("".join(f"{name}\n" for name in copied))
    return {"report_dir": str(report_dir), "files": copied}
