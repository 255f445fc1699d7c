"""Expanding-window cross-validation, per-zone model selection, and test
evaluation.

Fold scores are recursive multi-step MAEs over full-horizon windows inside
each validation block, not one-step errors: the deployment target is the
two-week forecast, so candidates compete on exactly the metric that gets
reported. The winner per (zone, step) is refitted on the full training range
and kept in a ModelBank together with every candidate's scores.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import TARGET_KIND, ForecastConfig, build_design
from .forecast import recursive_forecast, window_starts
from .models import (
    RegressorKind,
    RegressorSpec,
    fit_regressor,
    load_model,
    save_model,
)
from .series import ZoneFrame, format_rfc3339

_KIND_ORDER = {kind: i for i, kind in enumerate(RegressorKind)}


@dataclass(frozen=True)
class TscvPlan:
    n_folds: int = 5
    min_train_samples: int | None = None  # None: half the samples

    def __post_init__(self):
        if self.n_folds < 1:
            raise ValueError("n_folds must be >= 1")


def tscv_splits(n_samples: int, plan: TscvPlan) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Expanding-window folds as ((0, train_end), (val_start, val_end)) index
    ranges. Samples beyond min_train split into n_folds consecutive blocks;
    the last block absorbs the remainder."""
    min_train = plan.min_train_samples
    if min_train is None:
        min_train = max(n_samples // 2, 1)
    if min_train < 1:
        raise ValueError("min_train_samples must be >= 1")
    needed = min_train + plan.n_folds
    if n_samples < needed:
        raise ValueError(f"need at least {needed} samples for this plan, got {n_samples}")
    block = (n_samples - min_train) // plan.n_folds
    folds = []
    for k in range(plan.n_folds):
        train_end = min_train + k * block
        val_end = n_samples if k == plan.n_folds - 1 else train_end + block
        folds.append(((0, train_end), (train_end, val_end)))
    return folds


class FrameStack:
    """Chronologically ordered frames of one zone flattened to one sample axis."""

    def __init__(self, frames: list[ZoneFrame], cfg: ForecastConfig):
        frames = sorted(frames, key=lambda f: f.start)
        usable = [f for f in frames if f.n_rows > cfg.lookback_steps]
        if not usable:
            raise ValueError(
                f"no frame exceeds the lookback of {cfg.lookback_steps} steps"
            )
        self.cfg = cfg
        self.frames = usable
        self.designs = [build_design(f, cfg) for f in usable]
        self.offsets = np.cumsum([0] + [d.n_samples for d in self.designs])
        self.X = np.vstack([d.X for d in self.designs])
        self.y = np.concatenate([d.y for d in self.designs])

    @property
    def n_samples(self) -> int:
        return int(self.offsets[-1])

    def windows_in_range(
        self, lo: int, hi: int, max_windows: int | None = None
    ) -> list[tuple[ZoneFrame, int, int]]:
        """Forecast windows (frame, start_row, horizon) covering samples [lo, hi).

        Full-horizon windows only; when none fits, one truncated window keeps
        the block scoreable.
        """
        H = self.cfg.horizon_steps
        L = self.cfg.lookback_steps
        out = []
        fallback = None
        for i, frame in enumerate(self.frames):
            a = max(lo, int(self.offsets[i]))
            b = min(hi, int(self.offsets[i + 1]))
            if b <= a:
                continue
            local_a = a - int(self.offsets[i])
            local_b = b - int(self.offsets[i])
            if fallback is None:
                fallback = (frame, L + local_a, local_b - local_a)
            s = local_a
            while s + H <= local_b:
                out.append((frame, L + s, H))
                s += H
        if not out and fallback is not None:
            out.append(fallback)
        if max_windows is not None:
            out = out[:max_windows]
        return out


@dataclass
class CandidateScore:
    spec: RegressorSpec
    fold_maes: list = field(default_factory=list)
    fold_rmses: list = field(default_factory=list)
    mean_mae: float = float("inf")
    mean_rmse: float = float("inf")
    error: str | None = None


@dataclass
class BankEntry:
    zone_id: str
    step_seconds: int
    spec: RegressorSpec
    model: object
    scores: list  # CandidateScore for every candidate, in candidate order


@dataclass
class ModelBank:
    entries: dict = field(default_factory=dict)  # (zone_id, step_seconds) -> BankEntry

    def get(self, zone_id: str, step_seconds: int) -> BankEntry | None:
        return self.entries.get((zone_id, step_seconds))

    def put(self, entry: BankEntry) -> None:
        self.entries[(entry.zone_id, entry.step_seconds)] = entry


def _score_candidate(
    spec: RegressorSpec,
    stack: FrameStack,
    splits,
    max_windows_per_fold: int | None,
) -> CandidateScore:
    score = CandidateScore(spec=spec)
    for (tr_lo, tr_hi), (va_lo, va_hi) in splits:
        model = fit_regressor(spec, stack.X[tr_lo:tr_hi], stack.y[tr_lo:tr_hi])
        windows = stack.windows_in_range(va_lo, va_hi, max_windows_per_fold)
        if not windows:
            raise ValueError("validation block produced no forecast windows")
        maes, rmses = [], []
        for frame, start_row, horizon in windows:
            res = recursive_forecast(model, frame, stack.cfg, start_row, horizon=horizon)
            maes.append(res.mae)
            rmses.append(res.rmse)
        score.fold_maes.append(float(np.mean(maes)))
        score.fold_rmses.append(float(np.mean(rmses)))
    score.mean_mae = float(np.mean(score.fold_maes))
    score.mean_rmse = float(np.mean(score.fold_rmses))
    return score


def select_model(
    frames: list[ZoneFrame],
    cfg: ForecastConfig,
    candidates: list[RegressorSpec],
    plan: TscvPlan,
    max_windows_per_fold: int | None = None,
) -> BankEntry:
    """Cross-validate every candidate and refit the winner on all samples.

    Winner = lowest mean fold MAE; ties fall to lower mean RMSE, then to the
    RegressorKind declaration order, so candidate list order never matters.
    """
    if len(candidates) < 2:
        raise ValueError("need at least two candidate specs")
    stack = FrameStack(frames, cfg)
    splits = tscv_splits(stack.n_samples, plan)
    scores: list[CandidateScore] = []
    for spec in candidates:
        try:
            scores.append(_score_candidate(spec, stack, splits, max_windows_per_fold))
        except Exception as exc:  # candidate-level isolation; aggregate below
            scores.append(CandidateScore(spec=spec, error=f"{type(exc).__name__}: {exc}"))
    viable = [s for s in scores if s.error is None]
    if not viable:
        causes = "; ".join(f"{s.spec.kind.value}: {s.error}" for s in scores)
        raise RuntimeError(f"all candidates failed to fit: {causes}")
    winner = min(viable, key=lambda s: (s.mean_mae, s.mean_rmse, _KIND_ORDER[s.spec.kind]))
    model = fit_regressor(winner.spec, stack.X, stack.y)
    zone_id = stack.frames[0].zone_id
    return BankEntry(
        zone_id=zone_id,
        step_seconds=cfg.step_seconds,
        spec=winner.spec,
        model=model,
        scores=scores,
    )


# ---------------------------------------------------------------------------
# evaluation

COMFORT_BAND_F = (65.0, 75.0)  # reporting context only


@dataclass
class WindowRow:
    zone_id: str
    step_seconds: int
    model_kind: str
    window_start: int
    mae_f: float
    rmse_f: float


@dataclass
class EvaluationReport:
    rows: list = field(default_factory=list)
    zone_mae: dict = field(default_factory=dict)
    zone_rmse: dict = field(default_factory=dict)
    overall_mae: float = float("nan")  # mean over all windows
    overall_rmse: float = float("nan")
    mean_of_zone_mae: float = float("nan")
    mean_of_zone_rmse: float = float("nan")
    missing_zones: list = field(default_factory=list)
    band_flags: dict = field(default_factory=dict)  # zone -> (min_f, max_f) when outside 65-75


def evaluate_bank(
    bank: ModelBank,
    frames_by_zone: dict,
    cfg: ForecastConfig,
) -> EvaluationReport:
    """Recursive full-horizon forecasts over every zone's held-out windows.

    Zones without a bank entry are reported, not fatal. The report carries all
    three aggregations (per zone, over windows, mean of zone means) since any
    of them is a defensible headline number.
    """
    report = EvaluationReport()
    for zone_id in sorted(frames_by_zone):
        entry = bank.get(zone_id, cfg.step_seconds)
        if entry is None:
            report.missing_zones.append(zone_id)
            continue
        zone_maes, zone_rmses = [], []
        t_min, t_max = np.inf, -np.inf
        for frame in sorted(frames_by_zone[zone_id], key=lambda f: f.start):
            temps = frame.column(TARGET_KIND)
            t_min = min(t_min, float(temps.min()))
            t_max = max(t_max, float(temps.max()))
            for start_row in window_starts(frame.n_rows, cfg.lookback_steps, cfg.horizon_steps):
                res = recursive_forecast(entry.model, frame, cfg, start_row)
                report.rows.append(
                    WindowRow(
                        zone_id=zone_id,
                        step_seconds=cfg.step_seconds,
                        model_kind=entry.spec.kind.value,
                        window_start=res.start_timestamp,
                        mae_f=res.mae,
                        rmse_f=res.rmse,
                    )
                )
                zone_maes.append(res.mae)
                zone_rmses.append(res.rmse)
        if zone_maes:
            report.zone_mae[zone_id] = float(np.mean(zone_maes))
            report.zone_rmse[zone_id] = float(np.mean(zone_rmses))
        if t_min < COMFORT_BAND_F[0] or t_max > COMFORT_BAND_F[1]:
            report.band_flags[zone_id] = (t_min, t_max)
    if report.rows:
        report.overall_mae = float(np.mean([r.mae_f for r in report.rows]))
        report.overall_rmse = float(np.mean([r.rmse_f for r in report.rows]))
    if report.zone_mae:
        report.mean_of_zone_mae = float(np.mean(list(report.zone_mae.values())))
        report.mean_of_zone_rmse = float(np.mean(list(report.zone_rmse.values())))
    return report


def write_evaluation_csv(report: EvaluationReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zone_id", "step_seconds", "model_kind", "window_start", "mae_f", "rmse_f"])
        for r in report.rows:
            w.writerow(
                [
                    r.zone_id,
                    r.step_seconds,
                    r.model_kind,
                    format_rfc3339(r.window_start),
                    repr(r.mae_f),
                    repr(r.rmse_f),
                ]
            )


def summary_dict(report: EvaluationReport) -> dict:
    return {
        "overall": {
            "window_mean_mae_f": report.overall_mae,
            "window_mean_rmse_f": report.overall_rmse,
            "zone_mean_mae_f": report.mean_of_zone_mae,
            "zone_mean_rmse_f": report.mean_of_zone_rmse,
            "n_windows": len(report.rows),
        },
        "per_zone": {
            z: {"mae_f": report.zone_mae[z], "rmse_f": report.zone_rmse[z]}
            for z in sorted(report.zone_mae)
        },
        "missing_zones": report.missing_zones,
        "band_flags": {
            z: {"min_f": lo, "max_f": hi} for z, (lo, hi) in sorted(report.band_flags.items())
        },
    }


def write_summary_json(report: EvaluationReport, path) -> None:
    Path(path).write_text(json.dumps(summary_dict(report), indent=1, sort_keys=True))


# ---------------------------------------------------------------------------
# bank persistence

BANK_INDEX = "bank_index.json"


def save_bank(bank: ModelBank, bank_dir) -> None:
    bank_dir = Path(bank_dir)
    (bank_dir / "models").mkdir(parents=True, exist_ok=True)
    index = []
    for (zone_id, step), entry in sorted(bank.entries.items()):
        fname = f"models/{zone_id}__{step}.json"
        save_model(entry.model, bank_dir / fname, spec=entry.spec)
        index.append(
            {
                "zone_id": zone_id,
                "step_seconds": step,
                "model_path": fname,
                "winner_kind": entry.spec.kind.value,
                "cv_scores": [
                    {
                        "kind": s.spec.kind.value,
                        "mean_mae_f": s.mean_mae,
                        "mean_rmse_f": s.mean_rmse,
                        "fold_maes": s.fold_maes,
                        "fold_rmses": s.fold_rmses,
                        "error": s.error,
                    }
                    for s in entry.scores
                ],
            }
        )
    (bank_dir / BANK_INDEX).write_text(json.dumps({"entries": index}, indent=1, sort_keys=True))


def load_bank(bank_dir) -> ModelBank:
    bank_dir = Path(bank_dir)
    index_path = bank_dir / BANK_INDEX
    if not index_path.exists():
        raise FileNotFoundError(f"model store not found: {index_path}")
    doc = json.loads(index_path.read_text())
    bank = ModelBank()
    for e in doc["entries"]:
        model, spec = load_model(bank_dir / e["model_path"])
        scores = []
        for s in e["cv_scores"]:
            cs = CandidateScore(spec=RegressorSpec(kind=RegressorKind(s["kind"])))
            cs.mean_mae = s["mean_mae_f"]
            cs.mean_rmse = s["mean_rmse_f"]
            cs.fold_maes = s["fold_maes"]
            cs.fold_rmses = s["fold_rmses"]
            cs.error = s["error"]
            scores.append(cs)
        bank.put(
            BankEntry(
                zone_id=e["zone_id"],
                step_seconds=e["step_seconds"],
                spec=spec,
                model=model,
                scores=scores,
            )
        )
    return bank


def write_cv_scores_csv(bank: ModelBank, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["zone_id", "step_seconds", "model_kind", "mean_mae_f", "mean_rmse_f", "selected"])
        for (zone_id, step), entry in sorted(bank.entries.items()):
            for s in entry.scores:
                w.writerow(
                    [
                        zone_id,
                        step,
                        s.spec.kind.value,
                        "" if s.error is not None else repr(s.mean_mae),
                        "" if s.error is not None else repr(s.mean_rmse),
                        int(s.spec.kind is entry.spec.kind),
                    ]
                )
