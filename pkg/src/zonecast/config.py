"""Run configuration: flat-sectioned key/value files (INI) with a JSON
alternative. Unknown sections or keys are rejected so typos fail loudly;
relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .models import RegressorKind
from .preprocess import DEFAULT_BOUNDS, PreprocessConfig
from .series import MeasurementKind
from .synthetic import SyntheticConfig


class ConfigError(ValueError):
    pass


def _opt_int(text: str):
    return None if text.strip() == "" else int(text)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (coercer, default)
_SCHEMA = {
    "paths": {
        "data_dir": (str, "data"),
        "output_dir": (str, "out"),
    },
    "run": {
        "seed": (int, 0),
        "jobs": (_opt_int, None),  # None: number of processors
        "timezone": (str, "UTC"),
    },
    "simulate": {
        "zones": (int, 3),
        "months": (int, 8),
        "step_seconds": (int, 300),
        "start": (str, "2022-01-01T00:00:00Z"),
    },
    "preprocess": {
        "max_gap_steps": (int, 6),
        "mad_window": (int, 96),
        "mad_k": (float, 6.0),
        "target_step_seconds": (int, 900),
    },
    "features": {
        "lookback_steps": (_opt_int, None),  # None: one week at the working step
        "horizon_steps": (_opt_int, None),  # None: two weeks at the working step
    },
    "selection": {
        "n_folds": (int, 5),
        "min_train_samples": (_opt_int, None),
        "max_windows_per_fold": (_opt_int, None),
        "candidates": (str, ",".join(k.value for k in RegressorKind)),
    },
    "regressors": {
        "forest_n_trees": (int, 100),
        "forest_max_depth": (int, 6),
        "forest_min_leaf": (int, 1),
        "forest_feature_frac": (float, 1.0 / 3.0),
        "gbt_n_rounds": (int, 200),
        "gbt_learning_rate": (float, 0.1),
        "gbt_max_depth": (int, 6),
        "gbt_min_leaf": (int, 1),
        "xgb_n_rounds": (int, 200),
        "xgb_learning_rate": (float, 0.1),
        "xgb_max_depth": (int, 6),
        "xgb_min_leaf": (int, 1),
        "xgb_lambda": (float, 1.0),
        "xgb_gamma": (float, 0.0),
        "ada_n_estimators": (int, 50),
        "ada_max_depth": (int, 6),
        "ada_min_leaf": (int, 1),
        "gp_cap": (int, 2000),
        "gp_tune_frac": (float, 0.2),
    },
    "mpc": {
        "horizon_hours": (int, 24),
        "total_hours": (int, 24),
        "zones": (int, 2),
        "comfort_center_c": (float, 22.5),
        "comfort_band_c": (float, 1.5),
        "comfort_weight": (float, 25.0),
        "smooth_weight": (float, 0.05),
        "supply_temp_lo_c": (float, 10.0),
        "supply_temp_hi_c": (float, 18.0),
        "pressure_lo_pa": (float, 100.0),
        "pressure_hi_pa": (float, 600.0),
        "inner_step_seconds": (int, 300),
        "rollout_substep_seconds": (int, 900),
        "start": (str, ""),  # default: cooling season of the simulated year
        "tariff_base_price": (float, 0.10),
        "tariff_spike_multiplier": (float, 2.0),
        "tariff_spike_start_hour": (int, 12),
        "tariff_spike_end_hour": (int, 18),
    },
}

# [preprocess] additionally accepts bound_<kind> = lo,hi overrides.
_BOUND_PREFIX = "bound_"


@dataclass
class RunConfig:
    path: str
    config_hash: str
    data_dir: Path
    output_dir: Path
    values: dict = field(default_factory=dict)  # section -> key -> coerced value
    bounds: dict = field(default_factory=dict)  # MeasurementKind -> (lo, hi)

    def get(self, section: str, key: str):
        return self.values[section][key]

    # -- derived config objects ------------------------------------------------

    @property
    def seed(self) -> int:
        return self.get("run", "seed")

    def synthetic_config(self) -> SyntheticConfig:
        return SyntheticConfig(
            n_zones=self.get("simulate", "zones"),
            months=self.get("simulate", "months"),
            step_seconds=self.get("simulate", "step_seconds"),
            start=self.get("simulate", "start"),
            seed=self.seed,
        )

    def preprocess_config(self, step_override: int | None = None) -> PreprocessConfig:
        bounds = dict(DEFAULT_BOUNDS)
        bounds.update(self.bounds)
        return PreprocessConfig(
            max_gap_steps=self.get("preprocess", "max_gap_steps"),
            bounds=bounds,
            mad_window=self.get("preprocess", "mad_window"),
            mad_k=self.get("preprocess", "mad_k"),
            target_step_seconds=step_override or self.get("preprocess", "target_step_seconds"),
        )

    def candidate_kinds(self) -> list[RegressorKind]:
        names = [n.strip() for n in self.get("selection", "candidates").split(",") if n.strip()]
        if not names:
            raise ConfigError("selection.candidates is empty")
        try:
            return [RegressorKind(n) for n in names]
        except ValueError as exc:
            raise ConfigError(f"unknown candidate kind in config: {exc}") from None

    def regressor_hyperparameters(self) -> dict:
        g = lambda k: self.get("regressors", k)
        return {
            RegressorKind.RANDOM_FOREST: {
                "n_trees": g("forest_n_trees"),
                "max_depth": g("forest_max_depth"),
                "min_leaf": g("forest_min_leaf"),
                "feature_frac": g("forest_feature_frac"),
            },
            RegressorKind.GP: {"cap": g("gp_cap"), "tune_frac": g("gp_tune_frac")},
            RegressorKind.ADABOOST_R2: {
                "n_estimators": g("ada_n_estimators"),
                "max_depth": g("ada_max_depth"),
                "min_leaf": g("ada_min_leaf"),
            },
            RegressorKind.GRADIENT_BOOSTING: {
                "n_rounds": g("gbt_n_rounds"),
                "learning_rate": g("gbt_learning_rate"),
                "max_depth": g("gbt_max_depth"),
                "min_leaf": g("gbt_min_leaf"),
            },
            RegressorKind.XGB_STYLE: {
                "n_rounds": g("xgb_n_rounds"),
                "learning_rate": g("xgb_learning_rate"),
                "max_depth": g("xgb_max_depth"),
                "min_leaf": g("xgb_min_leaf"),
                "lam": g("xgb_lambda"),
                "gamma": g("xgb_gamma"),
            },
        }


def _parse_bounds(raw: dict) -> dict:
    bounds = {}
    for key, text in raw.items():
        kind_name = key[len(_BOUND_PREFIX):]
        try:
            kind = MeasurementKind(kind_name)
        except ValueError:
            raise ConfigError(f"[preprocess] {key}: unknown measurement kind {kind_name!r}") from None
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 2:
            raise ConfigError(f"[preprocess] {key}: expected 'lo,hi', got {text!r}")
        bounds[kind] = (float(parts[0]), float(parts[1]))
    return bounds


def _coerce_sections(sections: dict, origin: str) -> tuple[dict, dict]:
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in _SCHEMA.items()}
    bound_overrides: dict = {}
    for section, keys in sections.items():
        if section not in _SCHEMA:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        for key, raw in keys.items():
            if section == "preprocess" and key.startswith(_BOUND_PREFIX):
                bound_overrides[key] = raw
                continue
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{origin}: unknown key {key!r} in section [{section}]")
            coerce, _ = _SCHEMA[section][key]
            try:
                values[section][key] = coerce(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{origin}: bad value for [{section}] {key}: {exc}") from None
    return values, _parse_bounds(bound_overrides)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    blob = path.read_bytes()
    if path.suffix.lower() == ".json":
        doc = json.loads(blob.decode("utf-8"))
        if not isinstance(doc, dict) or not all(isinstance(v, dict) for v in doc.values()):
            raise ConfigError(f"{path}: JSON config must map sections to key/value objects")
        sections = {s: {k: v for k, v in kv.items()} for s, kv in doc.items()}
    else:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(blob.decode("utf-8"), source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        sections = {s: dict(parser.items(s)) for s in parser.sections()}
    values, bounds = _coerce_sections(sections, str(path))
    base = path.parent
    data_dir = base / values["paths"]["data_dir"]
    output_dir = base / values["paths"]["output_dir"]
    return RunConfig(
        path=str(path),
        config_hash=hashlib.sha256(blob).hexdigest(),
        data_dir=data_dir,
        output_dir=output_dir,
        values=values,
        bounds=bounds,
    )
