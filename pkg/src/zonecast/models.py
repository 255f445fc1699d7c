"""Uniform fit/predict interface over the five regressor kinds, plus JSON
persistence that reproduces predictions exactly on reload.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import ensembles, gp
from .ensembles import AdaBoostCommittee, BoostedEnsemble, ForestModel
from .gp import GPModel
from .tree import tree_from_dict, tree_to_dict


class RegressorKind(Enum):
    # Declaration order is the fixed tie-break order in model selection.
    RANDOM_FOREST = "random_forest"
    GP = "gp"
    ADABOOST_R2 = "adaboost_r2"
    GRADIENT_BOOSTING = "gradient_boosting"
    XGB_STYLE = "xgb_style"


DEFAULT_HYPERPARAMETERS: dict[RegressorKind, dict[str, Any]] = {
    RegressorKind.RANDOM_FOREST: {
        "n_trees": 100,
        "max_depth": 6,
        "min_leaf": 1,
        "feature_frac": 1.0 / 3.0,
        "bootstrap": True,
    },
    RegressorKind.GP: {
        "cap": 2000,
        "tune_frac": 0.2,
        "length_scale_multipliers": (0.5, 1.0, 2.0, 4.0),
        "noise_fracs": (0.01, 0.1, 0.5),
    },
    RegressorKind.ADABOOST_R2: {"n_estimators": 50, "max_depth": 6, "min_leaf": 1},
    RegressorKind.GRADIENT_BOOSTING: {
        "n_rounds": 200,
        "learning_rate": 0.1,
        "max_depth": 6,
        "min_leaf": 1,
    },
    RegressorKind.XGB_STYLE: {
        "n_rounds": 200,
        "learning_rate": 0.1,
        "max_depth": 6,
        "min_leaf": 1,
        "lam": 1.0,
        "gamma": 0.0,
    },
}


@dataclass(frozen=True)
class RegressorSpec:
    """Fully determines a fit: kind + hyperparameters + seed."""

    kind: RegressorKind
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def resolved(self) -> dict[str, Any]:
        """Defaults for the kind overlaid with any explicit overrides."""
        params = dict(DEFAULT_HYPERPARAMETERS[self.kind])
        unknown = set(self.hyperparameters) - set(params) - _EXTRA_KEYS.get(self.kind, set())
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind.value}: {sorted(unknown)}")
        params.update(self.hyperparameters)
        return params


# Keys accepted beyond the defaults (fixed-hyperparameter GP fits).
_EXTRA_KEYS = {RegressorKind.GP: {"length_scale", "signal_std", "noise_std"}}


def fit_regressor(spec: RegressorSpec, X, y):
    """Fit one model; the result exposes predict/predict_row/n_features."""
    p = spec.resolved()
    k = spec.kind
    if k is RegressorKind.RANDOM_FOREST:
        return ensembles.forest_fit(
            X,
            y,
            n_trees=int(p["n_trees"]),
            max_depth=int(p["max_depth"]),
            feature_frac=float(p["feature_frac"]),
            seed=spec.seed,
            min_leaf=int(p["min_leaf"]),
            bootstrap=bool(p["bootstrap"]),
        )
    if k is RegressorKind.GP:
        if "length_scale" in p:
            return gp.gp_fit(
                X,
                y,
                length_scale=float(p["length_scale"]),
                signal_std=float(p["signal_std"]),
                noise_std=float(p["noise_std"]),
                cap=int(p["cap"]),
                seed=spec.seed,
            )
        return gp.gp_fit_auto(
            X,
            y,
            seed=spec.seed,
            cap=int(p["cap"]),
            tune_frac=float(p["tune_frac"]),
            length_scale_multipliers=tuple(p["length_scale_multipliers"]),
            noise_fracs=tuple(p["noise_fracs"]),
        )
    if k is RegressorKind.ADABOOST_R2:
        return ensembles.adaboost_fit(
            X,
            y,
            n_estimators=int(p["n_estimators"]),
            seed=spec.seed,
            max_depth=int(p["max_depth"]),
            min_leaf=int(p["min_leaf"]),
        )
    boost_kind = ensembles.GRADIENT_BOOSTING if k is RegressorKind.GRADIENT_BOOSTING else ensembles.XGB_STYLE
    return ensembles.gbt_fit(
        X,
        y,
        kind=boost_kind,
        n_rounds=int(p["n_rounds"]),
        learning_rate=float(p["learning_rate"]),
        max_depth=int(p["max_depth"]),
        min_leaf=int(p["min_leaf"]),
        lam=float(p.get("lam", 1.0)),
        gamma=float(p.get("gamma", 0.0)),
    )


def predict(model, X) -> np.ndarray:
    """Uniform prediction entry point with a feature-count check."""
    return model.predict(X)


# ---------------------------------------------------------------------------
# persistence

_FORMAT = "zonecast-model-v1"


def _b64_floats(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii")


def _floats_b64(text: str, shape=None) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(text.encode("ascii")), dtype="<f8").copy()
    return arr.reshape(shape) if shape is not None else arr


def model_to_dict(model) -> dict:
    if isinstance(model, ForestModel):
        return {
            "type": "forest",
            "n_features": model.n_features,
            "trees": [tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, BoostedEnsemble):
        return {
            "type": "boosted",
            "kind": model.kind,
            "base_score": model.base_score,
            "learning_rate": model.learning_rate,
            "lam": model.lam,
            "gamma": model.gamma,
            "n_features": model.n_features,
            "trees": [tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, AdaBoostCommittee):
        return {
            "type": "adaboost",
            "n_features": model.n_features,
            "log_inv_betas": list(model.log_inv_betas),
            "estimators": [tree_to_dict(t) for t in model.estimators],
        }
    if isinstance(model, GPModel):
        n, d = model.x_train.shape
        return {
            "type": "gp",
            "n": n,
            "d": d,
            "x_mean": _b64_floats(model.x_mean),
            "x_std": _b64_floats(model.x_std),
            "x_train": _b64_floats(model.x_train),
            "alpha": _b64_floats(model.alpha),
            "y_mean": model.y_mean,
            "length_scale": model.length_scale,
            "signal_std": model.signal_std,
            "noise_std": model.noise_std,
            "jitter": model.jitter,
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(d: dict):
    t = d["type"]
    if t == "forest":
        return ForestModel(
            trees=[tree_from_dict(x) for x in d["trees"]], n_features=int(d["n_features"])
        )
    if t == "boosted":
        return BoostedEnsemble(
            kind=d["kind"],
            base_score=float(d["base_score"]),
            trees=[tree_from_dict(x) for x in d["trees"]],
            learning_rate=float(d["learning_rate"]),
            lam=float(d["lam"]),
            gamma=float(d["gamma"]),
            n_features=int(d["n_features"]),
        )
    if t == "adaboost":
        return AdaBoostCommittee(
            estimators=[tree_from_dict(x) for x in d["estimators"]],
            log_inv_betas=[float(x) for x in d["log_inv_betas"]],
            n_features=int(d["n_features"]),
        )
    if t == "gp":
        n, dim = int(d["n"]), int(d["d"])
        return GPModel(
            x_mean=_floats_b64(d["x_mean"]),
            x_std=_floats_b64(d["x_std"]),
            x_train=_floats_b64(d["x_train"], (n, dim)),
            y_mean=float(d["y_mean"]),
            alpha=_floats_b64(d["alpha"]),
            length_scale=float(d["length_scale"]),
            signal_std=float(d["signal_std"]),
            noise_std=float(d["noise_std"]),
            jitter=float(d["jitter"]),
        )
    raise ValueError(f"unknown model type {t!r}")


def spec_to_dict(spec: RegressorSpec) -> dict:
    return {
        "kind": spec.kind.value,
        "hyperparameters": {
            k: list(v) if isinstance(v, tuple) else v for k, v in spec.hyperparameters.items()
        },
        "seed": spec.seed,
    }


def spec_from_dict(d: dict) -> RegressorSpec:
    hp = {k: tuple(v) if isinstance(v, list) else v for k, v in d["hyperparameters"].items()}
    return RegressorSpec(kind=RegressorKind(d["kind"]), hyperparameters=hp, seed=int(d["seed"]))


def save_model(model, path, spec: RegressorSpec | None = None) -> None:
    doc = {"format": _FORMAT, "model": model_to_dict(model)}
    if spec is not None:
        doc["spec"] = spec_to_dict(spec)
    Path(path).write_text(json.dumps(doc))


def load_model(path) -> tuple[Any, RegressorSpec | None]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != _FORMAT:
        raise ValueError(f"{path}: not a {_FORMAT} document")
    spec = spec_from_dict(doc["spec"]) if "spec" in doc else None
    return model_from_dict(doc["model"]), spec
