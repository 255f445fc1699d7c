"""Forecast error metrics."""

from __future__ import annotations

import math

import numpy as np


def _paired(pred, actual):
    p = np.asarray(pred, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {a.shape}")
    if p.size == 0:
        raise ValueError("empty inputs")
    return p, a


def mae(pred, actual) -> float:
    p, a = _paired(pred, actual)
    return float(np.abs(p - a).mean())


def rmse(pred, actual) -> float:
    p, a = _paired(pred, actual)
    return math.sqrt(float(((p - a) ** 2).mean()))
