"""Greedy CART regression trees with an exact split scan.

Splits are chosen by scanning every midpoint between adjacent sorted feature
values, either minimizing the children's total squared error ("sse") or
maximizing the regularized gain used by the boosted variant ("gain"). No
histogramming or subsampling of candidate thresholds: matrices here are small
enough that exactness is affordable, and it keeps the split search verifiable
against brute-force enumeration.

Ties break toward the lowest feature index, then the lowest threshold. The
left branch takes ``x[f] <= threshold``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass
class TreeNode:
    """Internal node (feature_index >= 0) or leaf (feature_index == -1)."""

    n_samples: int
    value: float
    feature_index: int = -1
    threshold: float = float("nan")
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index < 0


def _scan_sse(xo: np.ndarray, yo: np.ndarray, min_leaf: int):
    """Best split position by total child SSE; returns (score, pos) or None.

    Position ``pos`` means the left child takes sorted indices [0, pos].
    Lower score is better.
    """
    n = yo.size
    if n < 2 * min_leaf:
        return None
    c1 = np.cumsum(yo)
    c2 = np.cumsum(yo * yo)
    tot1, tot2 = c1[-1], c2[-1]
    nl = np.arange(1, n, dtype=np.float64)
    l1, l2 = c1[:-1], c2[:-1]
    nr = n - nl
    sse = (l2 - l1 * l1 / nl) + ((tot2 - l2) - (tot1 - l1) * (tot1 - l1) / nr)
    valid = xo[:-1] < xo[1:]
    if min_leaf > 1:
        valid &= (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    pos = int(np.argmin(sse))  # first minimum -> lowest threshold on ties
    return float(sse[pos]), pos


def _scan_gain(xo: np.ndarray, yo: np.ndarray, min_leaf: int, lam: float, gamma: float):
    """Best split position by regularized gain on residual sums.

    gain = 0.5 * (G_L^2/(n_L+lam) + G_R^2/(n_R+lam) - G^2/(n+lam)) - gamma,
    with G the residual sum of each side. Returns (-gain, pos) so callers can
    minimize uniformly, or None when no positive-gain split exists.
    """
    n = yo.size
    if n < 2 * min_leaf:
        return None
    c1 = np.cumsum(yo)
    tot = c1[-1]
    nl = np.arange(1, n, dtype=np.float64)
    gl = c1[:-1]
    nr = n - nl
    gain = 0.5 * (gl * gl / (nl + lam) + (tot - gl) ** 2 / (nr + lam) - tot * tot / (n + lam)) - gamma
    valid = xo[:-1] < xo[1:]
    if min_leaf > 1:
        valid &= (nl >= min_leaf) & (nr >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    pos = int(np.argmax(gain))  # first maximum -> lowest threshold on ties
    if gain[pos] <= 0.0:
        return None
    return -float(gain[pos]), pos


def _leaf_value(y_sum: float, n: int, criterion: str, lam: float) -> float:
    if criterion == "gain":
        return y_sum / (n + lam)
    return y_sum / n


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    max_depth: int,
    min_leaf: int = 1,
    criterion: str = "sse",
    lam: float = 0.0,
    gamma: float = 0.0,
    feature_sampler: Callable[[int], list[int]] | None = None,
    presorted: list[np.ndarray] | None = None,
) -> tuple[TreeNode, np.ndarray]:
    """Fit one tree; returns (root, training predictions).

    ``presorted`` may hold one argsort index array per feature for the full
    row set; boosting reuses it across rounds since X never changes there.
    ``feature_sampler`` restricts each node's split search to a feature subset
    (random forests); the returned indices must be ascending.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("training data must be finite")
    n, d = X.shape
    if presorted is None:
        presorted = [np.argsort(X[:, f], kind="stable") for f in range(d)]
    train_pred = np.empty(n)
    in_left = np.zeros(n, dtype=bool)  # scratch, reused across partitions

    def build(orders: list[np.ndarray], depth: int) -> TreeNode:
        idx = orders[0]
        m = idx.size
        ysub = y[idx]
        value = _leaf_value(float(ysub.sum()), m, criterion, lam)

        def leaf() -> TreeNode:
            train_pred[idx] = value
            return TreeNode(n_samples=m, value=value)

        if depth >= max_depth or m < 2 * min_leaf:
            return leaf()
        if criterion == "sse" and np.ptp(ysub) == 0.0:
            return leaf()  # zero SSE, nothing to split
        features = feature_sampler(d) if feature_sampler is not None else range(d)
        best = None  # (score, feature, pos, threshold)
        for f in features:
            o = orders[f]
            xo = X[o, f]
            scan = _scan_sse(xo, y[o], min_leaf) if criterion == "sse" else _scan_gain(
                xo, y[o], min_leaf, lam, gamma
            )
            if scan is None:
                continue
            score, pos = scan
            if best is None or score < best[0]:
                thr = (xo[pos] + xo[pos + 1]) / 2.0
                if thr >= xo[pos + 1]:  # adjacent floats: keep the partition exact
                    thr = float(xo[pos])
                best = (score, f, pos, float(thr))
        if best is None:
            return leaf()
        _, f_best, _, thr = best
        in_left[idx] = X[idx, f_best] <= thr
        left_orders, right_orders = [], []
        for o in orders:
            mask = in_left[o]
            left_orders.append(o[mask])
            right_orders.append(o[~mask])
        node = TreeNode(n_samples=m, value=value, feature_index=f_best, threshold=thr)
        node.left = build(left_orders, depth + 1)
        node.right = build(right_orders, depth + 1)
        return node

    root = build(list(presorted), 0)
    return root, train_pred


def tree_fit(X, y, max_depth: int, min_leaf: int = 1) -> TreeNode:
    """Plain least-squares CART fit (leaf value = child mean)."""
    root, _ = grow_tree(X, y, max_depth=max_depth, min_leaf=min_leaf)
    return root


def tree_predict_row(node: TreeNode, row: np.ndarray) -> float:
    while not node.is_leaf:
        node = node.left if row[node.feature_index] <= node.threshold else node.right
    return node.value


def tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Vectorized batch prediction via recursive index partitioning."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0])

    def walk(node: TreeNode, idx: np.ndarray):
        if node.is_leaf:
            out[idx] = node.value
            return
        go_left = X[idx, node.feature_index] <= node.threshold
        walk(node.left, idx[go_left])
        walk(node.right, idx[~go_left])

    walk(node, np.arange(X.shape[0]))
    return out


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"v": node.value, "n": node.n_samples}
    return {
        "f": node.feature_index,
        "t": node.threshold,
        "n": node.n_samples,
        "l": tree_to_dict(node.left),
        "r": tree_to_dict(node.right),
    }


def tree_from_dict(d: dict) -> TreeNode:
    if "f" not in d:
        return TreeNode(n_samples=int(d["n"]), value=float(d["v"]))
    return TreeNode(
        n_samples=int(d["n"]),
        value=float("nan"),
        feature_index=int(d["f"]),
        threshold=float(d["t"]),
        left=tree_from_dict(d["l"]),
        right=tree_from_dict(d["r"]),
    )
