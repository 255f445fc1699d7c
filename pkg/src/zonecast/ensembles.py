"""Tree ensembles: random forest, gradient boosting (plain and
regularized XGB-style), and AdaBoost.R2 with linear loss.

All randomness flows through the package PRNG so a (spec, data, seed) triple
refits to bit-identical models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Xorshift64Star
from .tree import TreeNode, grow_tree, tree_predict, tree_predict_row

GRADIENT_BOOSTING = "gradient_boosting"
XGB_STYLE = "xgb_style"


def _check_features(n_features: int, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    return X


@dataclass
class ForestModel:
    trees: list[TreeNode]
    n_features: int

    def predict(self, X) -> np.ndarray:
        X = _check_features(self.n_features, X)
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += tree_predict(t, X)
        return acc / len(self.trees)

    def predict_row(self, row: np.ndarray) -> float:
        return sum(tree_predict_row(t, row) for t in self.trees) / len(self.trees)


def forest_fit(
    X,
    y,
    n_trees: int,
    max_depth: int,
    feature_frac: float,
    seed: int,
    min_leaf: int = 1,
    bootstrap: bool = True,
) -> ForestModel:
    """Bagged CART trees with per-node feature subsets of ceil(feature_frac * d).

    ``bootstrap=False`` is a test hook: one tree with feature_frac 1 then
    reduces exactly to a plain CART fit.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    k = min(d, max(1, math.ceil(feature_frac * d)))
    rng = Xorshift64Star(seed)
    trees = []
    for t in range(n_trees):
        tree_rng = rng.derive(f"tree-{t}")
        if bootstrap:
            rows = np.asarray(tree_rng.bootstrap_indices(n), dtype=np.intp)
            Xb, yb = X[rows], y[rows]
        else:
            Xb, yb = X, y
        sampler = None
        if k < d:
            sampler = lambda nd, r=tree_rng: r.sample_without_replacement(nd, k)
        root, _ = grow_tree(Xb, yb, max_depth=max_depth, min_leaf=min_leaf, feature_sampler=sampler)
        trees.append(root)
    return ForestModel(trees=trees, n_features=d)


@dataclass
class BoostedEnsemble:
    """base_score + learning_rate * sum of residual trees."""

    kind: str
    base_score: float
    trees: list[TreeNode]
    learning_rate: float
    lam: float
    gamma: float
    n_features: int
    train_losses: list[float] = field(default_factory=list)  # mean squared error per round

    def predict(self, X) -> np.ndarray:
        X = _check_features(self.n_features, X)
        acc = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            acc += self.learning_rate * tree_predict(t, X)
        return acc

    def predict_row(self, row: np.ndarray) -> float:
        return self.base_score + self.learning_rate * sum(
            tree_predict_row(t, row) for t in self.trees
        )


def gbt_fit(
    X,
    y,
    kind: str,
    n_rounds: int,
    learning_rate: float,
    max_depth: int,
    min_leaf: int = 1,
    lam: float = 1.0,
    gamma: float = 0.0,
) -> BoostedEnsemble:
    """Boosted squared-loss trees on residuals.

    GRADIENT_BOOSTING uses plain SSE splits with mean-residual leaves.
    XGB_STYLE uses leaf = sum(r)/(n_leaf + lam) and the regularized gain
    criterion; a node splits only when the gain is strictly positive.
    """
    if kind not in (GRADIENT_BOOSTING, XGB_STYLE):
        raise ValueError(f"not a boosting kind: {kind}")
    if learning_rate <= 0:
        raise ValueError("learning rate must be positive")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    base = float(y.mean())
    current = np.full(n, base)
    criterion = "sse" if kind == GRADIENT_BOOSTING else "gain"
    use_lam = 0.0 if kind == GRADIENT_BOOSTING else lam
    use_gamma = 0.0 if kind == GRADIENT_BOOSTING else gamma
    presorted = [np.argsort(X[:, f], kind="stable") for f in range(d)]
    trees: list[TreeNode] = []
    losses: list[float] = []
    for _ in range(n_rounds):
        r = y - current
        root, fitted = grow_tree(
            X,
            r,
            max_depth=max_depth,
            min_leaf=min_leaf,
            criterion=criterion,
            lam=use_lam,
            gamma=use_gamma,
            presorted=presorted,
        )
        trees.append(root)
        current = current + learning_rate * fitted
        losses.append(float(np.mean((y - current) ** 2)))
    return BoostedEnsemble(
        kind=kind,
        base_score=base,
        trees=trees,
        learning_rate=learning_rate,
        lam=use_lam,
        gamma=use_gamma,
        n_features=d,
        train_losses=losses,
    )


@dataclass
class AdaBoostCommittee:
    """Weighted-median committee; weights are log(1/beta) per round."""

    estimators: list[TreeNode]
    log_inv_betas: list[float]
    n_features: int

    def predict(self, X) -> np.ndarray:
        X = _check_features(self.n_features, X)
        preds = np.column_stack([tree_predict(t, X) for t in self.estimators])
        w = np.asarray(self.log_inv_betas)
        order = np.argsort(preds, axis=1)
        sorted_preds = np.take_along_axis(preds, order, axis=1)
        cum = np.cumsum(w[order], axis=1)
        pick = np.argmax(cum >= 0.5 * cum[:, -1:], axis=1)
        return sorted_preds[np.arange(X.shape[0]), pick]

    def predict_row(self, row: np.ndarray) -> float:
        preds = [tree_predict_row(t, row) for t in self.estimators]
        order = sorted(range(len(preds)), key=preds.__getitem__)
        half = 0.5 * sum(self.log_inv_betas)
        acc = 0.0
        for i in order:
            acc += self.log_inv_betas[i]
            if acc >= half:
                return preds[i]
        return preds[order[-1]]


_BETA_FLOOR = 1e-10  # keeps log(1/beta) finite for a perfect round


def adaboost_fit(
    X,
    y,
    n_estimators: int,
    seed: int,
    max_depth: int = 6,
    min_leaf: int = 1,
) -> AdaBoostCommittee:
    """AdaBoost.R2 with linear loss and weighted-bootstrap base fits.

    Rounds stop early when a tree fits perfectly (it is kept) or when the
    weighted average loss reaches 0.5 (the tree is discarded, unless it would
    leave the committee empty).
    """
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    rng = Xorshift64Star(seed)
    w = np.full(n, 1.0 / n)
    estimators: list[TreeNode] = []
    weights: list[float] = []
    for k in range(n_estimators):
        round_rng = rng.derive(f"round-{k}")
        cdf = np.cumsum(w)
        cdf[-1] = 1.0
        u = np.array([round_rng.random() for _ in range(n)])
        rows = np.searchsorted(cdf, u, side="right")
        root, _ = grow_tree(X[rows], y[rows], max_depth=max_depth, min_leaf=min_leaf)
        err = np.abs(y - tree_predict(root, X))
        err_max = float(err.max())
        if err_max == 0.0:
            estimators.append(root)
            weights.append(math.log(1.0 / _BETA_FLOOR))
            break
        loss = err / err_max
        lbar = float(np.dot(w, loss))
        if lbar >= 0.5:
            if not estimators:  # never return an empty committee
                estimators.append(root)
                weights.append(1.0)
            break
        beta = max(lbar / (1.0 - lbar), _BETA_FLOOR)
        estimators.append(root)
        weights.append(math.log(1.0 / beta))
        w = w * beta ** (1.0 - loss)
        w = w / w.sum()
    return AdaBoostCommittee(estimators=estimators, log_inv_betas=weights, n_features=d)
