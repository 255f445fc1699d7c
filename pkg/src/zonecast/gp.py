"""Gaussian process regression with an RBF kernel and Cholesky solves.

Features are z-scored from training statistics inside the model (tree models
consume raw features; the GP is the only scale-sensitive regressor).
Hyperparameters come either fixed from the caller or from a small
deterministic grid search on a held-out tail of the training rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .rng import Xorshift64Star

JITTER_LADDER = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)


@dataclass
class GPModel:
    x_mean: np.ndarray
    x_std: np.ndarray
    x_train: np.ndarray  # standardized
    y_mean: float
    alpha: np.ndarray  # (K + sigma_n^2 I + jitter I)^-1 (y - y_mean)
    length_scale: float
    signal_std: float
    noise_std: float
    jitter: float
    chol: tuple | None = None  # scipy cho_factor output; rebuilt on load

    @property
    def n_features(self) -> int:
        return self.x_train.shape[1]

    def _cross_kernel(self, X_std: np.ndarray) -> np.ndarray:
        d2 = (
            (X_std * X_std).sum(axis=1)[:, None]
            + (self.x_train * self.x_train).sum(axis=1)[None, :]
            - 2.0 * X_std @ self.x_train.T
        )
        np.maximum(d2, 0.0, out=d2)
        return self.signal_std**2 * np.exp(-d2 / (2.0 * self.length_scale**2))

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        return (X - self.x_mean) / self.x_std

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        k_star = self._cross_kernel(self._standardize(X))
        return k_star @ self.alpha + self.y_mean

    def predict_row(self, row: np.ndarray) -> float:
        return float(self.predict(row[None, :])[0])

    def predict_with_variance(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and (clamped non-negative) variance."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        k_star = self._cross_kernel(self._standardize(X))
        mean = k_star @ self.alpha + self.y_mean
        if self.chol is None:
            self._refactor()
        v = cho_solve(self.chol, k_star.T)
        var = self.signal_std**2 - np.einsum("ij,ji->i", k_star, v)
        return mean, np.maximum(var, 0.0)

    def _refactor(self):
        K = _rbf_kernel(self.x_train, self.length_scale, self.signal_std)
        K[np.diag_indices_from(K)] += self.noise_std**2 + self.jitter
        self.chol = cho_factor(K, lower=True)


def _rbf_kernel(X: np.ndarray, length_scale: float, signal_std: float) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.maximum(d2, 0.0, out=d2)
    return signal_std**2 * np.exp(-d2 / (2.0 * length_scale**2))


def gp_fit(
    X,
    y,
    length_scale: float,
    signal_std: float,
    noise_std: float,
    cap: int = 2000,
    seed: int = 0,
) -> GPModel:
    """Exact GP fit; rows beyond ``cap`` are dropped by a seeded subsample.

    The kernel matrix gets a jitter of 1e-8 on the diagonal, escalated by
    tens up to 1e-4 if the Cholesky factorization fails.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if length_scale <= 0 or signal_std <= 0:
        raise ValueError("length_scale and signal_std must be positive")
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    n = X.shape[0]
    if n > cap:
        rng = Xorshift64Star(seed)
        keep = rng.sample_without_replacement(n, cap)  # sorted: keeps time order
        X, y = X[keep], y[keep]
        n = cap
    x_mean = X.mean(axis=0)
    x_std = X.std(axis=0)
    x_std[x_std < 1e-12] = 1.0
    Xs = (X - x_mean) / x_std
    y_mean = float(y.mean())
    yc = y - y_mean
    K = _rbf_kernel(Xs, length_scale, signal_std)
    diag = np.diag_indices_from(K)
    chol = None
    jitter_used = JITTER_LADDER[-1]
    for jitter in JITTER_LADDER:
        Kj = K.copy()
        Kj[diag] += noise_std**2 + jitter
        try:
            chol = cho_factor(Kj, lower=True)
            jitter_used = jitter
            break
        except LinAlgError:
            continue
    if chol is None:
        raise ValueError(f"kernel matrix not positive definite at max jitter {JITTER_LADDER[-1]}")
    alpha = cho_solve(chol, yc)
    return GPModel(
        x_mean=x_mean,
        x_std=x_std,
        x_train=Xs,
        y_mean=y_mean,
        alpha=alpha,
        length_scale=float(length_scale),
        signal_std=float(signal_std),
        noise_std=float(noise_std),
        jitter=jitter_used,
        chol=chol,
    )


def gp_predict(model: GPModel, x) -> tuple[float, float]:
    """Posterior (mean, variance) at a single point."""
    mean, var = model.predict_with_variance(np.asarray(x, dtype=np.float64)[None, :])
    return float(mean[0]), float(var[0])


def _median_pairwise_distance(X: np.ndarray, rng: Xorshift64Star, max_rows: int = 400) -> float:
    n = X.shape[0]
    if n > max_rows:
        X = X[rng.sample_without_replacement(n, max_rows)]
    sq = (X * X).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.maximum(d2, 0.0, out=d2)
    vals = np.sqrt(d2[np.triu_indices_from(d2, k=1)])
    med = float(np.median(vals)) if vals.size else 1.0
    return med if med > 1e-9 else 1.0


def gp_fit_auto(
    X,
    y,
    seed: int,
    cap: int = 2000,
    tune_frac: float = 0.2,
    length_scale_multipliers=(0.5, 1.0, 2.0, 4.0),
    noise_fracs=(0.01, 0.1, 0.5),
) -> GPModel:
    """Grid-searched GP: length scale over multiples of the median pairwise
    distance, noise over fractions of std(y), scored by MAE on the last
    ``tune_frac`` of the rows (time order preserved), then refit on all rows.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    n_tune = max(1, int(round(tune_frac * n)))
    if n_tune >= n:
        n_tune = n - 1 if n > 1 else 0
    X_fit, y_fit = X[: n - n_tune], y[: n - n_tune]
    X_tune, y_tune = X[n - n_tune :], y[n - n_tune :]
    rng = Xorshift64Star(seed)
    mu = X_fit.mean(axis=0)
    sd = X_fit.std(axis=0)
    sd[sd < 1e-12] = 1.0
    med = _median_pairwise_distance((X_fit - mu) / sd, rng)
    y_std = float(y_fit.std())
    signal = y_std if y_std > 1e-9 else 1.0
    if n_tune == 0:
        return gp_fit(X, y, med, signal, noise_fracs[1] * signal, cap=cap, seed=seed)
    best = None  # (mae, ls, noise)
    for m in length_scale_multipliers:
        for nf in noise_fracs:
            ls = m * med
            noise = nf * signal
            model = gp_fit(X_fit, y_fit, ls, signal, noise, cap=cap, seed=seed)
            mae = float(np.abs(model.predict(X_tune) - y_tune).mean())
            if best is None or mae < best[0]:
                best = (mae, ls, noise)
    return gp_fit(X, y, best[1], signal, best[2], cap=cap, seed=seed)
