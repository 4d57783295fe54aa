"""Multinomial logistic regression (L2 or L1) trained by proximal gradient.

Inputs are median-imputed and z-scored with statistics from the training
rows only. The optimizer is FISTA with backtracking-free steps from a power
iteration Lipschitz bound; the L1 penalty enters through soft-thresholding,
which produces exact zeros.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import TrainError
from ..features import FEATURE_NAMES
from ..trace import LabeledDataset
from .base import Model, as_matrix, validate_trainable
from .gbt import softmax

__all__ = ["Standardizer", "LinearConfig", "LinearModel", "train_linear"]

MAX_ITER = 5000
TOL = 1e-6


@dataclass
class Standardizer:
    """Median imputation followed by z-scoring, fit on training rows only."""

    impute: np.ndarray | None = None
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        with np.errstate(all="ignore"):
            import warnings as _w

            with _w.catch_warnings():
                _w.simplefilter("ignore", RuntimeWarning)  # all-NaN columns stay NaN
                self.impute = np.nanmedian(X, axis=0)
        filled = self._fill(X)
        self.mean = filled.mean(axis=0)
        std = filled.std(axis=0)
        std[std == 0.0] = 1.0  # constant columns map to 0
        self.std = std
        return self

    def _fill(self, X: np.ndarray) -> np.ndarray:
        return np.where(np.isnan(X), self.impute, X)

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.impute is None:
            raise TrainError("standardizer used before fit")
        return (self._fill(np.asarray(X, dtype=np.float64)) - self.mean) / self.std

    def to_params(self) -> dict:
        return {
            "impute": self.impute.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_params(cls, params: dict) -> "Standardizer":
        return cls(
            impute=np.asarray(params["impute"], np.float64),
            mean=np.asarray(params["mean"], np.float64),
            std=np.asarray(params["std"], np.float64),
        )


@dataclass(frozen=True)
class LinearConfig:
    penalty: str = "l2"  # "l2" | "l1"
    C: float = 1.0

    def __post_init__(self):
        if self.penalty not in ("l1", "l2"):
            raise ValueError(f"penalty must be l1 or l2, got {self.penalty!r}")
        if self.C <= 0:
            raise ValueError("C must be positive")


class LinearModel(Model):
    model_type = "linear"

    def __init__(self, class_names, config: LinearConfig, scaler: Standardizer, coef: np.ndarray, intercept: np.ndarray, n_iter: int = 0):
        super().__init__(class_names)
        self.config = config
        self.scaler = scaler
        self.coef = coef  # (d, K)
        self.intercept = intercept  # (K,)
        self.n_iter = n_iter

    def decision_function(self, X) -> np.ndarray:
        Z = self.scaler.transform(as_matrix(X))
        return Z @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def to_params(self) -> dict:
        return {
            "config": asdict(self.config),
            "scaler": self.scaler.to_params(),
            "coef": self.coef.tolist(),
            "intercept": self.intercept.tolist(),
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_params(cls, class_names, params: dict) -> "LinearModel":
        return cls(
            tuple(class_names),
            LinearConfig(**params["config"]),
            Standardizer.from_params(params["scaler"]),
            np.asarray(params["coef"], np.float64),
            np.asarray(params["intercept"], np.float64),
            params.get("n_iter", 0),
        )


def _column_name(i: int, n_features: int) -> str:
    if n_features == len(FEATURE_NAMES):
        return FEATURE_NAMES[i]
    return f"column {i}"


def _lipschitz(A: np.ndarray) -> float:
    """Upper bound on the softmax-CE smoothness constant via power iteration."""
    v = np.ones(A.shape[1])
    v /= np.linalg.norm(v)
    s = 1.0
    for _ in range(60):
        w = A.T @ (A @ v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 1.0
        v = w / s
    return 0.5 * s  # hessian of softmax CE is bounded by (1/2) A^T A


def train_linear(data: LabeledDataset, config: LinearConfig | None = None, seed: int = 0) -> LinearModel:
    """Fit multinomial logistic regression; deterministic (seed unused)."""
    del seed  # optimization is deterministic; kept for trainer-interface parity
    config = config or LinearConfig()
    validate_trainable(data, min_rows_per_class=1)
    scaler = Standardizer().fit(data.X)
    Z = scaler.transform(data.X)
    bad = np.flatnonzero(~np.isfinite(Z).all(axis=0))
    if bad.size:
        names = ", ".join(_column_name(int(i), Z.shape[1]) for i in bad)
        raise TrainError(f"non-finite feature(s) after standardization: {names}")

    n, d = Z.shape
    K = data.n_classes
    Y = np.zeros((n, K))
    Y[np.arange(n), data.y] = 1.0
    lam = 1.0 / config.C

    L = _lipschitz(np.hstack([Z, np.ones((n, 1))]))
    if config.penalty == "l2":
        L += lam
    step = 1.0 / max(L, 1e-12)

    W = np.zeros((d, K))
    b = np.zeros(K)
    Wm, bm = W.copy(), b.copy()  # momentum iterates
    t_momentum = 1.0
    n_iter = 0
    for n_iter in range(1, MAX_ITER + 1):
        P = softmax(Z @ Wm + bm)
        R = P - Y
        gW = Z.T @ R
        gb = R.sum(axis=0)
        if config.penalty == "l2":
            gW = gW + lam * Wm
        W_new = Wm - step * gW
        if config.penalty == "l1":
            thresh = step * lam
            W_new = np.sign(W_new) * np.maximum(np.abs(W_new) - thresh, 0.0)
        b_new = bm - step * gb

        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_momentum * t_momentum))
        beta = (t_momentum - 1.0) / t_next
        Wm = W_new + beta * (W_new - W)
        bm = b_new + beta * (b_new - b)
        t_momentum = t_next

        delta = max(np.max(np.abs(W_new - W)), np.max(np.abs(b_new - b)))
        W, b = W_new, b_new
        if delta < TOL:
            break

    return LinearModel(data.class_names, config, scaler, W, b, n_iter)
