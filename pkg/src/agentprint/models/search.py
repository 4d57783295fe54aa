"""Hyperparameter search spaces and cross-validated selection.

The spaces are fixed:
  random forest  exhaustive grid, 2x3x3x2 = 36 configurations
  boosted trees  40 randomized draws from the per-parameter value lists
  logistic reg.  C grid {0.01, 0.1, 1.0, 10.0}

Selection is by mean 3-fold CV accuracy with ties broken by enumeration
order; the winning config is refit on the full training split.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import TrainError
from ..trace import LabeledDataset
from .base import Model

__all__ = [
    "SearchSpace",
    "SearchResult",
    "rf_search_space",
    "gbt_search_space",
    "linear_search_space",
    "stratified_folds",
    "cross_validated_search",
]

Trainer = Callable[[LabeledDataset, Mapping, int], Model]

RF_GRID: Mapping[str, Sequence] = {
    "n_estimators": (200, 400),
    "max_depth": (None, 15, 30),
    "max_features": ("sqrt", "log2", 0.4),
    "min_samples_split": (2, 5),
}

GBT_GRID: Mapping[str, Sequence] = {
    "n_estimators": (100, 200, 300, 400, 500),
    "learning_rate": (0.01, 0.05, 0.1, 0.2, 0.3),
    "max_depth": (3, 4, 5, 6, 7, 8),
    "subsample": (0.6, 0.7, 0.8, 0.9, 1.0),
    "colsample_bytree": (0.5, 0.6, 0.7, 0.8, 1.0),
    "reg_alpha": (0.0, 0.01, 0.1, 1.0),
    "reg_lambda": (0.5, 1.0, 2.0, 5.0),
}

LR_C_GRID = (0.01, 0.1, 1.0, 10.0)
GBT_RANDOM_DRAWS = 40


@dataclass(frozen=True)
class SearchSpace:
    configs: tuple[Mapping, ...]
    folds: int = 3


@dataclass
class SearchResult:
    best_config: Mapping
    best_index: int
    best_score: float
    cv_scores: np.ndarray  # (n_configs, folds)
    model: Model
    n_fits: int = 0


def rf_search_space() -> SearchSpace:
    keys = tuple(RF_GRID)
    configs = tuple(
        dict(zip(keys, combo)) for combo in itertools.product(*(RF_GRID[k] for k in keys))
    )
    assert len(configs) == 36
    return SearchSpace(configs=configs)


def gbt_search_space(seed: int, n_draws: int = GBT_RANDOM_DRAWS) -> SearchSpace:
    rng = np.random.default_rng(seed)
    configs = []
    for _ in range(n_draws):
        configs.append({k: values[rng.integers(len(values))] for k, values in GBT_GRID.items()})
    return SearchSpace(configs=tuple(configs))


def linear_search_space(penalty: str) -> SearchSpace:
    return SearchSpace(configs=tuple({"penalty": penalty, "C": c} for c in LR_C_GRID))


def stratified_folds(y: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Deterministic per-class round-robin fold assignment."""
    fold_of = np.empty(len(y), dtype=np.int64)
    rng = np.random.default_rng(seed)
    for c in range(int(y.max()) + 1 if len(y) else 0):
        idx = np.flatnonzero(y == c)
        if 0 < len(idx) < folds:
            raise TrainError(f"class index {c} has {len(idx)} rows, fewer than {folds} folds")
        idx = idx.copy()
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            fold_of[i] = j % folds
    return fold_of


def cross_validated_search(
    data: LabeledDataset,
    space: SearchSpace,
    trainer: Trainer,
    seed: int,
    threads: int = 1,
) -> SearchResult:
    """Pick the best config by mean fold accuracy and refit on all rows."""
    if len(data) == 0:
        raise TrainError("empty training split")
    counts = np.bincount(data.y, minlength=data.n_classes)
    short = [data.class_names[i] for i in np.flatnonzero((counts > 0) & (counts < space.folds))]
    if short:
        raise TrainError(f"classes with fewer rows than folds: {', '.join(short)}")
    fold_of = stratified_folds(data.y, space.folds, seed)
    fold_sets = [
        (np.flatnonzero(fold_of != j), np.flatnonzero(fold_of == j)) for j in range(space.folds)
    ]

    jobs = [(ci, fi) for ci in range(len(space.configs)) for fi in range(space.folds)]
    scores = np.zeros((len(space.configs), space.folds))

    def run(job: tuple[int, int]) -> tuple[int, int, float]:
        ci, fi = job
        train_idx, val_idx = fold_sets[fi]
        model = trainer(data.subset(train_idx), space.configs[ci], seed)
        pred = model.predict(data.X[val_idx])
        return ci, fi, float(np.mean(pred == data.y[val_idx]))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for ci, fi, acc in pool.map(run, jobs):
                scores[ci, fi] = acc
    else:
        for job in jobs:
            ci, fi, acc = run(job)
            scores[ci, fi] = acc

    means = scores.mean(axis=1)
    best_index = 0
    for ci in range(1, len(space.configs)):
        if means[ci] > means[best_index]:
            best_index = ci
    best_config = space.configs[best_index]
    model = trainer(data, best_config, seed)
    return SearchResult(
        best_config=best_config,
        best_index=best_index,
        best_score=float(means[best_index]),
        cv_scores=scores,
        model=model,
        n_fits=len(jobs),
    )
