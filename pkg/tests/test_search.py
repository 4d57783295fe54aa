from __future__ import annotations

import numpy as np
import pytest

from agentprint.errors import TrainError
from agentprint.models import (
    GBT_GRID,
    GbtConfig,
    LR_C_GRID,
    RF_GRID,
    SearchSpace,
    cross_validated_search,
    gbt_search_space,
    linear_search_space,
    rf_search_space,
    stratified_folds,
    train_forest,
    train_gbt,
    ForestConfig,
)
from agentprint.trace import LabeledDataset
from conftest import blob_dataset


def counting_trainer(train_fn, config_cls, calls):
    def trainer(ds, cfg, seed):
        calls.append(cfg)
        return train_fn(ds, config_cls(**cfg), seed)

    return trainer


def small_blobs():
    return blob_dataset(n_per_class=12, centers=((0, 0), (4, 4), (0, 5)), spread=0.6, seed=1)


class TestSpaces:
    def test_rf_grid_has_36_configs(self):
        space = rf_search_space()
        assert len(space.configs) == 36
        assert space.folds == 3
        seen = {tuple(sorted(c.items())) for c in space.configs}
        assert len(seen) == 36
        for c in space.configs:
            assert c["n_estimators"] in RF_GRID["n_estimators"]
            assert c["max_depth"] in RF_GRID["max_depth"]

    def test_gbt_space_draws_40(self):
        space = gbt_search_space(seed=5)
        assert len(space.configs) == 40
        for c in space.configs:
            for k, values in GBT_GRID.items():
                assert c[k] in values

    def test_gbt_space_seeded(self):
        assert gbt_search_space(3).configs == gbt_search_space(3).configs
        assert gbt_search_space(3).configs != gbt_search_space(4).configs

    def test_lr_grid(self):
        space = linear_search_space("l1")
        assert tuple(c["C"] for c in space.configs) == LR_C_GRID
        assert all(c["penalty"] == "l1" for c in space.configs)


class TestFolds:
    def test_deterministic_and_stratified(self):
        y = np.asarray([0] * 9 + [1] * 6)
        a = stratified_folds(y, 3, seed=2)
        b = stratified_folds(y, 3, seed=2)
        np.testing.assert_array_equal(a, b)
        for c in (0, 1):
            counts = np.bincount(a[y == c], minlength=3)
            assert counts.max() - counts.min() <= 1

    def test_too_few_rows_per_class(self):
        y = np.asarray([0, 0, 0, 1, 1])
        with pytest.raises(TrainError):
            stratified_folds(y, 3, seed=0)


class TestSearch:
    def test_rf_space_runs_108_fits(self):
        ds = small_blobs()
        calls = []
        trainer = counting_trainer(train_forest, ForestConfig, calls)
        result = cross_validated_search(ds, rf_search_space(), trainer, seed=3)
        assert result.n_fits == 36 * 3
        assert len(calls) == 36 * 3 + 1  # plus the refit
        assert result.cv_scores.shape == (36, 3)

    def test_gbt_space_runs_120_fits(self):
        ds = small_blobs()
        small = SearchSpace(configs=tuple(
            {**c, "n_estimators": 10} for c in gbt_search_space(seed=1).configs
        ))
        calls = []
        trainer = counting_trainer(train_gbt, GbtConfig, calls)
        result = cross_validated_search(ds, small, trainer, seed=3)
        assert result.n_fits == 40 * 3
        assert len(calls) == 121

    def test_tie_breaks_to_first_enumerated(self):
        ds = small_blobs()

        class Stub:
            def __init__(self, tag):
                self.tag = tag
                self.class_names = ds.class_names

            def predict(self, X):
                return np.zeros(len(X), dtype=np.int64)  # same accuracy for all configs

        trainer = lambda d, cfg, seed: Stub(cfg["tag"])
        space = SearchSpace(configs=({"tag": "first"}, {"tag": "second"}))
        result = cross_validated_search(ds, space, trainer, seed=1)
        assert result.best_index == 0
        assert result.model.tag == "first"

    def test_class_smaller_than_folds_rejected(self):
        X = np.random.default_rng(0).normal(size=(8, 2))
        y = np.asarray([0, 0, 0, 0, 0, 0, 1, 1])
        ds = LabeledDataset(X=X, y=y, class_names=("a", "b"), split="train")
        trainer = lambda d, cfg, seed: None
        with pytest.raises(TrainError, match="b"):
            cross_validated_search(ds, SearchSpace(configs=({},)), trainer, seed=0)

    def test_threaded_equals_serial(self):
        ds = small_blobs()
        space = SearchSpace(configs=tuple(
            {"n_estimators": 10, "max_depth": d, "max_features": 1.0, "min_samples_split": 2}
            for d in (1, 3, None)
        ))
        trainer = lambda d, cfg, seed: train_forest(d, ForestConfig(**cfg), seed)
        serial = cross_validated_search(ds, space, trainer, seed=5, threads=1)
        threaded = cross_validated_search(ds, space, trainer, seed=5, threads=4)
        np.testing.assert_array_equal(serial.cv_scores, threaded.cv_scores)
        assert serial.best_index == threaded.best_index

    def test_selects_config_that_wins_cv(self):
        ds = small_blobs()
        space = SearchSpace(configs=(
            {"n_estimators": 1, "max_depth": 1, "max_features": 1.0, "min_samples_split": 12},
            {"n_estimators": 40, "max_depth": None, "max_features": 1.0, "min_samples_split": 2},
        ))
        trainer = lambda d, cfg, seed: train_forest(d, ForestConfig(**cfg), seed)
        result = cross_validated_search(ds, space, trainer, seed=7)
        assert result.best_index == 1
