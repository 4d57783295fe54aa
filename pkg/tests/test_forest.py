from __future__ import annotations

import numpy as np
import pytest

from agentprint.errors import TrainError
from agentprint.models import ForestConfig, resolve_max_features, train_forest
from agentprint.trace import LabeledDataset
from conftest import nearest_centroid_accuracy


class TestTraining:
    def test_blob_training_accuracy(self, blobs):
        assert nearest_centroid_accuracy(blobs) >= 0.99
        model = train_forest(blobs, ForestConfig(n_estimators=80), seed=1)
        acc = float((model.predict(blobs.X) == blobs.y).mean())
        assert acc >= 0.99

    def test_one_row_per_class_rejected(self):
        ds = LabeledDataset(X=np.eye(3), y=np.arange(3), class_names=("a", "b", "c"), split="train")
        with pytest.raises(TrainError):
            train_forest(ds, ForestConfig(n_estimators=5), seed=0)

    def test_same_seed_bit_identical_serialization(self, blobs, tmp_path):
        from agentprint.models import save_model

        cfg = ForestConfig(n_estimators=20, max_features=0.4)
        a = train_forest(blobs, cfg, seed=9)
        b = train_forest(blobs, cfg, seed=9)
        X = np.random.default_rng(1).normal(0, 4, size=(100, 2))
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))
        save_model(a, tmp_path / "a.json")
        save_model(b, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_depth_one_cannot_learn_xor(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(-1, 1, size=(400, 2))
        y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
        # brute force: the best single axis-aligned split cannot beat 75%
        best = 0.0
        for f in range(2):
            for thr in np.linspace(-1, 1, 201):
                pred = (X[:, f] > thr).astype(int)
                best = max(best, (pred == y).mean(), (1 - pred == y).mean())
        assert best <= 0.75
        ds = LabeledDataset(X=X, y=y, class_names=("even", "odd"), split="train")
        stumps = train_forest(ds, ForestConfig(n_estimators=40, max_depth=1, max_features=1.0), seed=5)
        acc = float((stumps.predict(X) == y).mean())
        assert acc <= 0.75
        deep = train_forest(ds, ForestConfig(n_estimators=40, max_depth=None), seed=5)
        assert float((deep.predict(X) == y).mean()) >= 0.95

    def test_missing_values_handled(self):
        rng = np.random.default_rng(6)
        X = np.concatenate([rng.normal(0, 1, 150), rng.normal(6, 1, 150)]).reshape(-1, 1)
        y = np.repeat([0, 1], 150)
        X[rng.random(300) < 0.25, 0] = np.nan
        ds = LabeledDataset(X=X, y=y, class_names=("lo", "hi"), split="train")
        model = train_forest(ds, ForestConfig(n_estimators=30, max_features=1.0), seed=7)
        assert float((model.predict(X) == y).mean()) >= 0.85

    def test_proba_rows_sum_to_one(self, blobs):
        model = train_forest(blobs, ForestConfig(n_estimators=15), seed=2)
        p = model.predict_proba(blobs.X)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


class TestMaxFeatures:
    def test_sqrt_of_41_is_6(self):
        assert resolve_max_features("sqrt", 41) == 6

    def test_log2_of_41_is_5(self):
        assert resolve_max_features("log2", 41) == 5

    def test_fraction(self):
        assert resolve_max_features(0.4, 41) == 16

    def test_at_least_one(self):
        assert resolve_max_features(0.01, 41) == 1

    def test_split_considers_exactly_m_features(self, blobs):
        # with max_features=1 and 2 informative features, trees must differ
        # in their root feature across the forest
        model = train_forest(blobs, ForestConfig(n_estimators=30, max_features=1), seed=3)
        roots = {int(t.feat[0]) for t in model.trees if t.feat[0] >= 0}
        assert roots == {0, 1}
