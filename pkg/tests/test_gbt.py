from __future__ import annotations

import json

import numpy as np
import pytest

from agentprint.errors import TrainError
from agentprint.models import (
    GbtConfig,
    save_model,
    softmax_grad_hess,
    softmax_loss,
    train_gbt,
)
from agentprint.trace import LabeledDataset
from conftest import nearest_centroid_accuracy

CFG = GbtConfig(n_estimators=60, learning_rate=0.2, max_depth=4)


class TestTraining:
    def test_blob_training_accuracy(self, blobs):
        assert nearest_centroid_accuracy(blobs) >= 0.99  # separability oracle
        model = train_gbt(blobs, CFG, seed=1)
        acc = float((model.predict(blobs.X) == blobs.y).mean())
        assert acc >= 0.99

    def test_one_row_per_class_rejected(self):
        ds = LabeledDataset(X=np.eye(3), y=np.arange(3), class_names=("a", "b", "c"), split="train")
        with pytest.raises(TrainError):
            train_gbt(ds, CFG, seed=0)

    def test_single_class_rejected(self):
        ds = LabeledDataset(X=np.zeros((4, 2)), y=np.zeros(4, int), class_names=("a",), split="train")
        with pytest.raises(TrainError):
            train_gbt(ds, CFG, seed=0)

    def test_same_seed_bit_identical_serialization(self, blobs, tmp_path):
        cfg = GbtConfig(n_estimators=25, max_depth=4, subsample=0.8, colsample_bytree=0.5)
        for i, out in enumerate(("a.json", "b.json")):
            save_model(train_gbt(blobs, cfg, seed=7), tmp_path / out)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_all_missing_feature_never_split_on(self, blobs):
        X = blobs.X.copy()
        X = np.hstack([X, np.full((X.shape[0], 1), np.nan)])
        ds = LabeledDataset(X=X, y=blobs.y, class_names=blobs.class_names, split="train")
        model = train_gbt(ds, CFG, seed=2)
        dead = X.shape[1] - 1
        for per_class in model.trees:
            for t in per_class:
                assert not np.any(t.feat == dead)

    def test_missing_values_routed_and_learnable(self):
        # one informative feature, missing at random for one class
        rng = np.random.default_rng(3)
        X = np.concatenate([rng.normal(0, 1, 120), rng.normal(6, 1, 120)]).reshape(-1, 1)
        y = np.repeat([0, 1], 120)
        X[rng.random(240) < 0.3, 0] = np.nan
        ds = LabeledDataset(X=X, y=y, class_names=("lo", "hi"), split="train")
        model = train_gbt(ds, GbtConfig(n_estimators=40, max_depth=3), seed=4)
        acc = float((model.predict(X) == y).mean())
        assert acc >= 0.85

    def test_duplicating_rows_never_hurts_them(self):
        # a clump initially lost inside the other class's territory
        rng = np.random.default_rng(5)
        X0 = rng.normal(0.0, 1.0, size=(80, 2))
        X1 = rng.normal(3.0, 1.0, size=(80, 2))
        clump = rng.normal(2.8, 0.15, size=(6, 2))  # labeled 0 but sits in class 1
        X = np.vstack([X0, clump, X1])
        y = np.asarray([0] * 86 + [1] * 80)
        names = ("a", "b")
        cfg = GbtConfig(n_estimators=40, max_depth=3)
        base = train_gbt(LabeledDataset(X=X, y=y, class_names=names, split="train"), cfg, seed=6)
        base_acc = float((base.predict(clump) == 0).mean())
        X_dup = np.vstack([X, np.tile(clump, (10, 1))])
        y_dup = np.concatenate([y, np.zeros(60, int)])
        dup = train_gbt(LabeledDataset(X=X_dup, y=y_dup, class_names=names, split="train"), cfg, seed=6)
        dup_acc = float((dup.predict(clump) == 0).mean())
        assert dup_acc >= base_acc

    def test_monotone_transform_stump_invariance(self, blobs):
        cfg = GbtConfig(n_estimators=10, max_depth=1)
        base = train_gbt(blobs, cfg, seed=8)
        X2 = blobs.X.copy()
        X2[:, 0] = np.exp(X2[:, 0] / 4.0)  # strictly monotone
        ds2 = LabeledDataset(X=X2, y=blobs.y, class_names=blobs.class_names, split="train")
        refit = train_gbt(ds2, cfg, seed=8)
        np.testing.assert_array_equal(base.predict(blobs.X), refit.predict(X2))


class TestNumerics:
    def test_grad_hess_match_finite_differences(self):
        rng = np.random.default_rng(12)
        logits = rng.normal(0, 2, size=(40, 6))
        y = np.zeros((40, 6))
        y[np.arange(40), rng.integers(0, 6, 40)] = 1.0
        grad, hess = softmax_grad_hess(logits, y)
        eps = 1e-4
        for i in range(0, 40, 7):
            for k in range(6):
                zp, zm = logits.copy(), logits.copy()
                zp[i, k] += eps
                zm[i, k] -= eps
                lp = softmax_loss(zp[i : i + 1], y[i : i + 1])
                lm = softmax_loss(zm[i : i + 1], y[i : i + 1])
                l0 = softmax_loss(logits[i : i + 1], y[i : i + 1])
                g_fd = (lp - lm) / (2 * eps)
                h_fd = (lp - 2 * l0 + lm) / (eps * eps)
                assert g_fd == pytest.approx(grad[i, k], rel=1e-3, abs=1e-6)
                assert h_fd == pytest.approx(hess[i, k], rel=1e-3, abs=1e-6)

    def test_predict_proba_rows_sum_to_one(self, blobs):
        model = train_gbt(blobs, CFG, seed=1)
        rng = np.random.default_rng(0)
        X = rng.normal(0, 10, size=(200, 2))
        p = model.predict_proba(X)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)

    def test_argmax_tie_breaks_to_lowest_index(self):
        p = np.array([[0.4, 0.4, 0.2]])
        assert int(np.argmax(p, axis=1)[0]) == 0

    def test_degenerate_zero_round_model_is_uniform(self, blobs):
        model = train_gbt(blobs, GbtConfig(n_estimators=0), seed=1)
        p = model.predict_proba(blobs.X[:5])
        np.testing.assert_allclose(p, 1.0 / 3.0, atol=1e-12)
        np.testing.assert_array_equal(model.predict(blobs.X[:5]), 0)  # lowest-index ties

    def test_l1_regularization_prunes_leaves(self, blobs):
        strong = train_gbt(blobs, GbtConfig(n_estimators=10, max_depth=3, reg_alpha=50.0), seed=3)
        weak = train_gbt(blobs, GbtConfig(n_estimators=10, max_depth=3, reg_alpha=0.0), seed=3)

        def leaf_values(m):
            return np.concatenate(
                [t.value[t.feat < 0] for per_class in m.trees for t in per_class]
            )

        assert np.mean(np.abs(leaf_values(strong))) < np.mean(np.abs(leaf_values(weak)))
