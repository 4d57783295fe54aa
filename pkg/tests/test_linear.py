from __future__ import annotations

import numpy as np
import pytest

from agentprint.errors import TrainError
from agentprint.models import LinearConfig, Standardizer, train_linear
from agentprint.trace import LabeledDataset
from conftest import blob_dataset


class TestStandardizer:
    def test_train_columns_normalized(self):
        rng = np.random.default_rng(0)
        X = rng.normal(5, 3, size=(200, 4))
        X[:, 2] = 7.0  # constant column
        X[rng.random((200, 4)) < 0.1] = np.nan
        X[:, 2] = 7.0
        s = Standardizer().fit(X)
        Z = s.transform(X)
        assert np.all(np.isfinite(Z))
        for j in (0, 1, 3):
            assert abs(Z[:, j].mean()) < 1e-9
            assert abs(Z[:, j].std() - 1.0) < 1e-9
        np.testing.assert_array_equal(Z[:, 2], 0.0)

    def test_imputation_uses_train_median(self):
        X = np.array([[1.0], [3.0], [np.nan], [100.0]])
        s = Standardizer().fit(X)
        assert s.impute[0] == 3.0

    def test_transform_before_fit_raises(self):
        with pytest.raises(TrainError):
            Standardizer().transform(np.zeros((2, 2)))


class TestTraining:
    def test_unregularized_separable_reaches_full_accuracy(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(-2, 0.5, size=(60, 2)), rng.normal(2, 0.5, size=(60, 2))])
        y = np.repeat([0, 1], 60)
        ds = LabeledDataset(X=X, y=y, class_names=("a", "b"), split="train")
        model = train_linear(ds, LinearConfig(penalty="l2", C=1e6))
        assert float((model.predict(X) == y).mean()) == 1.0

    def test_l1_strong_penalty_produces_exact_zeros(self):
        ds = blob_dataset(n_per_class=100, seed=2, n_features=12)  # 2 informative + 10 noise
        model = train_linear(ds, LinearConfig(penalty="l1", C=0.01))
        frac_zero = float((model.coef == 0.0).mean())
        assert frac_zero >= 0.5
        assert float((model.predict(ds.X) == ds.y).mean()) >= 0.8

    def test_two_class_multinomial_matches_sigmoid(self):
        rng = np.random.default_rng(3)
        X = np.vstack([rng.normal(-1, 1, size=(80, 3)), rng.normal(1, 1, size=(80, 3))])
        y = np.repeat([0, 1], 80)
        ds = LabeledDataset(X=X, y=y, class_names=("a", "b"), split="train")
        model = train_linear(ds, LinearConfig(penalty="l2", C=1.0))
        Z = model.decision_function(X)
        p_softmax = model.predict_proba(X)[:, 1]
        p_sigmoid = 1.0 / (1.0 + np.exp(Z[:, 0] - Z[:, 1]))
        np.testing.assert_allclose(p_softmax, p_sigmoid, atol=1e-6)

    def test_all_nan_feature_named_in_error(self):
        X = np.random.default_rng(4).normal(size=(30, 3))
        X[:, 1] = np.nan
        ds = LabeledDataset(X=X, y=np.arange(30) % 2, class_names=("a", "b"), split="train")
        with pytest.raises(TrainError, match="column 1"):
            train_linear(ds, LinearConfig())

    def test_iteration_cap_respected(self, blobs):
        model = train_linear(blobs, LinearConfig(penalty="l2", C=10.0))
        assert model.n_iter <= 5000

    def test_proba_rows_sum_to_one(self, blobs):
        model = train_linear(blobs, LinearConfig())
        p = model.predict_proba(blobs.X)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)

    def test_deterministic(self, blobs):
        a = train_linear(blobs, LinearConfig(penalty="l1", C=0.5))
        b = train_linear(blobs, LinearConfig(penalty="l1", C=0.5))
        np.testing.assert_array_equal(a.coef, b.coef)


class TestConfig:
    def test_bad_penalty_rejected(self):
        with pytest.raises(ValueError):
            LinearConfig(penalty="elastic")

    def test_nonpositive_c_rejected(self):
        with pytest.raises(ValueError):
            LinearConfig(C=0.0)
