from __future__ import annotations

import json

import numpy as np
import pytest

from agentprint.errors import ModelFormatError
from agentprint.models import (
    ForestConfig,
    GbtConfig,
    LinearConfig,
    load_model,
    save_model,
    train_forest,
    train_gbt,
    train_linear,
)
from conftest import blob_dataset


@pytest.fixture(scope="module")
def ds():
    return blob_dataset(n_per_class=40, seed=3)


@pytest.mark.parametrize(
    "train_fn,cfg",
    [
        (train_gbt, GbtConfig(n_estimators=15, max_depth=3, subsample=0.8)),
        (train_forest, ForestConfig(n_estimators=10)),
        (train_linear, LinearConfig(penalty="l1", C=0.5)),
    ],
    ids=["gbt", "forest", "linear"],
)
def test_round_trip_preserves_predictions(train_fn, cfg, ds, tmp_path):
    model = train_fn(ds, cfg, 1)
    path = tmp_path / "m.json"
    save_model(model, path)
    loaded = load_model(path)
    X = np.random.default_rng(0).normal(0, 5, size=(100, ds.X.shape[1]))
    np.testing.assert_array_equal(model.predict_proba(X), loaded.predict_proba(X))
    assert loaded.class_names == model.class_names


def test_truncated_file_rejected(ds, tmp_path):
    path = tmp_path / "m.json"
    save_model(train_gbt(ds, GbtConfig(n_estimators=5), 1), path)
    path.write_bytes(path.read_bytes()[:200])
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_version_mismatch_rejected(ds, tmp_path):
    path = tmp_path / "m.json"
    save_model(train_gbt(ds, GbtConfig(n_estimators=5), 1), path)
    doc = json.loads(path.read_text())
    doc["version"] = 999
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(path)


def test_catalog_hash_mismatch_rejected(ds, tmp_path):
    path = tmp_path / "m.json"
    save_model(train_forest(ds, ForestConfig(n_estimators=3), 1), path)
    doc = json.loads(path.read_text())
    doc["catalog_hash"] = "0" * 64
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="catalog"):
        load_model(path)


def test_wrong_magic_rejected(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"magic": "something-else"}))
    with pytest.raises(ModelFormatError, match="magic"):
        load_model(path)
