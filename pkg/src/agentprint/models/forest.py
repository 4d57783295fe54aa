"""Random forest: bootstrap sampling, Gini splits, per-node feature subsets."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..trace import LabeledDataset
from ._kernels import grow_tree_gini, presort_columns, tree_leaf_ids
from .base import Model, as_matrix, validate_trainable

__all__ = ["ForestConfig", "ForestModel", "train_forest", "resolve_max_features"]

# "unlimited" depth; trees stop on purity or min_samples_split long before
_NO_DEPTH_LIMIT = 2**31 - 1


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 400
    max_depth: int | None = None
    max_features: str | float = "sqrt"
    min_samples_split: int = 2


def resolve_max_features(spec: str | float | int, n_features: int) -> int:
    if spec == "sqrt":
        m = int(math.sqrt(n_features))
    elif spec == "log2":
        m = int(math.log2(n_features))
    elif isinstance(spec, float):
        m = int(spec * n_features)
    elif isinstance(spec, int):
        m = spec
    else:
        raise ValueError(f"unsupported max_features: {spec!r}")
    return max(1, min(m, n_features))


@dataclass(frozen=True)
class _GiniTree:
    feat: np.ndarray
    thr: np.ndarray
    miss_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    dist: np.ndarray  # (n_nodes, K) leaf class distributions


class ForestModel(Model):
    model_type = "forest"

    def __init__(self, class_names, config: ForestConfig, trees: list[_GiniTree]):
        super().__init__(class_names)
        self.config = config
        self.trees = trees

    def predict_proba(self, X) -> np.ndarray:
        X = as_matrix(X)
        Xt = np.ascontiguousarray(X.T, dtype=np.float64)
        acc = np.zeros((X.shape[0], self.n_classes))
        for t in self.trees:
            leaves = tree_leaf_ids(Xt, t.feat, t.thr, t.miss_left, t.left, t.right)
            acc += t.dist[leaves]
        return acc / len(self.trees)

    def to_params(self) -> dict:
        cfg = asdict(self.config)
        return {
            "config": cfg,
            "trees": [
                {
                    "feat": t.feat.tolist(),
                    "thr": t.thr.tolist(),
                    "miss_left": t.miss_left.astype(int).tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "dist": t.dist.tolist(),
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_params(cls, class_names, params: dict) -> "ForestModel":
        trees = [
            _GiniTree(
                feat=np.asarray(t["feat"], np.int64),
                thr=np.asarray(t["thr"], np.float64),
                miss_left=np.asarray(t["miss_left"], np.int64).astype(np.bool_),
                left=np.asarray(t["left"], np.int64),
                right=np.asarray(t["right"], np.int64),
                dist=np.asarray(t["dist"], np.float64),
            )
            for t in params["trees"]
        ]
        return cls(tuple(class_names), ForestConfig(**params["config"]), trees)


def train_forest(data: LabeledDataset, config: ForestConfig | None = None, seed: int = 0) -> ForestModel:
    """Fit a random forest. Deterministic given the seed."""
    config = config or ForestConfig()
    validate_trainable(data)
    X, y = data.X, data.y
    n, n_features = X.shape
    Xt, order, n_nonmiss = presort_columns(X)
    rng = np.random.default_rng(seed)
    m = resolve_max_features(config.max_features, n_features)
    depth = _NO_DEPTH_LIMIT if config.max_depth is None else config.max_depth

    trees: list[_GiniTree] = []
    labels = np.ascontiguousarray(y, dtype=np.int64)
    for _ in range(config.n_estimators):
        boot = rng.integers(0, n, size=n)
        weights = np.bincount(boot, minlength=n).astype(np.float64)
        node_seed = np.uint64(rng.integers(0, 2**63, dtype=np.int64))
        arrays = grow_tree_gini(
            Xt,
            order,
            n_nonmiss,
            labels,
            weights,
            data.n_classes,
            m,
            depth,
            float(config.min_samples_split),
            node_seed,
        )
        trees.append(_GiniTree(*arrays))
    return ForestModel(data.class_names, config, trees)
