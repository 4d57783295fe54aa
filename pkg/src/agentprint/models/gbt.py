"""Gradient-boosted trees with a multi-class softmax objective.

Boosting follows the second-order scheme: each round fits one regression
tree per class to the softmax gradient/hessian, with exact greedy splits
over sorted feature values, L1 (reg_alpha) and L2 (reg_lambda) shrinkage in
the leaf weights, per-tree row and column subsampling, and learned default
directions for missing values.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..trace import LabeledDataset
from ._kernels import add_tree_scores, grow_tree_gbt, presort_columns
from .base import Model, as_matrix, validate_trainable

__all__ = ["GbtConfig", "GbtModel", "train_gbt", "softmax", "softmax_loss", "softmax_grad_hess"]


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss(logits: np.ndarray, y_onehot: np.ndarray) -> float:
    """Total cross-entropy of softmax(logits) against one-hot targets."""
    z = logits - logits.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-(y_onehot * log_p).sum())


def softmax_grad_hess(logits: np.ndarray, y_onehot: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-logit gradient p - y and diagonal hessian p(1 - p)."""
    p = softmax(logits)
    return p - y_onehot, p * (1.0 - p)


@dataclass(frozen=True)
class GbtConfig:
    n_estimators: int = 300
    learning_rate: float = 0.1
    max_depth: int = 6
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    reg_alpha: float = 0.0
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    min_split_loss: float = 0.0


@dataclass(frozen=True)
class _Tree:
    feat: np.ndarray
    thr: np.ndarray
    miss_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


class GbtModel(Model):
    model_type = "gbt"

    def __init__(self, class_names, config: GbtConfig, trees: list[list[_Tree]]):
        super().__init__(class_names)
        self.config = config
        self.trees = trees  # [round][class]

    def raw_scores(self, X) -> np.ndarray:
        X = as_matrix(X)
        Xt = np.ascontiguousarray(X.T, dtype=np.float64)
        scores = np.zeros((X.shape[0], self.n_classes))
        for per_class in self.trees:
            for k, t in enumerate(per_class):
                add_tree_scores(Xt, t.feat, t.thr, t.miss_left, t.left, t.right, t.value, scores[:, k])
        return scores

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.raw_scores(X))

    def to_params(self) -> dict:
        return {
            "config": asdict(self.config),
            "trees": [
                [
                    {
                        "feat": t.feat.tolist(),
                        "thr": t.thr.tolist(),
                        "miss_left": t.miss_left.astype(int).tolist(),
                        "left": t.left.tolist(),
                        "right": t.right.tolist(),
                        "value": t.value.tolist(),
                    }
                    for t in per_class
                ]
                for per_class in self.trees
            ],
        }

    @classmethod
    def from_params(cls, class_names, params: dict) -> "GbtModel":
        trees = [
            [
                _Tree(
                    feat=np.asarray(t["feat"], np.int64),
                    thr=np.asarray(t["thr"], np.float64),
                    miss_left=np.asarray(t["miss_left"], np.int64).astype(np.bool_),
                    left=np.asarray(t["left"], np.int64),
                    right=np.asarray(t["right"], np.int64),
                    value=np.asarray(t["value"], np.float64),
                )
                for t in per_class
            ]
            for per_class in params["trees"]
        ]
        return cls(tuple(class_names), GbtConfig(**params["config"]), trees)


def train_gbt(data: LabeledDataset, config: GbtConfig | None = None, seed: int = 0) -> GbtModel:
    """Fit boosted trees on a labeled dataset. Deterministic given the seed."""
    config = config or GbtConfig()
    validate_trainable(data)
    X, y = data.X, data.y
    n, n_features = X.shape
    K = data.n_classes
    Xt, order, n_nonmiss = presort_columns(X)
    rng = np.random.default_rng(seed)

    Y = np.zeros((n, K))
    Y[np.arange(n), y] = 1.0
    scores = np.zeros((n, K))

    n_cols = max(1, int(round(config.colsample_bytree * n_features)))
    all_feats = np.arange(n_features, dtype=np.int64)

    trees: list[list[_Tree]] = []
    for _ in range(config.n_estimators):
        grad, hess = softmax_grad_hess(scores, Y)
        per_class: list[_Tree] = []
        for k in range(K):
            if config.subsample < 1.0:
                in_sample = rng.random(n) < config.subsample
                if not in_sample.any():
                    in_sample[int(rng.integers(n))] = True
            else:
                in_sample = np.ones(n, np.bool_)
            if n_cols < n_features:
                feats = np.sort(rng.choice(n_features, size=n_cols, replace=False)).astype(np.int64)
            else:
                feats = all_feats
            arrays = grow_tree_gbt(
                Xt,
                order,
                n_nonmiss,
                np.ascontiguousarray(grad[:, k]),
                np.ascontiguousarray(hess[:, k]),
                in_sample,
                feats,
                config.max_depth,
                config.reg_lambda,
                config.reg_alpha,
                config.min_split_loss,
                config.min_child_weight,
                config.learning_rate,
            )
            tree = _Tree(*arrays)
            add_tree_scores(Xt, tree.feat, tree.thr, tree.miss_left, tree.left, tree.right, tree.value, scores[:, k])
            per_class.append(tree)
        trees.append(per_class)
    return GbtModel(data.class_names, config, trees)
