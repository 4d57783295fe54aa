"""Tabular classifiers: boosted trees, random forest, logistic regression."""

from .base import Model, validate_trainable
from .forest import ForestConfig, ForestModel, resolve_max_features, train_forest
from .gbt import GbtConfig, GbtModel, softmax, softmax_grad_hess, softmax_loss, train_gbt
from .linear import LinearConfig, LinearModel, Standardizer, train_linear
from .persist import FORMAT_VERSION, MAGIC, load_model, save_model
from .search import (
    GBT_GRID,
    GBT_RANDOM_DRAWS,
    LR_C_GRID,
    RF_GRID,
    SearchResult,
    SearchSpace,
    cross_validated_search,
    gbt_search_space,
    linear_search_space,
    rf_search_space,
    stratified_folds,
)

__all__ = [
    "Model",
    "validate_trainable",
    "ForestConfig",
    "ForestModel",
    "train_forest",
    "resolve_max_features",
    "GbtConfig",
    "GbtModel",
    "train_gbt",
    "softmax",
    "softmax_grad_hess",
    "softmax_loss",
    "LinearConfig",
    "LinearModel",
    "Standardizer",
    "train_linear",
    "save_model",
    "load_model",
    "MAGIC",
    "FORMAT_VERSION",
    "SearchSpace",
    "SearchResult",
    "cross_validated_search",
    "rf_search_space",
    "gbt_search_space",
    "linear_search_space",
    "stratified_folds",
    "RF_GRID",
    "GBT_GRID",
    "LR_C_GRID",
    "GBT_RANDOM_DRAWS",
]


def predict_proba(model: Model, x):
    """Class probabilities for one feature vector or a matrix of rows."""
    return model.predict_proba(x)


def predict(model: Model, x):
    """Argmax class index with lowest-index tie-break."""
    return model.predict(x)
