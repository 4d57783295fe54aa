"""Shared classifier interface and input validation."""

from __future__ import annotations

import numpy as np

from ..errors import TrainError
from ..trace import FeatureVector, LabeledDataset

__all__ = ["Model", "as_matrix", "validate_trainable"]


def as_matrix(X) -> np.ndarray:
    """Accept a FeatureVector, a single row, or an (n, d) matrix."""
    if isinstance(X, FeatureVector):
        return X.values.reshape(1, -1)
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    return arr


def validate_trainable(data: LabeledDataset, min_rows_per_class: int = 2) -> None:
    if data.n_classes < 2:
        raise TrainError(f"need at least 2 classes, got {data.n_classes}")
    counts = np.bincount(data.y, minlength=data.n_classes)
    lacking = [data.class_names[i] for i in np.flatnonzero(counts < min_rows_per_class)]
    if lacking:
        raise TrainError(
            f"need at least {min_rows_per_class} rows per class; short: {', '.join(lacking)}"
        )


class Model:
    """A trained classifier over the 41-feature catalog."""

    model_type: str = "base"

    def __init__(self, class_names: tuple[str, ...]):
        self.class_names = tuple(class_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def predict_proba(self, X) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)
