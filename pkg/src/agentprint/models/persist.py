"""Versioned JSON model files with a catalog-hash compatibility check."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import ModelFormatError
from ..features import catalog_hash
from .base import Model
from .forest import ForestModel
from .gbt import GbtModel
from .linear import LinearModel

__all__ = ["save_model", "load_model", "MAGIC", "FORMAT_VERSION"]

MAGIC = "agentprint-model"
FORMAT_VERSION = 1

_TYPES: dict[str, type] = {
    "gbt": GbtModel,
    "forest": ForestModel,
    "linear": LinearModel,
}


def save_model(model: Model, path: Path | str) -> None:
    if model.model_type not in _TYPES:
        raise ModelFormatError(f"cannot serialize model type {model.model_type!r}")
    doc = {
        "magic": MAGIC,
        "version": FORMAT_VERSION,
        "model_type": model.model_type,
        "catalog_hash": catalog_hash(),
        "class_names": list(model.class_names),
        "params": model.to_params(),
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")))


def load_model(path: Path | str) -> Model:
    try:
        doc = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: not a valid model file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != MAGIC:
        raise ModelFormatError(f"{path}: missing model file magic")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model format version {doc.get('version')!r}"
        )
    if doc.get("catalog_hash") != catalog_hash():
        raise ModelFormatError(f"{path}: model was built against a different feature catalog")
    model_type = doc.get("model_type")
    if model_type not in _TYPES:
        raise ModelFormatError(f"{path}: unknown model type {model_type!r}")
    try:
        return _TYPES[model_type].from_params(tuple(doc["class_names"]), doc["params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: corrupt model parameters: {exc}") from exc
