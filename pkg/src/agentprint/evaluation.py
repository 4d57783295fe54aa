"""Measurement protocols: closed-set F1, open-set LOO AUROC, permutation
importance, and the training-fraction / truncation curve generators."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, EvalError, TraceWarning
from .features import FEATURE_NAMES, extract_features
from .models.base import Model
from .trace import LabeledDataset, Trace

__all__ = [
    "ClosedSetReport",
    "OpenSetReport",
    "auroc",
    "report_from_predictions",
    "closed_set_eval",
    "open_set_loo",
    "open_set_report",
    "permutation_importance",
    "training_fraction_curve",
    "truncation_curve",
    "truncate_trace",
]

TrainerFn = Callable[[LabeledDataset, int], Model]


@dataclass(frozen=True)
class ClosedSetReport:
    per_class_f1: Mapping[str, float]
    per_class_precision: Mapping[str, float]
    per_class_recall: Mapping[str, float]
    macro_f1: float
    accuracy: float
    confusion: np.ndarray  # (K, K), rows = truth, cols = prediction

    def to_doc(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "per_class_f1": dict(self.per_class_f1),
            "per_class_precision": dict(self.per_class_precision),
            "per_class_recall": dict(self.per_class_recall),
            "confusion": self.confusion.tolist(),
        }


@dataclass(frozen=True)
class OpenSetReport:
    per_heldout_auroc: Mapping[str, float]

    def to_doc(self) -> dict:
        return {"per_heldout_auroc": dict(self.per_heldout_auroc)}


def auroc(scores: np.ndarray, is_positive: np.ndarray) -> float:
    """Area under the ROC curve by tie-averaged ranks.

    Equals P[score_pos > score_neg] + 0.5 P[tie] over random pos/neg pairs.
    """
    scores = np.asarray(scores, dtype=np.float64)
    is_positive = np.asarray(is_positive, dtype=bool)
    n_pos = int(is_positive.sum())
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUROC needs at least one positive and one negative score")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average of 1-based ranks
        i = j + 1
    rank_sum = float(ranks[is_positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def report_from_predictions(
    y_true: np.ndarray, y_pred: np.ndarray, class_names: Sequence[str]
) -> ClosedSetReport:
    """Per-class one-vs-rest F1 and the unweighted macro over all classes."""
    if len(y_true) == 0:
        raise EvalError("empty evaluation set")
    K = len(class_names)
    confusion = np.zeros((K, K), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[t, p] += 1
    f1s: dict[str, float] = {}
    precisions: dict[str, float] = {}
    recalls: dict[str, float] = {}
    for k, name in enumerate(class_names):
        tp = confusion[k, k]
        fp = confusion[:, k].sum() - tp
        fn = confusion[k, :].sum() - tp
        if tp + fp + fn == 0:
            warnings.warn(
                f"class {name!r} absent from both truth and predictions; F1 set to 0",
                TraceWarning,
                stacklevel=2,
            )
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        precisions[name] = float(precision)
        recalls[name] = float(recall)
        f1s[name] = float(f1)
    return ClosedSetReport(
        per_class_f1=f1s,
        per_class_precision=precisions,
        per_class_recall=recalls,
        macro_f1=float(np.mean(list(f1s.values()))),
        accuracy=float(np.mean(y_true == y_pred)),
        confusion=confusion,
    )


def _remap_to_model(model: Model, test: LabeledDataset) -> np.ndarray:
    """Test labels re-expressed as indices into the model's class list."""
    lookup = {name: i for i, name in enumerate(model.class_names)}
    missing = [n for n in test.class_names if n not in lookup]
    if missing:
        raise EvalError(f"model does not know test classes: {', '.join(missing)}")
    mapping = np.asarray([lookup[n] for n in test.class_names], dtype=np.int64)
    return mapping[test.y]


def closed_set_eval(model: Model, test: LabeledDataset) -> ClosedSetReport:
    if len(test) == 0:
        raise EvalError("empty test set")
    y_true = _remap_to_model(model, test)
    y_pred = model.predict(test.X)
    return report_from_predictions(y_true, y_pred, model.class_names)


def unknown_scores(model: Model, X: np.ndarray) -> np.ndarray:
    """Open-set score: 1 - max predicted class probability."""
    return 1.0 - model.predict_proba(X).max(axis=1)


def open_set_loo(
    train: LabeledDataset,
    test: LabeledDataset,
    heldout: str,
    trainer: TrainerFn,
    seed: int,
) -> float:
    """Leave-one-agent-out AUROC of the unknown-vs-known discrimination.

    The classifier is trained on the other agents' training rows and scored
    on the known agents' test rows plus every available row of the held-out
    agent.
    """
    if heldout not in train.class_names or heldout not in test.class_names:
        raise ConfigError(f"held-out agent {heldout!r} not present in both splits")
    kept = tuple(n for n in train.class_names if n != heldout)
    remap = {name: i for i, name in enumerate(kept)}
    h_train = train.class_names.index(heldout)
    h_test = test.class_names.index(heldout)

    keep_idx = np.flatnonzero(train.y != h_train)
    loo_train = LabeledDataset(
        X=train.X[keep_idx].copy(),
        y=np.asarray([remap[train.class_names[c]] for c in train.y[keep_idx]], dtype=np.int64),
        class_names=kept,
        split="train",
        episode_ids=tuple(train.episode_ids[i] for i in keep_idx) if train.episode_ids else (),
    )
    model = trainer(loo_train, seed)

    known_X = test.X[test.y != h_test]
    unknown_X = np.vstack([train.X[train.y == h_train], test.X[test.y == h_test]])
    scores = np.concatenate([unknown_scores(model, known_X), unknown_scores(model, unknown_X)])
    labels = np.concatenate([np.zeros(len(known_X), bool), np.ones(len(unknown_X), bool)])
    return auroc(scores, labels)


def open_set_report(
    train: LabeledDataset,
    test: LabeledDataset,
    trainer: TrainerFn,
    seed: int,
    threads: int = 1,
) -> OpenSetReport:
    """Run the LOO protocol once per agent."""
    agents = list(train.class_names)

    def run(agent: str) -> tuple[str, float]:
        return agent, open_set_loo(train, test, agent, trainer, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(run, agents))
    else:
        results = dict(run(a) for a in agents)
    return OpenSetReport(per_heldout_auroc={a: results[a] for a in agents})


def permutation_importance(
    model: Model,
    test: LabeledDataset,
    repeats: int = 5,
    seed: int = 0,
) -> dict[str, tuple[float, float]]:
    """Mean and std of the macro-F1 drop when one feature column is shuffled.

    Returns a mapping feature name -> (mean_drop, std_drop) in catalog order.
    """
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    y_true = _remap_to_model(model, test)
    base = report_from_predictions(y_true, model.predict(test.X), model.class_names).macro_f1
    rng = np.random.default_rng(seed)
    out: dict[str, tuple[float, float]] = {}
    n = len(test)
    for j, name in enumerate(FEATURE_NAMES):
        drops = np.empty(repeats)
        for r in range(repeats):
            perm = rng.permutation(n)
            X = test.X.copy()
            X[:, j] = X[perm, j]
            f1 = report_from_predictions(y_true, model.predict(X), model.class_names).macro_f1
            drops[r] = base - f1
        out[name] = (float(drops.mean()), float(drops.std()))
    return out


def training_fraction_curve(
    train: LabeledDataset,
    test: LabeledDataset,
    fractions: Sequence[float],
    trainer: TrainerFn,
    seed: int,
) -> list[tuple[float, float]]:
    """Macro F1 as a function of the training fraction.

    Subsampling is stratified and monotone: the rows used at a smaller
    fraction are a subset of those used at any larger one, so the curve is
    smooth in the sampling noise. Fractions that leave a class empty are
    skipped with a warning.
    """
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ConfigError(f"fractions must lie in (0, 1], got {f}")
    rng = np.random.default_rng(seed)
    per_class_order: dict[int, np.ndarray] = {}
    for c in range(train.n_classes):
        idx = np.flatnonzero(train.y == c)
        rng.shuffle(idx)
        per_class_order[c] = idx

    points: list[tuple[float, float]] = []
    for f in fractions:
        chosen: list[np.ndarray] = []
        short = False
        for c, order in per_class_order.items():
            k = int(f * len(order) + 1e-9)
            if k < 1:
                warnings.warn(
                    f"fraction {f} leaves class {train.class_names[c]!r} empty; point skipped",
                    TraceWarning,
                    stacklevel=2,
                )
                short = True
                break
            chosen.append(order[:k])
        if short:
            continue
        keep = np.sort(np.concatenate(chosen))  # original row order for reproducibility
        model = trainer(train.subset(keep), seed)
        points.append((float(f), closed_set_eval(model, test).macro_f1))
    return points


def truncate_trace(trace: Trace, k: int) -> Trace:
    """Keep only the first k events (prefix in time order).

    Metadata that summarizes the whole episode (recorded page count, the
    full URL list) is future information for a prefix observer, so it is
    reduced to what the kept events reveal: page_count is recomputed from
    the start URL plus the kept navigations.
    """
    if k <= 0:
        raise ConfigError(f"truncation length must be positive, got {k}")
    if k >= len(trace.events):
        return trace
    kept = trace.events[:k]
    start = trace.meta.urls[:1]
    meta = replace(trace.meta, page_count=None, urls=start)
    return Trace(meta=meta, events=kept)


def _featurize_traces(
    traces: Sequence[Trace], class_names: tuple[str, ...], split: str
) -> LabeledDataset:
    index = {n: i for i, n in enumerate(class_names)}
    X = np.vstack([extract_features(t).values for t in traces])
    y = np.asarray([index[t.meta.agent_id] for t in traces], dtype=np.int64)
    return LabeledDataset(
        X=X, y=y, class_names=class_names, split=split,
        episode_ids=tuple(t.meta.episode_id for t in traces),
    )


def truncation_curve(
    ks: Sequence[int],
    mode: str,
    test_traces: Sequence[Trace],
    class_names: tuple[str, ...],
    model: Model | None = None,
    trainer: TrainerFn | None = None,
    train_traces: Sequence[Trace] | None = None,
    seed: int = 0,
) -> list[tuple[int, float]]:
    """Macro F1 as a function of the number of observed events k.

    test_side: ``model`` was trained on full traces; each test trace is cut
    to its first k events and re-featurized. train_side: for each k a new
    model is trained on truncated training traces (``trainer`` +
    ``train_traces``) and evaluated on the full test traces.
    """
    for k in ks:
        if k <= 0:
            raise ConfigError(f"k must be positive, got {k}")
    if mode not in ("test_side", "train_side"):
        raise ConfigError(f"unknown truncation mode {mode!r}")
    if mode == "test_side" and model is None:
        raise ConfigError("test_side truncation needs a trained model")
    if mode == "train_side" and (trainer is None or train_traces is None):
        raise ConfigError("train_side truncation needs a trainer and training traces")
    full_test = _featurize_traces(test_traces, class_names, "test")

    points: list[tuple[int, float]] = []
    if mode == "test_side":
        for k in ks:
            cut = [truncate_trace(t, k) for t in test_traces]
            ds = _featurize_traces(cut, class_names, "test")
            points.append((int(k), closed_set_eval(model, ds).macro_f1))
    else:
        for k in ks:
            cut = [truncate_trace(t, k) for t in train_traces]
            ds = _featurize_traces(cut, class_names, "train")
            m = trainer(ds, seed)
            points.append((int(k), closed_set_eval(m, full_test).macro_f1))
    return points
