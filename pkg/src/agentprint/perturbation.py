"""Trace-level timing perturbations and the delay attack/defense pipeline.

Delay injection draws one independent integer delay per event (including a
delay before the first action) from Uniform{0..max_delay_ms} and adds the
running sum to every later timestamp, so each inter-event gap grows by
exactly its own draw. Payloads, kinds, and event order are untouched; only
timing-derived features can change.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .evaluation import TrainerFn, closed_set_eval, _featurize_traces
from .trace import Event, Trace

__all__ = ["DelayBudget", "inject_delays", "inject_delays_corpus", "delay_robustness_experiment"]


@dataclass(frozen=True)
class DelayBudget:
    max_delay_ms: int

    def __post_init__(self):
        if self.max_delay_ms <= 0:
            raise ValueError(f"max_delay_ms must be positive, got {self.max_delay_ms}")


def _trace_rng(seed: int, episode_id: str) -> np.random.Generator:
    digest = hashlib.sha256(episode_id.encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, *words]))


def inject_delays(trace: Trace, budget: DelayBudget, seed: int) -> Trace:
    """Return a copy of the trace with random per-gap delays added."""
    if not trace.events:
        return trace
    rng = _trace_rng(seed, trace.meta.episode_id)
    draws = rng.integers(0, budget.max_delay_ms + 1, size=len(trace.events))
    offsets = np.cumsum(draws)
    events = tuple(
        Event(kind=e.kind, t_ms=e.t_ms + int(off), payload=e.payload, extra=e.extra)
        for e, off in zip(trace.events, offsets)
    )
    return Trace(meta=trace.meta, events=events)


def inject_delays_corpus(
    traces: Sequence[Trace], budget: DelayBudget, seed: int
) -> list[Trace]:
    return [inject_delays(t, budget, seed) for t in traces]


def delay_robustness_experiment(
    train_traces: Sequence[Trace],
    test_traces: Sequence[Trace],
    budgets: Sequence[int],
    trainer: TrainerFn,
    seed: int,
) -> list[dict[str, float]]:
    """Unadapted vs adapted macro F1 under growing delay budgets.

    Unadapted: trained on clean traces, evaluated on delayed test traces.
    Adapted: retrained on delayed training traces (independent seed stream),
    evaluated on the same delayed test set.
    """
    if list(budgets) != sorted(budgets):
        raise ValueError("budgets must be sorted ascending")
    class_names = tuple(sorted({t.meta.agent_id for t in train_traces}))
    clean_train = _featurize_traces(train_traces, class_names, "train")
    clean_model = trainer(clean_train, seed)
    clean_f1 = closed_set_eval(
        clean_model, _featurize_traces(test_traces, class_names, "test")
    ).macro_f1

    rows: list[dict[str, float]] = []
    for budget_ms in budgets:
        budget = DelayBudget(int(budget_ms))
        delayed_test = _featurize_traces(
            inject_delays_corpus(test_traces, budget, seed), class_names, "test"
        )
        unadapted = closed_set_eval(clean_model, delayed_test).macro_f1
        delayed_train_traces = inject_delays_corpus(train_traces, budget, seed + 1)
        adapted_model = trainer(
            _featurize_traces(delayed_train_traces, class_names, "train"), seed
        )
        adapted = closed_set_eval(adapted_model, delayed_test).macro_f1
        rows.append(
            {
                "budget_ms": float(budget_ms),
                "clean_f1": clean_f1,
                "unadapted_f1": unadapted,
                "adapted_f1": adapted,
            }
        )
    return rows
