"""Canonical in-memory representation of UI event traces.

Every episode is an ordered sequence of timestamped DOM events plus
metadata. All types here are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Iterator, Mapping

import numpy as np

__all__ = [
    "EventKind",
    "NavTrigger",
    "ClickPayload",
    "KeydownPayload",
    "ScrollPayload",
    "NavigatePayload",
    "BeforeUnloadPayload",
    "FocusPayload",
    "Event",
    "EpisodeMetadata",
    "Trace",
    "FeatureVector",
    "LabeledDataset",
    "delta_ts",
    "VIEWPORT_W",
    "VIEWPORT_H",
]

# Harness viewport; click coordinates outside it only warrant a warning.
VIEWPORT_W = 1280
VIEWPORT_H = 768


class EventKind(str, Enum):
    """The closed set of recorded DOM event kinds."""

    CLICK = "click"
    KEYDOWN = "keydown"
    SCROLL = "scroll"
    NAVIGATE = "navigate"
    BEFOREUNLOAD = "beforeunload"
    FOCUS = "focus"


class NavTrigger(str, Enum):
    """How a navigation was initiated."""

    HTTP = "http"
    POPSTATE = "popstate"
    OTHER = "other"


@dataclass(frozen=True, slots=True)
class ClickPayload:
    x: float
    y: float
    is_link: bool


@dataclass(frozen=True, slots=True)
class KeydownPayload:
    key: str


@dataclass(frozen=True, slots=True)
class ScrollPayload:
    depth_pct: float

    def __post_init__(self):
        if not 0.0 <= self.depth_pct <= 100.0:
            raise ValueError(f"depth_pct out of [0, 100]: {self.depth_pct}")


@dataclass(frozen=True, slots=True)
class NavigatePayload:
    url: str
    trigger: NavTrigger


@dataclass(frozen=True, slots=True)
class BeforeUnloadPayload:
    depth_pct: float

    def __post_init__(self):
        if not 0.0 <= self.depth_pct <= 100.0:
            raise ValueError(f"depth_pct out of [0, 100]: {self.depth_pct}")


@dataclass(frozen=True, slots=True)
class FocusPayload:
    target: str


Payload = (
    ClickPayload
    | KeydownPayload
    | ScrollPayload
    | NavigatePayload
    | BeforeUnloadPayload
    | FocusPayload
)

_PAYLOAD_FOR_KIND: dict[EventKind, type] = {
    EventKind.CLICK: ClickPayload,
    EventKind.KEYDOWN: KeydownPayload,
    EventKind.SCROLL: ScrollPayload,
    EventKind.NAVIGATE: NavigatePayload,
    EventKind.BEFOREUNLOAD: BeforeUnloadPayload,
    EventKind.FOCUS: FocusPayload,
}

_EMPTY_MAP: Mapping[str, Any] = MappingProxyType({})


@dataclass(frozen=True, slots=True)
class Event:
    """One timestamped UI action.

    t_ms is milliseconds relative to session start. ``extra`` carries any
    unconsumed fields from the source record so serialization round-trips.
    """

    kind: EventKind
    t_ms: int
    payload: Payload
    extra: Mapping[str, Any] = _EMPTY_MAP

    def __post_init__(self):
        if self.t_ms < 0:
            raise ValueError(f"negative timestamp: {self.t_ms}")
        expected = _PAYLOAD_FOR_KIND[self.kind]
        if not isinstance(self.payload, expected):
            raise TypeError(
                f"payload {type(self.payload).__name__} does not match kind {self.kind.value}"
            )


@dataclass(frozen=True, slots=True)
class EpisodeMetadata:
    agent_id: str
    model_name: str = ""
    dataset: str = ""
    episode_id: str = ""
    page_count: int | None = None
    urls: tuple[str, ...] = ()
    extra: Mapping[str, Any] = _EMPTY_MAP

    def __post_init__(self):
        if not self.agent_id:
            raise ValueError("agent_id must be non-empty")
        if self.page_count is not None and self.page_count < 0:
            raise ValueError(f"negative page_count: {self.page_count}")


@dataclass(frozen=True, slots=True)
class Trace:
    """An episode: metadata plus events sorted by t_ms (stable on ties)."""

    meta: EpisodeMetadata
    events: tuple[Event, ...]

    def __post_init__(self):
        for a, b in zip(self.events, self.events[1:]):
            if b.t_ms < a.t_ms:
                raise ValueError("events not sorted by t_ms")

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def of_kind(self, kind: EventKind) -> tuple[Event, ...]:
        return tuple(e for e in self.events if e.kind is kind)


def delta_ts(trace: Trace) -> list[float]:
    """Inter-event intervals in ms over all events regardless of kind.

    Returns [t_{i+1} - t_i]; empty when the trace has fewer than two events.
    """
    ts = [e.t_ms for e in trace.events]
    return [float(b - a) for a, b in zip(ts, ts[1:])]


@dataclass(frozen=True)
class FeatureVector:
    """A 41-entry feature vector aligned to the canonical feature names.

    Missing entries are NaN.
    """

    values: np.ndarray

    def __post_init__(self):
        from .features import FEATURE_NAMES  # local import avoids a cycle

        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (len(FEATURE_NAMES),):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def as_dict(self) -> dict[str, float]:
        from .features import FEATURE_NAMES

        return dict(zip(FEATURE_NAMES, self.values.tolist()))


@dataclass(frozen=True)
class LabeledDataset:
    """Featurized rows with integer class labels.

    X is (n_rows, 41) float64 with NaN for missing entries; y holds indices
    into class_names; episode_ids aligns with rows.
    """

    X: np.ndarray
    y: np.ndarray
    class_names: tuple[str, ...]
    split: str
    episode_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        if len(y) != X.shape[0]:
            raise ValueError("X/y length mismatch")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class_names must be unique")
        if len(y) and (y.min() < 0 or y.max() >= len(self.class_names)):
            raise ValueError("class index out of range")
        if self.episode_ids and len(self.episode_ids) != X.shape[0]:
            raise ValueError("episode_ids length mismatch")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def rows(self) -> Iterator[tuple[FeatureVector, int]]:
        for i in range(len(self)):
            yield FeatureVector(self.X[i].copy()), int(self.y[i])

    def subset(self, indices: np.ndarray, split: str | None = None) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        eps = tuple(self.episode_ids[i] for i in idx) if self.episode_ids else ()
        return LabeledDataset(
            X=self.X[idx].copy(),
            y=self.y[idx].copy(),
            class_names=self.class_names,
            split=split if split is not None else self.split,
            episode_ids=eps,
        )
