"""Parse episode JSON files and corpus trees into Traces; emit datasets.

Episode files follow the layout ``root/agent_id/dataset/timestamp/episode.json``
with the schema::

    {"meta": {"agent_id", "model_name", "dataset", "episode_id",
              "page_count"?, "urls"?},
     "events": [{"kind", "t_ms", ...payload fields...}, ...]}

Unknown fields on events and metadata are preserved opaquely so that
serialize(parse(file)) round-trips.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, ParseError, SchemaError, TraceWarning
from .features import FEATURE_NAMES, extract_features
from .trace import (
    BeforeUnloadPayload,
    ClickPayload,
    Event,
    EventKind,
    EpisodeMetadata,
    FocusPayload,
    KeydownPayload,
    LabeledDataset,
    NavigatePayload,
    NavTrigger,
    ScrollPayload,
    Trace,
    VIEWPORT_H,
    VIEWPORT_W,
)

__all__ = [
    "parse_episode",
    "serialize_episode",
    "scan_corpus",
    "ScanResult",
    "ScanError",
    "build_dataset",
    "load_split_manifest",
    "write_features_csv",
]

SPLITS = ("train", "val", "test")

_PAYLOAD_FIELDS: dict[EventKind, tuple[str, ...]] = {
    EventKind.CLICK: ("x", "y", "is_link"),
    EventKind.KEYDOWN: ("key",),
    EventKind.SCROLL: ("depth_pct",),
    EventKind.NAVIGATE: ("url", "trigger"),
    EventKind.BEFOREUNLOAD: ("depth_pct",),
    EventKind.FOCUS: ("target",),
}

_META_FIELDS = ("agent_id", "model_name", "dataset", "episode_id", "page_count", "urls")


def _require(obj: Mapping[str, Any], key: str, ctx: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{ctx}: missing required field '{key}'")
    return obj[key]


def _as_number(value: Any, ctx: str) -> float:
    # int-ness is preserved so serialize(parse(x)) round-trips bit-for-bit
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{ctx}: expected a number, got {value!r}")
    return value


def _as_int_ms(value: Any, ctx: str) -> int:
    num = _as_number(value, ctx)
    if num != int(num):
        raise SchemaError(f"{ctx}: timestamp must be integral ms, got {value!r}")
    if num < 0:
        raise SchemaError(f"{ctx}: negative timestamp {value!r}")
    return int(num)


def _parse_payload(kind: EventKind, rec: Mapping[str, Any], ctx: str):
    if kind is EventKind.CLICK:
        x = _as_number(_require(rec, "x", ctx), ctx)
        y = _as_number(_require(rec, "y", ctx), ctx)
        is_link = rec.get("is_link", False)
        if not isinstance(is_link, bool):
            raise SchemaError(f"{ctx}: is_link must be boolean")
        if not (0 <= x <= VIEWPORT_W and 0 <= y <= VIEWPORT_H):
            warnings.warn(
                f"{ctx}: click at ({x}, {y}) outside the {VIEWPORT_W}x{VIEWPORT_H} viewport",
                TraceWarning,
                stacklevel=4,
            )
        return ClickPayload(x=x, y=y, is_link=is_link)
    if kind is EventKind.KEYDOWN:
        key = _require(rec, "key", ctx)
        if not isinstance(key, str):
            raise SchemaError(f"{ctx}: key must be a string")
        return KeydownPayload(key=key)
    if kind in (EventKind.SCROLL, EventKind.BEFOREUNLOAD):
        depth = _as_number(_require(rec, "depth_pct", ctx), ctx)
        if not 0.0 <= depth <= 100.0:
            raise SchemaError(f"{ctx}: depth_pct {depth} out of [0, 100]")
        cls = ScrollPayload if kind is EventKind.SCROLL else BeforeUnloadPayload
        return cls(depth_pct=depth)
    if kind is EventKind.NAVIGATE:
        url = _require(rec, "url", ctx)
        if not isinstance(url, str):
            raise SchemaError(f"{ctx}: url must be a string")
        raw_trigger = rec.get("trigger", "other")
        try:
            trigger = NavTrigger(raw_trigger)
        except ValueError:
            raise SchemaError(f"{ctx}: unknown navigate trigger {raw_trigger!r}") from None
        return NavigatePayload(url=url, trigger=trigger)
    target = _require(rec, "target", ctx)
    if not isinstance(target, str):
        raise SchemaError(f"{ctx}: target must be a string")
    return FocusPayload(target=target)


def _parse_event(rec: Mapping[str, Any], index: int) -> Event:
    ctx = f"events[{index}]"
    if not isinstance(rec, Mapping):
        raise SchemaError(f"{ctx}: event must be an object")
    raw_kind = _require(rec, "kind", ctx)
    try:
        kind = EventKind(raw_kind)
    except ValueError:
        raise SchemaError(f"{ctx}: unknown event kind {raw_kind!r}") from None
    t_ms = _as_int_ms(_require(rec, "t_ms", ctx), ctx)
    payload = _parse_payload(kind, rec, ctx)
    consumed = {"kind", "t_ms", *_PAYLOAD_FIELDS[kind]}
    extra = {k: v for k, v in rec.items() if k not in consumed}
    return Event(
        kind=kind,
        t_ms=t_ms,
        payload=payload,
        extra=MappingProxyType(extra) if extra else MappingProxyType({}),
    )


def _parse_meta(rec: Mapping[str, Any]) -> EpisodeMetadata:
    if not isinstance(rec, Mapping):
        raise SchemaError("meta must be an object")
    agent_id = _require(rec, "agent_id", "meta")
    if not isinstance(agent_id, str) or not agent_id:
        raise SchemaError("meta: agent_id must be a non-empty string")
    page_count = rec.get("page_count")
    if page_count is not None:
        if isinstance(page_count, bool) or not isinstance(page_count, int) or page_count < 0:
            raise SchemaError(f"meta: page_count must be a non-negative integer, got {page_count!r}")
    urls = rec.get("urls", [])
    if not isinstance(urls, list) or not all(isinstance(u, str) for u in urls):
        raise SchemaError("meta: urls must be a list of strings")
    extra = {k: v for k, v in rec.items() if k not in _META_FIELDS}
    return EpisodeMetadata(
        agent_id=agent_id,
        model_name=str(rec.get("model_name", "")),
        dataset=str(rec.get("dataset", "")),
        episode_id=str(rec.get("episode_id", "")),
        page_count=page_count,
        urls=tuple(urls),
        extra=MappingProxyType(extra) if extra else MappingProxyType({}),
    )


def parse_episode(data: bytes | str) -> Trace:
    """Parse one episode JSON document into a Trace.

    Events are stably sorted by t_ms; out-of-order input emits a warning.
    Malformed JSON raises ParseError with the byte offset; schema violations
    raise SchemaError.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not valid UTF-8: {exc}", byte_offset=exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg} at byte {exc.pos}", byte_offset=exc.pos) from exc
    if not isinstance(doc, dict):
        raise SchemaError("episode document must be a JSON object")
    meta = _parse_meta(_require(doc, "meta", "episode"))
    raw_events = _require(doc, "events", "episode")
    if not isinstance(raw_events, list):
        raise SchemaError("events must be a list")
    events = [_parse_event(rec, i) for i, rec in enumerate(raw_events)]
    ts = [e.t_ms for e in events]
    if any(b < a for a, b in zip(ts, ts[1:])):
        warnings.warn(
            f"episode {meta.episode_id or '<unnamed>'}: events out of timestamp order, sorting",
            TraceWarning,
            stacklevel=2,
        )
        events = sorted(events, key=lambda e: e.t_ms)  # stable
    return Trace(meta=meta, events=tuple(events))


def _payload_dict(event: Event) -> dict[str, Any]:
    p = event.payload
    if event.kind is EventKind.CLICK:
        return {"x": p.x, "y": p.y, "is_link": p.is_link}
    if event.kind is EventKind.KEYDOWN:
        return {"key": p.key}
    if event.kind in (EventKind.SCROLL, EventKind.BEFOREUNLOAD):
        return {"depth_pct": p.depth_pct}
    if event.kind is EventKind.NAVIGATE:
        return {"url": p.url, "trigger": p.trigger.value}
    return {"target": p.target}


def serialize_episode(trace: Trace) -> str:
    """Render a Trace back to canonical episode JSON (round-trips parse)."""
    meta: dict[str, Any] = {
        "agent_id": trace.meta.agent_id,
        "model_name": trace.meta.model_name,
        "dataset": trace.meta.dataset,
        "episode_id": trace.meta.episode_id,
    }
    if trace.meta.page_count is not None:
        meta["page_count"] = trace.meta.page_count
    meta["urls"] = list(trace.meta.urls)
    meta.update(trace.meta.extra)
    events = []
    for e in trace.events:
        rec: dict[str, Any] = {"kind": e.kind.value, "t_ms": e.t_ms}
        rec.update(_payload_dict(e))
        rec.update(e.extra)
        events.append(rec)
    return json.dumps({"meta": meta, "events": events}, separators=(",", ":"))


@dataclass(frozen=True)
class ScanError:
    path: Path
    error: Exception


@dataclass(frozen=True)
class ScanResult:
    traces: tuple[Trace, ...]
    errors: tuple[ScanError, ...]

    def __iter__(self):
        return iter(self.traces)

    def __len__(self) -> int:
        return len(self.traces)


def scan_corpus(root: Path | str, dataset_filter: str | None = None) -> ScanResult:
    """Load every episode under ``root/agent/dataset/timestamp/*.json``.

    Files are visited in lexicographic path order so output is independent
    of filesystem enumeration. Per-file parse failures are collected in the
    result, not raised; an unreadable root raises IOError.
    """
    root = Path(root)
    if not root.is_dir():
        raise IOError(f"corpus root is not a readable directory: {root}")
    paths = sorted(p for p in root.rglob("*.json") if p.is_file())
    traces: list[Trace] = []
    errors: list[ScanError] = []
    for path in paths:
        rel = path.relative_to(root)
        if len(rel.parts) != 4:
            continue  # not in the canonical layout (e.g. a split manifest)
        path_agent, path_dataset = rel.parts[0], rel.parts[1]
        if dataset_filter is not None and path_dataset != dataset_filter:
            continue
        try:
            trace = parse_episode(path.read_bytes())
        except Exception as exc:  # per-file errors are data, not control flow
            errors.append(ScanError(path=path, error=exc))
            continue
        meta = trace.meta
        if meta.agent_id != path_agent:
            warnings.warn(
                f"{path}: metadata agent_id {meta.agent_id!r} conflicts with path "
                f"{path_agent!r}; path wins",
                TraceWarning,
                stacklevel=2,
            )
        if meta.agent_id != path_agent or meta.dataset != path_dataset:
            meta = EpisodeMetadata(
                agent_id=path_agent,
                model_name=meta.model_name,
                dataset=path_dataset,
                episode_id=meta.episode_id or path.stem,
                page_count=meta.page_count,
                urls=meta.urls,
                extra=meta.extra,
            )
            trace = Trace(meta=meta, events=trace.events)
        traces.append(trace)
    return ScanResult(traces=tuple(traces), errors=tuple(errors))


def load_split_manifest(path: Path | str) -> dict[str, str]:
    """Read an episode_id -> split assignment file (JSON object)."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ConfigError("split manifest must be a JSON object")
    for ep, split in doc.items():
        if split not in SPLITS:
            raise ConfigError(f"split manifest: unknown split {split!r} for {ep!r}")
    return doc


def build_dataset(
    traces: list[Trace] | tuple[Trace, ...],
    split_spec: Mapping[str, str],
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Featurize traces and partition them into (train, val, test).

    Class names are the lexicographically sorted agent ids. Every trace must
    appear in split_spec; nothing is dropped silently.
    """
    class_names = tuple(sorted({t.meta.agent_id for t in traces}))
    class_index = {name: i for i, name in enumerate(class_names)}
    buckets: dict[str, list[tuple[np.ndarray, int, str]]] = {s: [] for s in SPLITS}
    for trace in traces:
        ep = trace.meta.episode_id
        if ep not in split_spec:
            raise ConfigError(f"episode {ep!r} missing from the split manifest")
        split = split_spec[ep]
        fv = extract_features(trace)
        buckets[split].append((fv.values, class_index[trace.meta.agent_id], ep))

    def _mk(split: str) -> LabeledDataset:
        rows = buckets[split]
        if rows:
            X = np.vstack([r[0] for r in rows])
            y = np.asarray([r[1] for r in rows], dtype=np.int64)
        else:
            X = np.empty((0, len(FEATURE_NAMES)))
            y = np.empty(0, dtype=np.int64)
        return LabeledDataset(
            X=X,
            y=y,
            class_names=class_names,
            split=split,
            episode_ids=tuple(r[2] for r in rows),
        )

    return _mk("train"), _mk("val"), _mk("test")


def write_features_csv(traces: list[Trace] | tuple[Trace, ...], path: Path | str) -> None:
    """Export one row per trace: 41 features + label + episode_id.

    Missing values are written as empty fields.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(FEATURE_NAMES) + ["label", "episode_id"])
        for trace in traces:
            fv = extract_features(trace)
            cells = ["" if np.isnan(v) else repr(float(v)) for v in fv.values]
            writer.writerow(cells + [trace.meta.agent_id, trace.meta.episode_id])
