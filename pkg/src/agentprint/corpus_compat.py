"""Field-name mapping for externally collected episode files.

This is the single place that knows about alternative spellings used by
harness dumps. The mapping below is a best-effort table assembled from the
documented output format; confirm it against the released corpus before
relying on it (the canonical schema in ingest.py is authoritative for
everything this package writes itself).
"""

from __future__ import annotations

import json
from typing import Any, Mapping

__all__ = ["convert_external_episode"]

# external meta key -> canonical meta key
_META_ALIASES: Mapping[str, str] = {
    "agentId": "agent_id",
    "agent": "agent_id",
    "modelName": "model_name",
    "model": "model_name",
    "task_type": "dataset",
    "taskType": "dataset",
    "episodeId": "episode_id",
    "id": "episode_id",
    "pageCount": "page_count",
    "visited_urls": "urls",
}

# external event key -> canonical event key
_EVENT_ALIASES: Mapping[str, str] = {
    "type": "kind",
    "event": "kind",
    "timestamp": "t_ms",
    "ts": "t_ms",
    "t": "t_ms",
    "time_ms": "t_ms",
    "scroll_pct": "depth_pct",
    "depth": "depth_pct",
    "isLink": "is_link",
    "href_present": "is_link",
    "tag": "target",
}


def _remap(record: Mapping[str, Any], aliases: Mapping[str, str]) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in record.items():
        out.setdefault(aliases.get(key, key), value)
    return out


def convert_external_episode(doc: Mapping[str, Any] | bytes | str) -> dict[str, Any]:
    """Rewrite an external episode document into the canonical schema.

    Accepts a parsed object or raw JSON. Unknown fields pass through
    untouched so nothing is lost.
    """
    if isinstance(doc, (bytes, str)):
        doc = json.loads(doc)
    meta = _remap(doc.get("meta", doc.get("metadata", {})), _META_ALIASES)
    raw_events = doc.get("events", doc.get("trace", []))
    events = [_remap(e, _EVENT_ALIASES) for e in raw_events]
    out = {k: v for k, v in doc.items() if k not in ("meta", "metadata", "events", "trace")}
    out["meta"] = meta
    out["events"] = events
    return out
