from __future__ import annotations

import numpy as np
import pytest

from agentprint.trace import (
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
)


def ev(kind: str, t_ms: int, **kw) -> Event:
    k = EventKind(kind)
    if k is EventKind.CLICK:
        payload = ClickPayload(x=kw.get("x", 100), y=kw.get("y", 100), is_link=kw.get("is_link", False))
    elif k is EventKind.KEYDOWN:
        payload = KeydownPayload(key=kw.get("key", "a"))
    elif k is EventKind.SCROLL:
        payload = ScrollPayload(depth_pct=kw.get("depth_pct", 0.0))
    elif k is EventKind.NAVIGATE:
        payload = NavigatePayload(
            url=kw.get("url", "https://www.site.test/p"),
            trigger=NavTrigger(kw.get("trigger", "http")),
        )
    elif k is EventKind.BEFOREUNLOAD:
        payload = BeforeUnloadPayload(depth_pct=kw.get("depth_pct", 0.0))
    else:
        payload = FocusPayload(target=kw.get("target", "input"))
    return Event(kind=k, t_ms=t_ms, payload=payload)


def make_trace(events, agent_id="agent-x", page_count=None, urls=(), episode_id="ep-1") -> Trace:
    meta = EpisodeMetadata(
        agent_id=agent_id,
        model_name=f"sim/{agent_id}",
        dataset="test",
        episode_id=episode_id,
        page_count=page_count,
        urls=tuple(urls),
    )
    return Trace(meta=meta, events=tuple(events))


@pytest.fixture
def trace_factory():
    return make_trace


@pytest.fixture
def event_factory():
    return ev


def blob_dataset(n_per_class=100, centers=((0.0, 0.0), (5.0, 5.0), (0.0, 6.0)), spread=0.7, seed=0, n_features=None):
    """Well-separated Gaussian blobs; separability checkable by nearest centroid."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for ci, c in enumerate(centers):
        pts = rng.normal(np.asarray(c), spread, size=(n_per_class, len(c)))
        xs.append(pts)
        ys.append(np.full(n_per_class, ci))
    X = np.vstack(xs)
    if n_features is not None and n_features > X.shape[1]:
        pad = rng.normal(0, 1, size=(X.shape[0], n_features - X.shape[1]))
        X = np.hstack([X, pad])
    y = np.concatenate(ys)
    names = tuple(f"class-{i}" for i in range(len(centers)))
    return LabeledDataset(X=X, y=y, class_names=names, split="train")


@pytest.fixture
def blobs():
    return blob_dataset()


def nearest_centroid_accuracy(ds: LabeledDataset) -> float:
    """Independent separability oracle for blob fixtures."""
    centroids = np.stack([ds.X[ds.y == c].mean(axis=0) for c in range(ds.n_classes)])
    d = ((ds.X[:, None, :] - centroids[None]) ** 2).sum(axis=2)
    return float((d.argmin(axis=1) == ds.y).mean())


def random_trace(rng: np.random.Generator, max_events: int = 60) -> Trace:
    """Arbitrary schema-valid trace, degenerate cases included."""
    n = int(rng.integers(0, max_events + 1))
    kinds = rng.choice(list(EventKind), size=n)
    t = 0
    events = []
    depth = 0.0
    hosts = ["www.site.test", "en.site.test", "Mixed.Case.test"]
    for k in kinds:
        t += int(rng.integers(0, 4000))  # zero gaps (ties) allowed
        if k is EventKind.CLICK:
            e = ev("click", t, x=float(rng.uniform(0, 1280)), y=float(rng.uniform(0, 768)),
                   is_link=bool(rng.random() < 0.5))
        elif k is EventKind.KEYDOWN:
            key = rng.choice(["a", "Z", "Enter", "ArrowDown", "Tab", "Escape", "Backspace", "Delete", "%", "ArrowUp"])
            e = ev("keydown", t, key=str(key))
        elif k is EventKind.SCROLL:
            depth = float(np.clip(depth + rng.normal(0, 25), 0, 100))
            e = ev("scroll", t, depth_pct=depth)
        elif k is EventKind.NAVIGATE:
            url = f"https://{rng.choice(hosts)}/p{int(rng.integers(5))}"
            e = ev("navigate", t, url=url, trigger=str(rng.choice(["http", "popstate", "other"])))
        elif k is EventKind.BEFOREUNLOAD:
            e = ev("beforeunload", t, depth_pct=depth)
        else:
            e = ev("focus", t, target=str(rng.choice(["input", "textarea"])))
        events.append(e)
    page_count = int(rng.integers(0, 8)) if rng.random() < 0.5 else None
    urls = tuple(f"https://{h}/start" for h in rng.choice(hosts, size=int(rng.integers(0, 3))))
    return make_trace(events, agent_id="rand", page_count=page_count, urls=urls,
                      episode_id=f"r{rng.integers(1 << 30)}")
