"""The 41-dimensional behavioral feature vector computed from one trace.

Feature semantics, in canonical order:

  Event volume:   n_clicks, n_scrolls, n_navigations, n_keydowns, n_focus,
                  n_events_total, page_count, n_unique_domains
  Global timing:  total_duration_s, t_first_action_ms, mean/std/median/
                  p10/p90 of inter-event intervals, iei_trend
  Per-type IEIs:  mean/std of click, navigate (page dwell) and keydown
                  intervals, max_page_dwell_ms
  Scrolling:      max/mean scroll depth, deep scrolls (>60%), reversals
  Click space:    x/y std, bbox area fraction of the 1280x768 viewport,
                  top-quarter fraction (y < 192), link clicks and their ratio
  Ratios:         popstate_ratio, scroll_to_click, actions/keydowns/focus
                  per page, nav_to_click, structural_key_ratio
  Exit:           mean scroll depth at beforeunload

Degenerate inputs (no events of the needed kind, zero denominators) yield
NaN, never an exception: "no link clicks out of 4" and "no clicks at all"
must stay distinguishable downstream.
"""

from __future__ import annotations

from urllib.parse import urlsplit

import numpy as np

from .trace import Event, EventKind, FeatureVector, NavTrigger, Trace, VIEWPORT_H, VIEWPORT_W

__all__ = [
    "FEATURE_NAMES",
    "TIMING_FEATURES",
    "ACTION_FEATURES",
    "STRUCTURAL_KEYS",
    "MISSING",
    "extract_features",
    "iei_stats",
    "scroll_reversals",
    "catalog_hash",
]

MISSING = float("nan")

FEATURE_NAMES: tuple[str, ...] = (
    "n_clicks",
    "n_scrolls",
    "n_navigations",
    "n_keydowns",
    "n_focus",
    "n_events_total",
    "page_count",
    "n_unique_domains",
    "total_duration_s",
    "t_first_action_ms",
    "mean_iei_ms",
    "std_iei_ms",
    "median_iei_ms",
    "p10_iei_ms",
    "p90_iei_ms",
    "iei_trend",
    "mean_click_iei_ms",
    "std_click_iei_ms",
    "mean_nav_iei_ms",
    "std_nav_iei_ms",
    "max_page_dwell_ms",
    "mean_key_iei_ms",
    "std_key_iei_ms",
    "max_scroll_pct",
    "mean_scroll_pct",
    "n_deep_scrolls",
    "scroll_reversals",
    "click_x_std",
    "click_y_std",
    "click_bbox_area_frac",
    "click_top_frac",
    "n_link_clicks",
    "link_click_ratio",
    "popstate_ratio",
    "scroll_to_click_ratio",
    "actions_per_page",
    "nav_to_click_ratio",
    "keydowns_per_page",
    "focus_per_page",
    "structural_key_ratio",
    "mean_exit_scroll_pct",
)

# The 15 features that depend on event timing; everything else is a pure
# function of event kinds, payloads and metadata, and so is invariant under
# timing perturbations.
TIMING_FEATURES: frozenset[str] = frozenset(
    {
        "total_duration_s",
        "t_first_action_ms",
        "mean_iei_ms",
        "std_iei_ms",
        "median_iei_ms",
        "p10_iei_ms",
        "p90_iei_ms",
        "iei_trend",
        "mean_click_iei_ms",
        "std_click_iei_ms",
        "mean_nav_iei_ms",
        "std_nav_iei_ms",
        "max_page_dwell_ms",
        "mean_key_iei_ms",
        "std_key_iei_ms",
    }
)

ACTION_FEATURES: frozenset[str] = frozenset(FEATURE_NAMES) - TIMING_FEATURES

# Non-printable keys counted as "structural"; every other key is printable.
# Arrow* means any key name starting with "Arrow".
STRUCTURAL_KEYS: frozenset[str] = frozenset(
    {"Enter", "Tab", "Escape", "Backspace", "Delete"}
)

_VIEWPORT_AREA = float(VIEWPORT_W * VIEWPORT_H)
_TOP_QUARTER_Y = VIEWPORT_H / 4.0  # 192 px


def is_structural_key(key: str) -> bool:
    return key in STRUCTURAL_KEYS or key.startswith("Arrow")


def catalog_hash() -> str:
    """Stable digest of the canonical feature-name list, for model files."""
    import hashlib

    return hashlib.sha256("\n".join(FEATURE_NAMES).encode()).hexdigest()


def iei_stats(intervals: list[float] | np.ndarray) -> tuple[float, float, float, float, float]:
    """(mean, population std, median, p10, p90) of an interval list.

    Percentiles use linear interpolation between order statistics. Empty
    input yields all-NaN.
    """
    arr = np.asarray(intervals, dtype=np.float64)
    if arr.size == 0:
        return (MISSING,) * 5
    return (
        float(np.mean(arr)),
        float(np.std(arr)),
        float(np.median(arr)),
        float(np.percentile(arr, 10)),
        float(np.percentile(arr, 90)),
    )


def scroll_reversals(depths: list[float] | np.ndarray) -> int:
    """Count strict direction changes in a scroll depth sequence.

    Zero deltas (plateaus) are skipped; a reversal is a sign flip between
    consecutive nonzero deltas.
    """
    arr = np.asarray(depths, dtype=np.float64)
    if arr.size < 2:
        return 0
    deltas = np.diff(arr)
    signs = np.sign(deltas[deltas != 0.0])
    if signs.size < 2:
        return 0
    return int(np.sum(signs[1:] != signs[:-1]))


def _hostname(url: str) -> str | None:
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return None
    return host.lower() if host else None


def _diffs(times: list[int]) -> np.ndarray:
    return np.diff(np.asarray(times, dtype=np.float64)) if len(times) >= 2 else np.empty(0)


def _mean_std(deltas: np.ndarray) -> tuple[float, float]:
    if deltas.size == 0:
        return MISSING, MISSING
    return float(np.mean(deltas)), float(np.std(deltas))


def _iei_trend(times: list[int]) -> float:
    """Mean IEI of the second temporal half over the first.

    Events are split at the midpoint of [t_first, t_last]; events at the
    midpoint fall in the first half. Either half with fewer than two events,
    or a zero first-half mean, yields NaN.
    """
    if len(times) < 2:
        return MISSING
    mid = (times[0] + times[-1]) / 2.0
    first = [t for t in times if t <= mid]
    second = [t for t in times if t > mid]
    if len(first) < 2 or len(second) < 2:
        return MISSING
    m1 = float(np.mean(_diffs(first)))
    m2 = float(np.mean(_diffs(second)))
    if m1 <= 0.0:
        return MISSING
    return m2 / m1


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else MISSING


def extract_features(trace: Trace) -> FeatureVector:
    """Compute all 41 features for one trace. Deterministic, never raises."""
    events = trace.events
    times = [e.t_ms for e in events]

    by_kind: dict[EventKind, list[Event]] = {k: [] for k in EventKind}
    for e in events:
        by_kind[e.kind].append(e)

    clicks = by_kind[EventKind.CLICK]
    scrolls = by_kind[EventKind.SCROLL]
    navs = by_kind[EventKind.NAVIGATE]
    keys = by_kind[EventKind.KEYDOWN]
    focuses = by_kind[EventKind.FOCUS]
    unloads = by_kind[EventKind.BEFOREUNLOAD]

    n_clicks = len(clicks)
    n_scrolls = len(scrolls)
    n_navs = len(navs)
    n_keys = len(keys)
    n_total = len(events)

    # Unique URLs come from navigate payloads plus the metadata url list;
    # recorded page_count wins when present.
    urls = [e.payload.url for e in navs] + list(trace.meta.urls)
    unique_urls = set(urls)
    if trace.meta.page_count is not None:
        page_count = float(trace.meta.page_count)
    else:
        page_count = float(len(unique_urls))
    hosts = {h for u in unique_urls if (h := _hostname(u)) is not None}

    ieis = _diffs(times)
    mean_iei, std_iei, median_iei, p10_iei, p90_iei = iei_stats(ieis)

    click_mean, click_std = _mean_std(_diffs([e.t_ms for e in clicks]))
    nav_deltas = _diffs([e.t_ms for e in navs])
    nav_mean, nav_std = _mean_std(nav_deltas)
    key_mean, key_std = _mean_std(_diffs([e.t_ms for e in keys]))
    max_dwell = float(np.max(nav_deltas)) if nav_deltas.size else MISSING

    depths = np.asarray([e.payload.depth_pct for e in scrolls], dtype=np.float64)
    exit_depths = np.asarray([e.payload.depth_pct for e in unloads], dtype=np.float64)

    if n_clicks:
        xs = np.asarray([e.payload.x for e in clicks], dtype=np.float64)
        ys = np.asarray([e.payload.y for e in clicks], dtype=np.float64)
        click_x_std = float(np.std(xs))
        click_y_std = float(np.std(ys))
        bbox_frac = float((xs.max() - xs.min()) * (ys.max() - ys.min()) / _VIEWPORT_AREA)
        top_frac = float(np.mean(ys < _TOP_QUARTER_Y))
    else:
        click_x_std = click_y_std = bbox_frac = top_frac = MISSING

    n_link_clicks = sum(1 for e in clicks if e.payload.is_link)
    n_popstate = sum(1 for e in navs if e.payload.trigger is NavTrigger.POPSTATE)
    n_structural = sum(1 for e in keys if is_structural_key(e.payload.key))

    values = np.array(
        [
            float(n_clicks),
            float(n_scrolls),
            float(n_navs),
            float(n_keys),
            float(len(focuses)),
            float(n_total),
            page_count,
            float(len(hosts)),
            (times[-1] - times[0]) / 1000.0 if n_total else 0.0,
            float(times[0]) if n_total else MISSING,
            mean_iei,
            std_iei,
            median_iei,
            p10_iei,
            p90_iei,
            _iei_trend(times),
            click_mean,
            click_std,
            nav_mean,
            nav_std,
            max_dwell,
            key_mean,
            key_std,
            float(np.max(depths)) if depths.size else MISSING,
            float(np.mean(depths)) if depths.size else MISSING,
            float(np.sum(depths > 60.0)),
            float(scroll_reversals(depths)),
            click_x_std,
            click_y_std,
            bbox_frac,
            top_frac,
            float(n_link_clicks),
            _ratio(n_link_clicks, n_clicks),
            _ratio(n_popstate, n_navs),
            _ratio(n_scrolls, n_clicks),
            _ratio(n_total, page_count),
            _ratio(n_navs, n_clicks),
            _ratio(n_keys, page_count),
            _ratio(len(focuses), page_count),
            _ratio(n_structural, n_keys),
            float(np.mean(exit_depths)) if exit_depths.size else MISSING,
        ],
        dtype=np.float64,
    )
    return FeatureVector(values)
