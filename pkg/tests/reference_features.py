"""Straight-line reference computation of all 41 features.

Deliberately primitive: plain Python loops and arithmetic, no numpy, no
shared helpers with the package. Used as the independent oracle that
extract_features must match feature-for-feature.
"""

from __future__ import annotations

import math

NAN = float("nan")

STRUCTURAL = {"Enter", "Tab", "Escape", "Backspace", "Delete"}


def _mean(xs):
    return sum(xs) / len(xs) if xs else NAN


def _pop_std(xs):
    if not xs:
        return NAN
    m = sum(xs) / len(xs)
    acc = 0.0
    for x in xs:
        acc += (x - m) * (x - m)
    return math.sqrt(acc / len(xs))


def _percentile(xs, q):
    if not xs:
        return NAN
    ys = sorted(xs)
    pos = (len(ys) - 1) * q / 100.0
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    if lo == hi:
        return float(ys[lo])
    frac = pos - lo
    return ys[lo] * (1.0 - frac) + ys[hi] * frac


def _median(xs):
    return _percentile(xs, 50.0)


def _hostname(url):
    if "://" not in url:
        return None
    rest = url.split("://", 1)[1]
    for stop in "/?#":
        cut = rest.find(stop)
        if cut != -1:
            rest = rest[:cut]
    if "@" in rest:
        rest = rest.split("@", 1)[1]
    if rest.startswith("["):  # bracketed IPv6
        return rest[1 : rest.index("]")].lower() if "]" in rest else None
    if ":" in rest:
        rest = rest.split(":", 1)[0]
    return rest.lower() if rest else None


def reference_features(trace):
    """Returns a dict of name -> value for one agentprint Trace."""
    events = list(trace.events)
    times = [e.t_ms for e in events]

    clicks, scrolls, navs, keys, focuses, unloads = [], [], [], [], [], []
    for e in events:
        kind = e.kind.value
        if kind == "click":
            clicks.append(e)
        elif kind == "scroll":
            scrolls.append(e)
        elif kind == "navigate":
            navs.append(e)
        elif kind == "keydown":
            keys.append(e)
        elif kind == "focus":
            focuses.append(e)
        elif kind == "beforeunload":
            unloads.append(e)

    urls = [e.payload.url for e in navs]
    for u in trace.meta.urls:
        urls.append(u)
    unique_urls = set(urls)
    if trace.meta.page_count is not None:
        page_count = float(trace.meta.page_count)
    else:
        page_count = float(len(unique_urls))
    hosts = set()
    for u in unique_urls:
        h = _hostname(u)
        if h is not None:
            hosts.add(h)

    ieis = []
    for a, b in zip(times, times[1:]):
        ieis.append(float(b - a))

    def diffs(evts):
        ts = [e.t_ms for e in evts]
        return [float(b - a) for a, b in zip(ts, ts[1:])]

    click_d = diffs(clicks)
    nav_d = diffs(navs)
    key_d = diffs(keys)

    # temporal-half IEI trend
    trend = NAN
    if len(times) >= 2:
        mid = (times[0] + times[-1]) / 2.0
        first = [t for t in times if t <= mid]
        second = [t for t in times if t > mid]
        if len(first) >= 2 and len(second) >= 2:
            d1 = [float(b - a) for a, b in zip(first, first[1:])]
            d2 = [float(b - a) for a, b in zip(second, second[1:])]
            m1 = _mean(d1)
            if m1 > 0.0:
                trend = _mean(d2) / m1

    depths = [e.payload.depth_pct for e in scrolls]
    reversals = 0
    prev_sign = 0
    for a, b in zip(depths, depths[1:]):
        d = b - a
        if d == 0:
            continue
        sign = 1 if d > 0 else -1
        if prev_sign != 0 and sign != prev_sign:
            reversals += 1
        prev_sign = sign

    n_clicks = len(clicks)
    if n_clicks:
        xs = [float(e.payload.x) for e in clicks]
        ys = [float(e.payload.y) for e in clicks]
        click_x_std = _pop_std(xs)
        click_y_std = _pop_std(ys)
        bbox = (max(xs) - min(xs)) * (max(ys) - min(ys)) / (1280.0 * 768.0)
        top = sum(1 for y in ys if y < 192.0) / n_clicks
    else:
        click_x_std = click_y_std = bbox = top = NAN

    n_links = sum(1 for e in clicks if e.payload.is_link)
    n_pop = sum(1 for e in navs if e.payload.trigger.value == "popstate")
    n_struct = 0
    for e in keys:
        k = e.payload.key
        if k in STRUCTURAL or k.startswith("Arrow"):
            n_struct += 1

    def ratio(a, b):
        return a / b if b > 0 else NAN

    exit_depths = [e.payload.depth_pct for e in unloads]

    return {
        "n_clicks": float(n_clicks),
        "n_scrolls": float(len(scrolls)),
        "n_navigations": float(len(navs)),
        "n_keydowns": float(len(keys)),
        "n_focus": float(len(focuses)),
        "n_events_total": float(len(events)),
        "page_count": page_count,
        "n_unique_domains": float(len(hosts)),
        "total_duration_s": (times[-1] - times[0]) / 1000.0 if times else 0.0,
        "t_first_action_ms": float(times[0]) if times else NAN,
        "mean_iei_ms": _mean(ieis),
        "std_iei_ms": _pop_std(ieis),
        "median_iei_ms": _median(ieis),
        "p10_iei_ms": _percentile(ieis, 10.0),
        "p90_iei_ms": _percentile(ieis, 90.0),
        "iei_trend": trend,
        "mean_click_iei_ms": _mean(click_d),
        "std_click_iei_ms": _pop_std(click_d),
        "mean_nav_iei_ms": _mean(nav_d),
        "std_nav_iei_ms": _pop_std(nav_d),
        "max_page_dwell_ms": max(nav_d) if nav_d else NAN,
        "mean_key_iei_ms": _mean(key_d),
        "std_key_iei_ms": _pop_std(key_d),
        "max_scroll_pct": max(depths) if depths else NAN,
        "mean_scroll_pct": _mean(depths) if depths else NAN,
        "n_deep_scrolls": float(sum(1 for d in depths if d > 60.0)),
        "scroll_reversals": float(reversals),
        "click_x_std": click_x_std,
        "click_y_std": click_y_std,
        "click_bbox_area_frac": bbox,
        "click_top_frac": top,
        "n_link_clicks": float(n_links),
        "link_click_ratio": ratio(n_links, n_clicks),
        "popstate_ratio": ratio(n_pop, len(navs)),
        "scroll_to_click_ratio": ratio(len(scrolls), n_clicks),
        "actions_per_page": ratio(len(events), page_count),
        "nav_to_click_ratio": ratio(len(navs), n_clicks),
        "keydowns_per_page": ratio(len(keys), page_count),
        "focus_per_page": ratio(len(focuses), page_count),
        "structural_key_ratio": ratio(n_struct, len(keys)),
        "mean_exit_scroll_pct": _mean(exit_depths) if exit_depths else NAN,
    }
