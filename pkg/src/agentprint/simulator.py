"""Synthetic agent corpora with controllable behavioral separation.

Each AgentProfile parameterizes one agent's event statistics: how many
events it emits, how it mixes action kinds, how long it pauses before each
kind of action (lognormal, in log-ms), where it clicks, and how it scrolls
and navigates. Generation is fully deterministic given (profile, seed).
"""

from __future__ import annotations

import hashlib
import json
import string
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import yaml

from .errors import ConfigError
from .ingest import serialize_episode
from .trace import (
    BeforeUnloadPayload,
    ClickPayload,
    Event,
    EventKind,
    EpisodeMetadata,
    FocusPayload,
    KeydownPayload,
    NavigatePayload,
    NavTrigger,
    ScrollPayload,
    Trace,
    VIEWPORT_H,
    VIEWPORT_W,
)

__all__ = [
    "AgentProfile",
    "generate_trace",
    "generate_corpus",
    "preset_suites",
    "load_profiles",
    "save_profiles",
]

KIND_ORDER = (
    EventKind.CLICK,
    EventKind.KEYDOWN,
    EventKind.SCROLL,
    EventKind.NAVIGATE,
    EventKind.BEFOREUNLOAD,
    EventKind.FOCUS,
)

_STRUCTURAL_POOL = (
    "Enter",
    "Tab",
    "Escape",
    "Backspace",
    "Delete",
    "ArrowDown",
    "ArrowUp",
    "ArrowLeft",
    "ArrowRight",
)
_PRINTABLE_POOL = tuple(string.ascii_lowercase)

_BASE_URL = "https://www.site.test"


@dataclass(frozen=True)
class AgentProfile:
    """Behavioral distribution bundle for one synthetic agent."""

    agent_id: str
    iei_lognormal: Mapping[str, tuple[float, float]]  # kind -> (mu, sigma) in log-ms
    action_mix: Mapping[str, float]  # kind -> probability, sums to 1
    click_center: tuple[float, float] = (640.0, 384.0)
    click_std: float = 150.0
    link_click_prob: float = 0.5
    scroll_depth_walk: tuple[float, float, float] = (15.0, 5.0, 0.15)  # step mean, step std, reversal prob
    structural_key_prob: float = 0.25
    popstate_prob: float = 0.1
    pages_per_episode: tuple[float, float] = (5.0, 6.0)  # mean, dispersion
    events_per_episode: tuple[float, float] = (40.0, 10.0)
    model_name: str = ""

    def __post_init__(self):
        mix_total = sum(self.action_mix.values())
        if abs(mix_total - 1.0) > 1e-9:
            raise ValueError(f"{self.agent_id}: action_mix sums to {mix_total}, expected 1")
        for kind, p in self.action_mix.items():
            EventKind(kind)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{self.agent_id}: action_mix[{kind}] out of [0,1]")
        for kind in KIND_ORDER:
            if kind.value not in self.iei_lognormal:
                raise ValueError(f"{self.agent_id}: missing iei_lognormal for {kind.value}")
            _, sigma = self.iei_lognormal[kind.value]
            if sigma <= 0:
                raise ValueError(f"{self.agent_id}: sigma must be > 0 for {kind.value}")
        for name in ("link_click_prob", "structural_key_prob", "popstate_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{self.agent_id}: {name} out of [0,1]")


def _neg_binomial(rng: np.random.Generator, mean: float, dispersion: float) -> int:
    """Negative binomial draw parameterized by (mean, dispersion r)."""
    p = dispersion / (dispersion + mean)
    return int(rng.negative_binomial(dispersion, p))


def _episode_rng(seed: int, agent_id: str, dataset: str, index: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{agent_id}/{dataset}/{index}".encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, *words]))


def generate_trace(
    profile: AgentProfile,
    seed: int | np.random.Generator,
    dataset: str = "synthetic",
    episode_id: str = "ep-0000",
) -> Trace:
    """Sample one episode from a profile.

    Event count is negative-binomial; kinds are i.i.d. from the action mix;
    each event's gap is lognormal conditioned on its kind. Navigations move
    through a page set sized by pages_per_episode (popstate walks back), and
    each page transition emits a beforeunload carrying the current scroll
    depth. Scroll depth follows a bounded walk in [0, 100] that resets on
    navigation.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n_events = max(1, _neg_binomial(rng, *profile.events_per_episode))
    n_pages = max(1, _neg_binomial(rng, *profile.pages_per_episode))
    mix = np.array([profile.action_mix.get(k.value, 0.0) for k in KIND_ORDER])
    kinds = rng.choice(len(KIND_ORDER), size=n_events, p=mix / mix.sum())

    mu_sigma = {k: profile.iei_lognormal[k.value] for k in KIND_ORDER}
    step_mean, step_std, reversal_prob = profile.scroll_depth_walk

    events: list[Event] = []
    t = 0.0
    depth = 0.0
    direction = 1.0
    history = [f"{_BASE_URL}/start"]
    next_page = 1

    def emit(kind: EventKind, payload) -> None:
        nonlocal t
        mu, sigma = mu_sigma[kind]
        t += rng.lognormal(mu, sigma)
        events.append(Event(kind=kind, t_ms=int(round(t)), payload=payload))

    for code in kinds:
        kind = KIND_ORDER[code]
        if kind is EventKind.CLICK:
            x = float(np.clip(rng.normal(profile.click_center[0], profile.click_std), 0, VIEWPORT_W))
            y = float(np.clip(rng.normal(profile.click_center[1], profile.click_std), 0, VIEWPORT_H))
            emit(kind, ClickPayload(x=round(x), y=round(y), is_link=bool(rng.random() < profile.link_click_prob)))
        elif kind is EventKind.KEYDOWN:
            pool = _STRUCTURAL_POOL if rng.random() < profile.structural_key_prob else _PRINTABLE_POOL
            emit(kind, KeydownPayload(key=pool[rng.integers(len(pool))]))
        elif kind is EventKind.SCROLL:
            if rng.random() < reversal_prob:
                direction = -direction
            depth = float(np.clip(depth + direction * abs(rng.normal(step_mean, step_std)), 0.0, 100.0))
            emit(kind, ScrollPayload(depth_pct=depth))
        elif kind is EventKind.BEFOREUNLOAD:
            emit(kind, BeforeUnloadPayload(depth_pct=depth))
        elif kind is EventKind.FOCUS:
            emit(kind, FocusPayload(target="input" if rng.random() < 0.8 else "textarea"))
        else:  # NAVIGATE: leave the current page, then load the next one
            emit(EventKind.BEFOREUNLOAD, BeforeUnloadPayload(depth_pct=depth))
            if len(history) >= 2 and rng.random() < profile.popstate_prob:
                history.pop()
                url, trigger = history[-1], NavTrigger.POPSTATE
            else:
                url = f"{_BASE_URL}/page-{min(next_page, n_pages - 1):03d}"
                next_page += 1
                history.append(url)
                trigger = NavTrigger.HTTP
            emit(kind, NavigatePayload(url=url, trigger=trigger))
            depth = 0.0
            direction = 1.0

    visited: list[str] = []
    seen = set()
    for url in [history[0]] + [e.payload.url for e in events if e.kind is EventKind.NAVIGATE]:
        if url not in seen:
            seen.add(url)
            visited.append(url)
    meta = EpisodeMetadata(
        agent_id=profile.agent_id,
        model_name=profile.model_name or f"sim/{profile.agent_id}",
        dataset=dataset,
        episode_id=episode_id,
        page_count=len(visited),
        urls=tuple(visited),
    )
    return Trace(meta=meta, events=tuple(events))


def generate_corpus(
    profiles: Iterable[AgentProfile],
    episodes_per_agent: tuple[int, int, int],
    out_dir: Path | str,
    seed: int,
    dataset: str = "synthetic",
) -> dict[str, str]:
    """Write a corpus in the canonical file layout plus a split manifest.

    Returns the episode_id -> split mapping that was written to
    ``out_dir/splits.json``.
    """
    profiles = list(profiles)
    ids = [p.agent_id for p in profiles]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ConfigError(f"duplicate agent_id(s): {', '.join(dupes)}")
    out_dir = Path(out_dir)
    n_train, n_val, n_test = episodes_per_agent
    split_plan = ["train"] * n_train + ["val"] * n_val + ["test"] * n_test
    manifest: dict[str, str] = {}
    stamp = f"s{seed:010d}"
    for profile in profiles:
        ep_dir = out_dir / profile.agent_id / dataset / stamp
        ep_dir.mkdir(parents=True, exist_ok=True)
        for index, split in enumerate(split_plan):
            episode_id = f"{profile.agent_id}-{dataset}-{index:04d}"
            rng = _episode_rng(seed, profile.agent_id, dataset, index)
            trace = generate_trace(profile, rng, dataset=dataset, episode_id=episode_id)
            (ep_dir / f"{episode_id}.json").write_text(serialize_episode(trace))
            manifest[episode_id] = split
    (out_dir / "splits.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return manifest


# -- profile serialization ---------------------------------------------------


def _profile_to_doc(p: AgentProfile) -> dict:
    return {
        "agent_id": p.agent_id,
        "model_name": p.model_name,
        "events_per_episode": {"mean": p.events_per_episode[0], "dispersion": p.events_per_episode[1]},
        "pages_per_episode": {"mean": p.pages_per_episode[0], "dispersion": p.pages_per_episode[1]},
        "action_mix": dict(p.action_mix),
        "iei_lognormal": {k: {"mu": v[0], "sigma": v[1]} for k, v in p.iei_lognormal.items()},
        "click_center": {"x": p.click_center[0], "y": p.click_center[1], "std": p.click_std},
        "link_click_prob": p.link_click_prob,
        "scroll_depth_walk": {
            "step_mean": p.scroll_depth_walk[0],
            "step_std": p.scroll_depth_walk[1],
            "reversal_prob": p.scroll_depth_walk[2],
        },
        "structural_key_prob": p.structural_key_prob,
        "popstate_prob": p.popstate_prob,
    }


def _profile_from_doc(doc: Mapping) -> AgentProfile:
    click = doc.get("click_center", {})
    walk = doc.get("scroll_depth_walk", {})
    return AgentProfile(
        agent_id=doc["agent_id"],
        model_name=doc.get("model_name", ""),
        iei_lognormal={k: (v["mu"], v["sigma"]) for k, v in doc["iei_lognormal"].items()},
        action_mix=dict(doc["action_mix"]),
        click_center=(click.get("x", 640.0), click.get("y", 384.0)),
        click_std=click.get("std", 150.0),
        link_click_prob=doc.get("link_click_prob", 0.5),
        scroll_depth_walk=(
            walk.get("step_mean", 15.0),
            walk.get("step_std", 5.0),
            walk.get("reversal_prob", 0.15),
        ),
        structural_key_prob=doc.get("structural_key_prob", 0.25),
        popstate_prob=doc.get("popstate_prob", 0.1),
        pages_per_episode=(
            doc.get("pages_per_episode", {}).get("mean", 5.0),
            doc.get("pages_per_episode", {}).get("dispersion", 6.0),
        ),
        events_per_episode=(
            doc.get("events_per_episode", {}).get("mean", 40.0),
            doc.get("events_per_episode", {}).get("dispersion", 10.0),
        ),
    )


def save_profiles(profiles: Iterable[AgentProfile], path: Path | str) -> None:
    doc = {"profiles": [_profile_to_doc(p) for p in profiles]}
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))


def load_profiles(path: Path | str) -> list[AgentProfile]:
    doc = yaml.safe_load(Path(path).read_text())
    if not isinstance(doc, dict) or "profiles" not in doc:
        raise ConfigError(f"{path}: expected a top-level 'profiles' list")
    return [_profile_from_doc(d) for d in doc["profiles"]]


# -- preset suites -----------------------------------------------------------


def _uniform_timing(mu: float, sigma: float) -> dict[str, tuple[float, float]]:
    return {k.value: (mu, sigma) for k in KIND_ORDER}


_MIX_A = {"click": 0.45, "keydown": 0.10, "scroll": 0.30, "navigate": 0.10, "beforeunload": 0.0, "focus": 0.05}
_MIX_B = {"click": 0.12, "keydown": 0.38, "scroll": 0.20, "navigate": 0.18, "beforeunload": 0.0, "focus": 0.12}


def _separable14() -> list[AgentProfile]:
    # 7 widely spaced tempo levels x 2 sharply distinct action patterns.
    # Timing separates the levels; the pattern separates the rest from a
    # handful of events, and survives delay injection for an adapted
    # classifier. Length dispersion is kept high so truncated prefixes stay
    # inside the training distribution.
    mus = (5.8, 6.8, 7.8, 8.8, 9.8, 10.8, 11.8)
    sigmas = (0.25, 0.35, 0.30, 0.40, 0.30, 0.45, 0.35)
    profiles = []
    for i in range(14):
        level, pattern = i % 7, i // 7
        mu, sigma = mus[level], sigmas[level]
        timing = _uniform_timing(mu, sigma)
        timing["beforeunload"] = (mu - 1.2, 0.3)  # unload fires fast before the nav
        if pattern == 0:
            profiles.append(
                AgentProfile(
                    agent_id=f"agent-{i:02d}",
                    iei_lognormal=timing,
                    action_mix=_MIX_A,
                    click_center=(900.0, 150.0),
                    click_std=100.0,
                    link_click_prob=0.90,
                    scroll_depth_walk=(16.0, 5.0, 0.05),
                    structural_key_prob=0.10,
                    popstate_prob=0.05,
                    pages_per_episode=(5.0, 5.0),
                    events_per_episode=(42.0, 1.2),
                )
            )
        else:
            profiles.append(
                AgentProfile(
                    agent_id=f"agent-{i:02d}",
                    iei_lognormal=timing,
                    action_mix=_MIX_B,
                    click_center=(300.0, 550.0),
                    click_std=80.0,
                    link_click_prob=0.10,
                    scroll_depth_walk=(10.0, 4.0, 0.60),
                    structural_key_prob=0.90,
                    popstate_prob=0.45,
                    pages_per_episode=(8.0, 6.0),
                    events_per_episode=(34.0, 1.2),
                )
            )
    return profiles


def _timing_only() -> list[AgentProfile]:
    """Identical in everything except the inter-event timing distributions.

    The tempo set varies the global mean, the spread, and two per-kind
    skews, so separating the agents needs several timing features (mean,
    dispersion percentiles, per-type latencies), never an action feature.
    """
    shared = dict(
        action_mix=_MIX_A,
        click_center=(640.0, 300.0),
        click_std=150.0,
        link_click_prob=0.6,
        scroll_depth_walk=(14.0, 5.0, 0.2),
        structural_key_prob=0.3,
        popstate_prob=0.1,
        pages_per_episode=(5.0, 6.0),
        events_per_episode=(40.0, 10.0),
    )
    timings = []
    for mu, sigma in ((5.8, 0.3), (6.8, 0.3), (7.8, 0.3), (5.8, 1.0)):
        timings.append(_uniform_timing(mu, sigma))
    skewed = _uniform_timing(6.8, 0.3)
    skewed["keydown"] = (5.2, 0.3)  # fast typist
    skewed["navigate"] = (7.8, 0.3)  # long dwell
    timings.append(skewed)
    return [
        AgentProfile(agent_id=f"tempo-{i}", iei_lognormal=t, **shared)
        for i, t in enumerate(timings)
    ]


_ACTION_PATTERNS = (
    # name, mix, link, structural, popstate, click center, std, walk
    ("clicky", {"click": 0.55, "keydown": 0.10, "scroll": 0.15, "navigate": 0.13, "beforeunload": 0.0, "focus": 0.07},
     0.95, 0.05, 0.05, (1100.0, 100.0), 60.0, (18.0, 5.0, 0.05)),
    ("scrolly", {"click": 0.15, "keydown": 0.10, "scroll": 0.55, "navigate": 0.13, "beforeunload": 0.0, "focus": 0.07},
     0.50, 0.50, 0.10, (640.0, 380.0), 250.0, (25.0, 8.0, 0.65)),
    ("typey", {"click": 0.14, "keydown": 0.55, "scroll": 0.10, "navigate": 0.11, "beforeunload": 0.0, "focus": 0.10},
     0.50, 0.95, 0.05, (400.0, 300.0), 120.0, (10.0, 3.0, 0.20)),
    ("navvy", {"click": 0.20, "keydown": 0.10, "scroll": 0.12, "navigate": 0.48, "beforeunload": 0.0, "focus": 0.10},
     0.60, 0.30, 0.50, (200.0, 650.0), 80.0, (14.0, 4.0, 0.30)),
    ("even", {"click": 0.22, "keydown": 0.22, "scroll": 0.22, "navigate": 0.22, "beforeunload": 0.0, "focus": 0.12},
     0.05, 0.60, 0.25, (900.0, 500.0), 150.0, (8.0, 2.0, 0.45)),
)


def _action_profile(
    agent_id: str, pattern, timing, events: tuple[float, float] = (40.0, 10.0)
) -> AgentProfile:
    _, mix, link, structural, popstate, center, std, walk = pattern
    return AgentProfile(
        agent_id=agent_id,
        iei_lognormal=timing,
        action_mix=mix,
        click_center=center,
        click_std=std,
        link_click_prob=link,
        scroll_depth_walk=walk,
        structural_key_prob=structural,
        popstate_prob=popstate,
        pages_per_episode=(5.0, 6.0),
        events_per_episode=events,
    )


def _action_only() -> list[AgentProfile]:
    # One shared, deliberately noisy timing distribution; only what the
    # agents do differs. High sigma keeps timing estimates uninformative.
    timing = _uniform_timing(6.8, 1.1)
    return [
        _action_profile(f"mix-{p[0]}", p, timing) for p in _ACTION_PATTERNS
    ]


def _openset_knowns() -> list[AgentProfile]:
    # Five agents spread over both tempo and action pattern: separable on
    # two independent axes, with long traces so every class is classified
    # with uniformly high confidence.
    mus = (5.8, 6.8, 7.8, 8.8, 9.8)
    events = (60.0, 25.0)
    return [
        _action_profile(f"agent-{i:02d}", _ACTION_PATTERNS[i], _uniform_timing(mus[i], 0.35), events)
        for i in range(5)
    ]


def _clone_pair() -> list[AgentProfile]:
    base = _openset_knowns()
    clone = replace(base[0], agent_id="clone-0")
    return base + [clone]


def _openset_extreme() -> list[AgentProfile]:
    """The open-set knowns plus a chimera as the natural held-out agent.

    The "outlier" pairs known-0's tempo with known-1's action pattern, a
    joint combination no known agent occupies: a classifier that keys on
    both families cannot place it confidently.
    """
    known = _openset_knowns()
    outlier = _action_profile(
        "outlier", _ACTION_PATTERNS[1], _uniform_timing(5.8, 0.35), (60.0, 25.0)
    )
    return known + [outlier]


def preset_suites() -> dict[str, list[AgentProfile]]:
    """Named profile sets used by tests and the CLI."""
    return {
        "separable14": _separable14(),
        "timing-only": _timing_only(),
        "action-only": _action_only(),
        "clone-pair": _clone_pair(),
        "openset-extreme": _openset_extreme(),
    }
