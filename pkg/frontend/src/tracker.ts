/**
 * In-page interaction tracker.
 *
 * Attaches capture-phase listeners for the six recorded event kinds and
 * delivers each event exactly once: to the host push callback
 * (window.__pushTraceEvent) when one is present and working, otherwise to
 * the in-page buffer (window.__agentTrace.events) that harvest() drains at
 * episode end.
 *
 * Timestamps are integer milliseconds from a monotonic clock anchored at
 * install time, so wall-clock adjustments can never produce negative gaps.
 * HTTP-level navigations are invisible from inside the page and are the
 * host harness's job to merge; popstate (history back/forward) is visible
 * and recorded here.
 */

export type NavTrigger = 'http' | 'popstate' | 'other';

export type WireEvent =
  | { kind: 'click'; t_ms: number; x: number; y: number; is_link: boolean }
  | { kind: 'keydown'; t_ms: number; key: string }
  | { kind: 'scroll'; t_ms: number; depth_pct: number }
  | { kind: 'navigate'; t_ms: number; url: string; trigger: NavTrigger }
  | { kind: 'beforeunload'; t_ms: number; depth_pct: number }
  | { kind: 'focus'; t_ms: number; target: string };

export interface EpisodeMeta {
  agent_id: string;
  model_name?: string;
  dataset?: string;
  episode_id?: string;
  page_count?: number;
  urls?: string[];
}

export interface Episode {
  meta: EpisodeMeta;
  events: WireEvent[];
}

export interface TrackerHandle {
  /** Drain and return all buffered (un-pushed) events. Idempotent when empty. */
  harvest(): WireEvent[];
  /** Remove all listeners and the install marker. */
  uninstall(): void;
}

interface AgentTraceGlobal {
  events: WireEvent[];
}

type PushCallback = (event: WireEvent) => void;

interface TrackedWindow extends Window {
  __agentTrace?: AgentTraceGlobal;
  __agentTraceHandle?: TrackerHandle;
  __pushTraceEvent?: PushCallback;
}

const FOCUSABLE = new Set(['input', 'textarea']);

function now(win: Window): number {
  return win.performance ? win.performance.now() : Date.now();
}

/** Bottom of the viewport as a percentage of full page height, in [0, 100]. */
export function scrollDepthPct(win: Window, doc: Document): number {
  const root = doc.documentElement;
  const height = root ? root.scrollHeight : 0;
  if (!height) return 0;
  const seen = (win.scrollY ?? 0) + (win.innerHeight ?? 0);
  return Math.max(0, Math.min(100, (seen / height) * 100));
}

export function install(doc: Document, win?: Window): TrackerHandle {
  const w = (win ?? doc.defaultView ?? window) as TrackedWindow;
  if (w.__agentTraceHandle) {
    return w.__agentTraceHandle; // double-install is a no-op
  }
  const buffer: AgentTraceGlobal = { events: [] };
  w.__agentTrace = buffer;
  const t0 = now(w);

  const record = (event: WireEvent): void => {
    const push = w.__pushTraceEvent;
    if (typeof push === 'function') {
      try {
        push(event);
        return; // delivered over the bridge; do not double-buffer
      } catch {
        // fall through to the backstop buffer
      }
    }
    buffer.events.push(event);
  };

  const stamp = (): number => Math.max(0, Math.round(now(w) - t0));

  const onClick = (ev: Event): void => {
    const mouse = ev as MouseEvent;
    const target = ev.target as Element | null;
    record({
      kind: 'click',
      t_ms: stamp(),
      x: mouse.clientX ?? 0,
      y: mouse.clientY ?? 0,
      is_link: !!(target && typeof target.closest === 'function' && target.closest('a[href]')),
    });
  };

  const onKeydown = (ev: Event): void => {
    record({ kind: 'keydown', t_ms: stamp(), key: (ev as KeyboardEvent).key });
  };

  const onScroll = (): void => {
    record({ kind: 'scroll', t_ms: stamp(), depth_pct: scrollDepthPct(w, doc) });
  };

  const onFocus = (ev: Event): void => {
    const target = ev.target as Element | null;
    const tag = target?.tagName?.toLowerCase() ?? '';
    if (FOCUSABLE.has(tag)) {
      record({ kind: 'focus', t_ms: stamp(), target: tag });
    }
  };

  const onBeforeUnload = (): void => {
    record({ kind: 'beforeunload', t_ms: stamp(), depth_pct: scrollDepthPct(w, doc) });
  };

  const onPopState = (): void => {
    record({
      kind: 'navigate',
      t_ms: stamp(),
      url: w.location?.href ?? '',
      trigger: 'popstate',
    });
  };

  doc.addEventListener('click', onClick, true);
  doc.addEventListener('keydown', onKeydown, true);
  w.addEventListener('scroll', onScroll, true);
  doc.addEventListener('focus', onFocus, true);
  w.addEventListener('beforeunload', onBeforeUnload, true);
  w.addEventListener('popstate', onPopState, true);

  const handle: TrackerHandle = {
    harvest(): WireEvent[] {
      return buffer.events.splice(0, buffer.events.length);
    },
    uninstall(): void {
      doc.removeEventListener('click', onClick, true);
      doc.removeEventListener('keydown', onKeydown, true);
      w.removeEventListener('scroll', onScroll, true);
      doc.removeEventListener('focus', onFocus, true);
      w.removeEventListener('beforeunload', onBeforeUnload, true);
      w.removeEventListener('popstate', onPopState, true);
      delete w.__agentTraceHandle;
      delete w.__agentTrace;
    },
  };
  w.__agentTraceHandle = handle;
  return handle;
}

/** Assemble the episode document consumed by the ingest pipeline. */
export function buildEpisode(meta: EpisodeMeta, events: WireEvent[]): Episode {
  const sorted = [...events].sort((a, b) => a.t_ms - b.t_ms);
  return { meta, events: sorted };
}
