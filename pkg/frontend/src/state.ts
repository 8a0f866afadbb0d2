/** Explorer state: the rendered layer always matches the latest
 * completed request, stale responses are discarded by sequence number,
 * and slider changes are debounced before querying. */

import type { IsochroneResponse } from "./api";

export const SLIDER_DETENTS_MIN = [10, 30, 60, 100, 300, 500];
export const DEBOUNCE_MS = 180; // spec floor is 150

export interface ExplorerState {
  source: { lat: number; lon: number } | null;
  snappedSource: number | null;
  tauMinutes: number;
  algo: string;
  layer: IsochroneResponse | null;
  lastQueryMs: number | null;
  inFlight: number; // sequence number of the newest request
  rendered: number; // sequence number of the rendered layer
  error: string | null;
}

export function initialState(algo: string, tauMinutes = 30): ExplorerState {
  return {
    source: null,
    snappedSource: null,
    tauMinutes,
    algo,
    layer: null,
    lastQueryMs: null,
    inFlight: 0,
    rendered: 0,
    error: null,
  };
}

/** Begin a request: bumps the sequence and records the inputs. */
export function beginRequest(
  state: ExplorerState,
  source: { lat: number; lon: number },
  tauMinutes: number,
  algo: string,
): { state: ExplorerState; seq: number } {
  const seq = state.inFlight + 1;
  return {
    state: { ...state, source, tauMinutes, algo, inFlight: seq },
    seq,
  };
}

/** Apply a completed response; stale sequence numbers leave the
 * rendered layer untouched. */
export function applyResponse(
  state: ExplorerState,
  seq: number,
  response: IsochroneResponse,
): ExplorerState {
  if (seq < state.inFlight || seq <= state.rendered) {
    return state;
  }
  return {
    ...state,
    layer: response,
    snappedSource: response.properties.source,
    lastQueryMs: response.properties.query_ms,
    rendered: seq,
    error: null,
  };
}

/** A failed request surfaces a banner and leaves everything else. */
export function applyError(
  state: ExplorerState,
  seq: number,
  message: string,
): ExplorerState {
  if (seq < state.inFlight) return state;
  return { ...state, error: message };
}

export function dismissError(state: ExplorerState): ExplorerState {
  return { ...state, error: null };
}

/** True when the whole network is reachable at the current limit. */
export function everythingReachable(state: ExplorerState): boolean {
  return state.layer !== null && state.layer.properties.edge_count === 0;
}

/** Trailing-edge debounce; the wrapped call runs once the burst rests. */
export function debounce<Args extends unknown[]>(
  fn: (...args: Args) => void,
  waitMs: number = DEBOUNCE_MS,
  timers: {
    set: (cb: () => void, ms: number) => ReturnType<typeof setTimeout>;
    clear: (t: ReturnType<typeof setTimeout>) => void;
  } = { set: setTimeout, clear: clearTimeout },
): (...args: Args) => void {
  let pending: ReturnType<typeof setTimeout> | null = null;
  return (...args: Args) => {
    if (pending !== null) timers.clear(pending);
    pending = timers.set(() => {
      pending = null;
      fn(...args);
    }, waitMs);
  };
}
