import { describe, expect, it, vi } from "vitest";

import { isochroneUrl, type IsochroneResponse } from "../src/api";
import {
  applyError,
  applyResponse,
  beginRequest,
  debounce,
  dismissError,
  everythingReachable,
  initialState,
} from "../src/state";

function fakeResponse(edges: number, source = 1): IsochroneResponse {
  return {
    type: "FeatureCollection",
    features: Array.from({ length: edges }, (_, i) => ({
      type: "Feature",
      geometry: {
        type: "LineString",
        coordinates: [
          [8.4, 49.0],
          [8.401, 49.0],
        ] as [number, number][],
      },
      properties: {
        tail: i + 1,
        head: i + 2,
        direction: "in_out" as const,
        tau_s: 600,
        algo: "isocrp",
      },
    })),
    properties: {
      edge_count: edges,
      query_ms: 2.5,
      source,
      tau_s: 600,
      algo: "isocrp",
    },
  };
}

describe("request sequencing", () => {
  it("renders the response of a completed request", () => {
    let s = initialState("isocrp");
    const { state, seq } = beginRequest(s, { lat: 49, lon: 8.4 }, 30, "isocrp");
    s = applyResponse(state, seq, fakeResponse(5));
    expect(s.layer?.properties.edge_count).toBe(5);
    expect(s.rendered).toBe(seq);
    expect(s.snappedSource).toBe(1);
  });

  it("discards stale responses from older requests", () => {
    let s = initialState("isocrp");
    const first = beginRequest(s, { lat: 49, lon: 8.4 }, 30, "isocrp");
    const second = beginRequest(first.state, { lat: 49.1, lon: 8.5 }, 60, "isocrp");
    s = applyResponse(second.state, second.seq, fakeResponse(7, 2));
    // the older response arrives afterwards and must not replace the layer
    s = applyResponse(s, first.seq, fakeResponse(3, 1));
    expect(s.layer?.properties.edge_count).toBe(7);
    expect(s.snappedSource).toBe(2);
  });

  it("keeps the layer on errors and clears the banner on dismiss", () => {
    let s = initialState("isocrp");
    const a = beginRequest(s, { lat: 49, lon: 8.4 }, 30, "isocrp");
    s = applyResponse(a.state, a.seq, fakeResponse(4));
    const b = beginRequest(s, { lat: 49, lon: 8.4 }, 45, "isocrp");
    s = applyError(b.state, b.seq, "HTTP 400: bad");
    expect(s.error).toContain("400");
    expect(s.layer?.properties.edge_count).toBe(4); // unchanged
    s = dismissError(s);
    expect(s.error).toBeNull();
  });

  it("ignores errors from superseded requests", () => {
    let s = initialState("isocrp");
    const a = beginRequest(s, { lat: 49, lon: 8.4 }, 30, "isocrp");
    const b = beginRequest(a.state, { lat: 49, lon: 8.4 }, 60, "isocrp");
    s = applyError(b.state, a.seq, "HTTP 500");
    expect(s.error).toBeNull();
  });

  it("flags the everything-reachable case", () => {
    let s = initialState("isocrp");
    const a = beginRequest(s, { lat: 49, lon: 8.4 }, 600, "isocrp");
    s = applyResponse(a.state, a.seq, fakeResponse(0));
    expect(everythingReachable(s)).toBe(true);
  });
});

describe("debounce", () => {
  it("collapses a burst into one trailing call", () => {
    vi.useFakeTimers();
    const calls: number[] = [];
    const fn = debounce((v: number) => calls.push(v), 180);
    fn(1);
    fn(2);
    vi.advanceTimersByTime(100);
    fn(3);
    vi.advanceTimersByTime(179);
    expect(calls).toEqual([]);
    vi.advanceTimersByTime(1);
    expect(calls).toEqual([3]);
    vi.useRealTimers();
  });
});

describe("api url", () => {
  it("builds the lat/lon query with integer seconds", () => {
    const url = isochroneUrl("", 49.0123456, 8.4, 629.7, "isograsp");
    expect(url).toBe(
      "/api/isochrone?lat=49.012346&lon=8.400000&tau=630&algo=isograsp",
    );
  });

  it("clamps tau to at least one second", () => {
    expect(isochroneUrl("", 49, 8.4, 0.2, "x")).toContain("tau=1");
  });
});
