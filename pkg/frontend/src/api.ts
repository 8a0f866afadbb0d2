/** Typed client for the isochrone service. */

export interface Info {
  vertices: number;
  edges: number;
  bbox: { lat_min: number; lat_max: number; lon_min: number; lon_max: number };
  algorithms: string[];
  tau_min_s: number;
  tau_max_s: number;
}

export interface EdgeFeature {
  type: "Feature";
  geometry: { type: "LineString"; coordinates: [number, number][] };
  properties: {
    tail: number;
    head: number;
    direction: "in_out" | "out_in";
    tau_s: number;
    algo: string;
  };
}

export interface IsochroneResponse {
  type: "FeatureCollection";
  features: EdgeFeature[];
  properties: {
    edge_count: number;
    query_ms: number;
    source: number;
    tau_s: number;
    algo: string;
  };
}

export function isochroneUrl(
  base: string,
  lat: number,
  lon: number,
  tauSeconds: number,
  algo: string,
): string {
  const params = new URLSearchParams({
    lat: lat.toFixed(6),
    lon: lon.toFixed(6),
    tau: String(Math.max(1, Math.round(tauSeconds))),
    algo,
  });
  return `${base}/api/isochrone?${params.toString()}`;
}

export async function fetchInfo(base = ""): Promise<Info> {
  const res = await fetch(`${base}/api/info`);
  if (!res.ok) throw new Error(`info failed: HTTP ${res.status}`);
  return res.json();
}

export async function fetchIsochrone(
  base: string,
  lat: number,
  lon: number,
  tauSeconds: number,
  algo: string,
): Promise<IsochroneResponse> {
  const res = await fetch(isochroneUrl(base, lat, lon, tauSeconds, algo));
  if (!res.ok) {
    let detail = `HTTP ${res.status}`;
    try {
      const body = await res.json();
      if (body.detail) detail = `${detail}: ${body.detail}`;
    } catch {
      /* plain status is enough */
    }
    throw new Error(detail);
  }
  return res.json();
}
