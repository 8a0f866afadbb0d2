/** Self-contained canvas map pane: equirectangular projection of the
 * graph's bounding box with wheel zoom and drag pan.  Isochrone edges
 * render as direction-colored segments (no polygon fill). */

import type { Info, IsochroneResponse } from "./api";

const LEAVING = "#ff9d45"; // in_out: tail inside the region
const ENTERING = "#5fb7ff"; // out_in: head inside the region

export class MapPane {
  private ctx: CanvasRenderingContext2D;
  private bbox: Info["bbox"];
  private scale = 1; // zoom factor over the fitted view
  private cx: number; // view center, degrees
  private cy: number;
  private layer: IsochroneResponse | null = null;
  private marker: { lat: number; lon: number } | null = null;

  constructor(private canvas: HTMLCanvasElement, info: Info) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    this.bbox = info.bbox;
    this.cx = (info.bbox.lon_min + info.bbox.lon_max) / 2;
    this.cy = (info.bbox.lat_min + info.bbox.lat_max) / 2;
    this.attach();
    this.resize();
  }

  private attach() {
    new ResizeObserver(() => this.resize()).observe(this.canvas);
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.25 : 0.8;
      this.scale = Math.min(200, Math.max(0.5, this.scale * factor));
      this.draw();
    });
    let drag: { x: number; y: number } | null = null;
    let moved = false;
    this.canvas.addEventListener("mousedown", (ev) => {
      drag = { x: ev.offsetX, y: ev.offsetY };
      moved = false;
    });
    this.canvas.addEventListener("mousemove", (ev) => {
      if (!drag) return;
      const dx = ev.offsetX - drag.x;
      const dy = ev.offsetY - drag.y;
      if (Math.abs(dx) + Math.abs(dy) > 3) moved = true;
      const ppd = this.pixelsPerDegree();
      this.cx -= dx / ppd;
      this.cy += dy / ppd;
      drag = { x: ev.offsetX, y: ev.offsetY };
      this.draw();
    });
    window.addEventListener("mouseup", () => {
      drag = null;
    });
    this.canvas.addEventListener("click", (ev) => {
      if (moved) return; // a drag, not a source selection
      const [lat, lon] = this.unproject(ev.offsetX, ev.offsetY);
      this.onClick?.(lat, lon);
    });
  }

  onClick: ((lat: number, lon: number) => void) | null = null;

  private pixelsPerDegree(): number {
    const spanLon = Math.max(this.bbox.lon_max - this.bbox.lon_min, 1e-9);
    const spanLat = Math.max(this.bbox.lat_max - this.bbox.lat_min, 1e-9);
    const fit = Math.min(this.canvas.width / spanLon, this.canvas.height / spanLat);
    return fit * 0.92 * this.scale;
  }

  private project(lat: number, lon: number): [number, number] {
    const ppd = this.pixelsPerDegree();
    return [
      this.canvas.width / 2 + (lon - this.cx) * ppd,
      this.canvas.height / 2 - (lat - this.cy) * ppd,
    ];
  }

  private unproject(x: number, y: number): [number, number] {
    const ppd = this.pixelsPerDegree();
    return [
      this.cy - (y - this.canvas.height / 2) / ppd,
      this.cx + (x - this.canvas.width / 2) / ppd,
    ];
  }

  private resize() {
    const rect = this.canvas.getBoundingClientRect();
    this.canvas.width = Math.max(10, rect.width);
    this.canvas.height = Math.max(10, rect.height);
    this.draw();
  }

  setLayer(layer: IsochroneResponse | null) {
    this.layer = layer;
    this.draw();
  }

  setMarker(lat: number, lon: number) {
    this.marker = { lat, lon };
    this.draw();
  }

  draw() {
    const { ctx, canvas } = this;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    // bounding box of the network
    const [x0, y0] = this.project(this.bbox.lat_max, this.bbox.lon_min);
    const [x1, y1] = this.project(this.bbox.lat_min, this.bbox.lon_max);
    ctx.strokeStyle = "#2d3c4d";
    ctx.lineWidth = 1;
    ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);

    if (this.layer) {
      ctx.lineWidth = 1.6;
      for (const pass of ["in_out", "out_in"] as const) {
        ctx.strokeStyle = pass === "in_out" ? LEAVING : ENTERING;
        ctx.beginPath();
        for (const f of this.layer.features) {
          if (f.properties.direction !== pass) continue;
          const [[lon1, lat1], [lon2, lat2]] = f.geometry.coordinates;
          const [ax, ay] = this.project(lat1, lon1);
          const [bx, by] = this.project(lat2, lon2);
          ctx.moveTo(ax, ay);
          ctx.lineTo(bx, by);
        }
        ctx.stroke();
      }
    }
    if (this.marker) {
      const [mx, my] = this.project(this.marker.lat, this.marker.lon);
      ctx.fillStyle = "#ffffff";
      ctx.strokeStyle = "#d04040";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(mx, my, 5, 0, 2 * Math.PI);
      ctx.fill();
      ctx.stroke();
    }
  }
}
