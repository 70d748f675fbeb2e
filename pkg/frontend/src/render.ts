/** Canvas rendering of the four telemetry panels. */

import { densityCurve } from "./marginals";
import { TelemetryView } from "./telemetry";

const GRID = "#2a3444";
const ACCENT = "#53b4ff";
const OVERLAY = "#ffb454";
const NEGATIVE = "#ff6666";
const TEXT = "#9fb2c8";

function clear(ctx: CanvasRenderingContext2D): void {
  ctx.fillStyle = "#10151d";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
}

export function drawEtaStrip(ctx: CanvasRenderingContext2D, view: TelemetryView): void {
  clear(ctx);
  const { width: w, height: h } = ctx.canvas;
  const lo = 0.0;
  const hi = 1.0;
  ctx.strokeStyle = GRID;
  ctx.beginPath();
  for (const level of [0.25, 0.5, 0.75]) {
    const y = h - ((level - lo) / (hi - lo)) * h;
    ctx.moveTo(0, y);
    ctx.lineTo(w, y);
  }
  ctx.stroke();
  const pts = view.etaSeries;
  if (pts.length < 2) return;
  ctx.strokeStyle = ACCENT;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  const t0 = pts[0].t_ms;
  const t1 = pts[pts.length - 1].t_ms;
  const span = Math.max(t1 - t0, 1);
  pts.forEach((p, i) => {
    const x = ((p.t_ms - t0) / span) * (w - 8) + 4;
    const y = h - ((p.eta - lo) / (hi - lo)) * h;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}

export function drawHistogram(ctx: CanvasRenderingContext2D, view: TelemetryView): void {
  clear(ctx);
  const { width: w, height: h } = ctx.canvas;
  const bins = view.histCounts.length;
  if (view.histSamples === 0) return;
  const edges = view.histEdges;
  const binWidth = edges[1] - edges[0];
  // convert counts to a density so the model overlay shares the axis
  const density = view.histCounts.map((c) => c / (view.histSamples * binWidth));
  let yMax = Math.max(...density) * 1.15;

  const qs = edges.slice(0, -1).map((e) => e + binWidth / 2);
  let overlay: number[] | null = null;
  if (view.diagonals.length > 0) {
    overlay = densityCurve(view.diagonals, qs);
    yMax = Math.max(yMax, ...overlay.map((v) => v * 1.15));
  }

  ctx.fillStyle = ACCENT;
  density.forEach((d, i) => {
    const x = (i / bins) * w;
    const bh = (d / yMax) * h;
    ctx.fillRect(x, h - bh, w / bins - 1, bh);
  });

  if (overlay !== null) {
    ctx.strokeStyle = OVERLAY;
    ctx.lineWidth = 2;
    ctx.beginPath();
    overlay.forEach((v, i) => {
      const x = ((i + 0.5) / bins) * w;
      const y = h - (v / yMax) * h;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

export function drawDiagonals(ctx: CanvasRenderingContext2D, view: TelemetryView): void {
  clear(ctx);
  const { width: w, height: h } = ctx.canvas;
  const diag = view.diagonals;
  if (diag.length === 0) return;
  const slot = w / diag.length;
  ctx.font = "11px monospace";
  diag.forEach((p, n) => {
    const bh = p * (h - 18);
    const x = n * slot + slot * 0.2;
    ctx.fillStyle = ACCENT;
    ctx.fillRect(x, h - 14 - bh, slot * 0.6, bh);
    const sigma = view.sigmas[n] ?? 0;
    if (sigma > 0) {
      const err = sigma * (h - 18);
      const cx = x + slot * 0.3;
      ctx.strokeStyle = OVERLAY;
      ctx.beginPath();
      ctx.moveTo(cx, h - 14 - bh - err);
      ctx.lineTo(cx, h - 14 - bh + err);
      ctx.stroke();
    }
    ctx.fillStyle = TEXT;
    ctx.fillText(`${n}`, n * slot + slot * 0.45, h - 3);
  });
}

export function drawWigner(ctx: CanvasRenderingContext2D, view: TelemetryView): void {
  clear(ctx);
  const { width: w, height: h } = ctx.canvas;
  const { radii, values } = view.wigner;
  if (radii.length < 2) return;
  const vMax = Math.max(1 / Math.PI, ...values) * 1.1;
  const vMin = Math.min(-0.05, ...values) * 1.3;
  const toY = (v: number) => h - ((v - vMin) / (vMax - vMin)) * h;
  ctx.strokeStyle = GRID;
  ctx.beginPath();
  ctx.moveTo(0, toY(0));
  ctx.lineTo(w, toY(0));
  ctx.stroke();
  ctx.strokeStyle = values[0] < 0 ? NEGATIVE : ACCENT;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  radii.forEach((r, i) => {
    const x = (r / radii[radii.length - 1]) * (w - 8) + 4;
    const y = toY(values[i]);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}
