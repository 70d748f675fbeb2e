/** Client-side telemetry state: everything the panels render.

No physics is recomputed here; the efficiency readout keeps the raw token
from the latest eta-update payload so the display matches the wire bytes.
Histogram bin edges are fixed when the view is created.
*/

import { Envelope, EtaUpdate, QuadBatch, RateUpdate, ReconUpdate, rawEtaToken } from "./protocol";

export const ETA_RING = 600;
export const HIST_BINS = 50;
export const HIST_RANGE = 4.0;

export interface EtaPoint {
  t_ms: number;
  eta: number;
}

export class TelemetryView {
  etaSeries: EtaPoint[] = [];
  etaReadout: string | null = null;
  histCounts = new Array<number>(HIST_BINS).fill(0);
  histSamples = 0;
  readonly histEdges: number[];
  diagonals: number[] = [];
  sigmas: number[] = [];
  wigner: { radii: number[]; values: number[] } = { radii: [], values: [] };
  reconverged = true;
  segmentsPerS = 0;
  triggerRateHz = 0;
  malformed = 0;

  constructor(bins: number = HIST_BINS, range: number = HIST_RANGE) {
    this.histEdges = Array.from({ length: bins + 1 }, (_, i) => -range + (2 * range * i) / bins);
  }

  apply(msg: Envelope, raw: string): void {
    switch (msg.kind) {
      case "eta-update": {
        const p = msg.payload as unknown as EtaUpdate;
        this.etaSeries.push({ t_ms: msg.t_ms, eta: p.eta });
        if (this.etaSeries.length > ETA_RING) this.etaSeries.splice(0, this.etaSeries.length - ETA_RING);
        this.etaReadout = rawEtaToken(raw);
        break;
      }
      case "quad-batch": {
        const p = msg.payload as unknown as QuadBatch;
        for (const v of p.values) this.addSample(v);
        break;
      }
      case "recon-update": {
        const p = msg.payload as unknown as ReconUpdate;
        this.diagonals = p.diagonals;
        this.sigmas = p.sigmas;
        this.wigner = p.wigner;
        this.reconverged = p.converged;
        break;
      }
      case "rate-update": {
        const p = msg.payload as unknown as RateUpdate;
        this.segmentsPerS = p.segments_per_s;
        this.triggerRateHz = p.trigger_rate_hz;
        break;
      }
      default:
        break;
    }
  }

  /** Reset per-configuration statistics (after an accepted knob change). */
  resetAccumulators(): void {
    this.histCounts.fill(0);
    this.histSamples = 0;
  }

  private addSample(v: number): void {
    const bins = this.histCounts.length;
    const lo = this.histEdges[0];
    const hi = this.histEdges[bins];
    if (v < lo || v >= hi) return;
    const idx = Math.floor(((v - lo) / (hi - lo)) * bins);
    this.histCounts[idx] += 1;
    this.histSamples += 1;
  }
}
