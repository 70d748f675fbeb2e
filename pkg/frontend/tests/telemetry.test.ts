import { describe, expect, it } from "vitest";

import { parseEnvelope } from "../src/protocol";
import { ETA_RING, TelemetryView } from "../src/telemetry";
import { etaUpdate } from "./helpers";

function feed(view: TelemetryView, raw: string): void {
  const msg = parseEnvelope(raw);
  if (msg === null) throw new Error("bad fixture");
  view.apply(msg, raw);
}

describe("telemetry view", () => {
  it("keeps the eta readout byte-for-byte from the wire", () => {
    const view = new TelemetryView();
    // a value whose JS re-serialization would differ from the wire bytes
    feed(view, etaUpdate(1, 1, "0.577400"));
    expect(view.etaReadout).toBe("0.577400");
    expect(String(Number("0.577400"))).not.toBe("0.577400");
    feed(view, etaUpdate(2, 2, 0.5774050758746683));
    expect(view.etaReadout).toBe("0.5774050758746683");
  });

  it("bounds the eta ring at 600 points", () => {
    const view = new TelemetryView();
    for (let i = 1; i <= ETA_RING + 50; i++) feed(view, etaUpdate(i, i, 0.5));
    expect(view.etaSeries.length).toBe(ETA_RING);
    expect(view.etaSeries[0].t_ms).toBe(51 * 200);
  });

  it("histogram edges are fixed and counts accumulate", () => {
    const view = new TelemetryView();
    const edges = [...view.histEdges];
    feed(view, `{"kind": "quad-batch", "seq": 1, "t_ms": 0.1, "payload": {"values": [0.05, 0.05, -3.99, 9.0], "segments": 4}}`);
    expect(view.histEdges).toEqual(edges);
    expect(view.histSamples).toBe(3); // 9.0 is out of range
    expect(view.histCounts[0]).toBe(1); // -3.99 lands in the first bin
    expect(view.histCounts.reduce((a, b) => a + b, 0)).toBe(3);
  });

  it("recon updates replace diagonals, sigmas and wigner", () => {
    const view = new TelemetryView();
    feed(view, JSON.stringify({
      kind: "recon-update", seq: 3, t_ms: 2000.0,
      payload: {
        diagonals: [0.41, 0.58, 0.01], sigmas: [0.001, 0.002, 0.001],
        iterations: 120, converged: true, window: 50000,
        wigner: { radii: [0, 1], values: [-0.05, 0.1] },
      },
    }));
    expect(view.diagonals).toEqual([0.41, 0.58, 0.01]);
    expect(view.wigner.values[0]).toBeLessThan(0);
  });

  it("rate updates refresh the rates line", () => {
    const view = new TelemetryView();
    feed(view, JSON.stringify({
      kind: "rate-update", seq: 4, t_ms: 1000.0,
      payload: { segments_per_s: 25000.0, trigger_rate_hz: 85120.0, segments: 25000 },
    }));
    expect(view.segmentsPerS).toBe(25000);
    expect(view.triggerRateHz).toBe(85120);
  });

  it("reset clears per-configuration accumulators only", () => {
    const view = new TelemetryView();
    feed(view, `{"kind": "quad-batch", "seq": 1, "t_ms": 0.1, "payload": {"values": [0.0], "segments": 1}}`);
    feed(view, etaUpdate(2, 1, 0.5));
    view.resetAccumulators();
    expect(view.histSamples).toBe(0);
    expect(view.etaSeries.length).toBe(1);
  });
});
