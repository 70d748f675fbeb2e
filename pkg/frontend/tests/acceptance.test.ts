/** Dashboard acceptance: the live-alignment loop against a scripted service. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { KnobController } from "../src/knobs";
import { Envelope, KnobAck, parseEnvelope } from "../src/protocol";
import { ReconnectingSocket } from "../src/socket";
import { TelemetryView } from "../src/telemetry";
import { FakeSocketFactory, etaUpdate } from "./helpers";

/** Wire the three client pieces together the way main.ts does. */
function makeDashboard() {
  const factory = new FakeSocketFactory();
  const view = new TelemetryView();
  let knobs!: KnobController;
  const socket = new ReconnectingSocket(
    "ws://test/session",
    {
      onMessage: (msg: Envelope, raw: string) => {
        if (msg.kind === "knob-ack") {
          const ack = msg.payload as unknown as KnobAck;
          knobs.onAck(ack);
          if (ack.ok) view.resetAccumulators();
        } else {
          view.apply(msg, raw);
        }
      },
    },
    factory.factory,
  );
  knobs = new KnobController((msg) => socket.send(msg));
  socket.connect();
  factory.latest().open();
  return { socket, view, knobs, factory };
}

beforeEach(() => vi.useFakeTimers());
afterEach(() => vi.useRealTimers());

describe("dashboard acceptance", () => {
  it("visibility step 0.85 -> 0.90 produces a rising eta trace within 2 blocks", () => {
    const { view, knobs, factory } = makeDashboard();
    const server = factory.latest();

    // settled blocks at the 0.85-visibility operating point (~0.56)
    let seq = 0;
    const before = [0.5612, 0.5588, 0.5629, 0.5597];
    before.forEach((eta, i) => server.message(etaUpdate(++seq, i + 1, eta)));
    const baseline = view.etaSeries.at(-1)!.eta;

    knobs.change("visibility", 0.9);
    expect(knobs.locked("visibility")).toBe(true);
    const request = JSON.parse(server.sent.at(-1)!);
    expect(request).toEqual({ kind: "set-knob", name: "visibility", value: 0.9 });

    // service acknowledges with the new derived efficiency and the next
    // estimator blocks reflect the improved mode matching (~0.63)
    server.message(JSON.stringify({
      kind: "knob-ack", seq: ++seq, t_ms: 900.0,
      payload: { ok: true, name: "visibility", value: 0.9, eta_derived: 0.6477408 },
    }));
    expect(knobs.displayed("visibility")).toBe(0.9);

    server.message(etaUpdate(++seq, 5, 0.6302));
    server.message(etaUpdate(++seq, 6, 0.6351));

    const afterChange = view.etaSeries.slice(-2).map((p) => p.eta);
    expect(afterChange[0]).toBeGreaterThan(baseline + 0.04); // first block already rises
    expect(afterChange[1]).toBeGreaterThan(baseline + 0.04);
  });

  it("eta readout equals the latest eta-update payload byte-for-byte", () => {
    const { view, factory } = makeDashboard();
    const server = factory.latest();
    const wireValues = ["0.5774050758746683", "0.564200", "5.2e-01"];
    wireValues.forEach((text, i) => server.message(etaUpdate(i + 1, i + 1, text)));
    expect(view.etaReadout).toBe("5.2e-01"); // exactly as transmitted
  });

  it("reconnect recovers without duplicated seq", () => {
    const { socket, view, factory } = makeDashboard();
    factory.latest().message(etaUpdate(1, 1, 0.56));
    factory.latest().message(etaUpdate(2, 2, 0.57));
    factory.latest().closeFromServer();
    expect(socket.status).toBe("stale");

    vi.advanceTimersByTime(600);
    const server2 = factory.latest();
    expect(server2).not.toBe(factory.instances[0]);
    server2.open();
    server2.message(etaUpdate(2, 2, 0.57)); // replay of the last message
    server2.message(etaUpdate(3, 3, 0.58));

    expect(socket.status).toBe("live");
    expect(view.etaSeries.map((p) => p.eta)).toEqual([0.56, 0.57, 0.58]);
    expect(socket.droppedDuplicates).toBe(1);
    const seqs = view.etaSeries.map((p) => p.t_ms);
    expect(new Set(seqs).size).toBe(seqs.length);
  });
});
