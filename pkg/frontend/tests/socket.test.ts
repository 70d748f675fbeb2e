import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Envelope } from "../src/protocol";
import { ConnectionStatus, ReconnectingSocket } from "../src/socket";
import { FakeSocketFactory, etaUpdate } from "./helpers";

function makeClient() {
  const factory = new FakeSocketFactory();
  const received: Envelope[] = [];
  const gaps: Array<[number, number]> = [];
  const statuses: ConnectionStatus[] = [];
  let malformed = 0;
  const socket = new ReconnectingSocket(
    "ws://test/session",
    {
      onMessage: (msg) => received.push(msg),
      onGap: (expected, got) => gaps.push([expected, got]),
      onStatus: (s) => statuses.push(s),
      onMalformed: () => { malformed += 1; },
    },
    factory.factory,
  );
  return { socket, factory, received, gaps, statuses, malformed: () => malformed };
}

beforeEach(() => vi.useFakeTimers());
afterEach(() => vi.useRealTimers());

describe("reconnecting socket", () => {
  it("delivers ordered telemetry and tracks status", () => {
    const { socket, factory, received, statuses } = makeClient();
    socket.connect();
    factory.latest().open();
    factory.latest().message(etaUpdate(1, 1, 0.5));
    factory.latest().message(etaUpdate(2, 2, 0.6));
    expect(received.map((m) => m.seq)).toEqual([1, 2]);
    expect(statuses).toEqual(["connecting", "live"]);
  });

  it("detects sequence gaps and surfaces them", () => {
    const { socket, factory, gaps } = makeClient();
    socket.connect();
    factory.latest().open();
    factory.latest().message(etaUpdate(1, 1, 0.5));
    factory.latest().message(etaUpdate(5, 2, 0.6)); // 2..4 dropped quad batches
    expect(socket.gapCount).toBe(1);
    expect(gaps).toEqual([[2, 5]]);
  });

  it("drops stale or duplicated seq after reconnect", () => {
    const { socket, factory, received } = makeClient();
    socket.connect();
    factory.latest().open();
    factory.latest().message(etaUpdate(1, 1, 0.5));
    factory.latest().message(etaUpdate(2, 2, 0.6));
    factory.latest().closeFromServer();
    vi.advanceTimersByTime(600); // backoff elapses, new connection
    expect(factory.instances.length).toBe(2);
    factory.latest().open();
    factory.latest().message(etaUpdate(2, 2, 0.6)); // duplicate replay
    factory.latest().message(etaUpdate(3, 3, 0.7));
    expect(received.map((m) => m.seq)).toEqual([1, 2, 3]);
    expect(socket.droppedDuplicates).toBe(1);
    expect(socket.reconnects).toBe(1);
  });

  it("goes stale on disconnect and reconnects with backoff", () => {
    const { socket, factory, statuses } = makeClient();
    socket.connect();
    factory.latest().open();
    factory.latest().closeFromServer();
    expect(statuses.at(-1)).toBe("stale");
    vi.advanceTimersByTime(499);
    expect(factory.instances.length).toBe(1);
    vi.advanceTimersByTime(2);
    expect(factory.instances.length).toBe(2);
  });

  it("ignores malformed messages and stays live", () => {
    const { socket, factory, received, malformed } = makeClient();
    socket.connect();
    factory.latest().open();
    factory.latest().message("{broken");
    factory.latest().message(`{"kind": "mystery", "seq": 1, "t_ms": 0.0, "payload": {}}`);
    factory.latest().message(etaUpdate(1, 1, 0.5));
    expect(malformed()).toBe(2);
    expect(received.length).toBe(1);
    expect(socket.status).toBe("live");
  });

  it("send fails cleanly while disconnected", () => {
    const { socket, factory } = makeClient();
    socket.connect();
    expect(socket.send({ kind: "set-knob" })).toBe(false);
    factory.latest().open();
    expect(socket.send({ kind: "set-knob" })).toBe(true);
  });

  it("client close suppresses reconnection", () => {
    const { socket, factory } = makeClient();
    socket.connect();
    factory.latest().open();
    socket.close();
    vi.advanceTimersByTime(60_000);
    expect(factory.instances.length).toBe(1);
  });
});
