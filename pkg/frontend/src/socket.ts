/** Reconnecting telemetry socket with sequence-gap accounting.

The server assigns a strictly increasing seq per subscriber; dropped
quad-batch messages surface as gaps, which are counted but tolerated.
Messages at or below the last seen seq (stale duplicates) are discarded.
On close the owner is flagged stale and a backoff reconnect is scheduled.
*/

import { Envelope, parseEnvelope } from "./protocol";

export type ConnectionStatus = "connecting" | "live" | "stale";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  send(data: string): void;
  close(): void;
  readyState: number;
}

export interface SocketHooks {
  onMessage(msg: Envelope, raw: string): void;
  onStatus?(status: ConnectionStatus): void;
  onGap?(expected: number, got: number): void;
  onMalformed?(raw: string): void;
}

const WS_OPEN = 1;

export class ReconnectingSocket {
  lastSeq = -1;
  gapCount = 0;
  droppedDuplicates = 0;
  reconnects = 0;
  status: ConnectionStatus = "connecting";

  private ws: WebSocketLike | null = null;
  private closed = false;
  private attempts = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private hooks: SocketHooks,
    private factory: (url: string) => WebSocketLike = (u) => new WebSocket(u) as unknown as WebSocketLike,
    private baseBackoffMs = 500,
  ) {}

  connect(): void {
    this.closed = false;
    this.setStatus("connecting");
    this.ws = this.factory(this.url);
    this.ws.onopen = () => {
      this.attempts = 0;
      this.setStatus("live");
    };
    this.ws.onmessage = (ev) => this.handleRaw(ev.data);
    this.ws.onclose = () => {
      this.setStatus("stale");
      if (!this.closed) this.scheduleReconnect();
    };
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.ws?.close();
  }

  /** Send one client message; returns false while disconnected. */
  send(obj: unknown): boolean {
    if (this.ws === null || this.ws.readyState !== WS_OPEN) return false;
    this.ws.send(JSON.stringify(obj));
    return true;
  }

  private handleRaw(raw: string): void {
    const msg = parseEnvelope(raw);
    if (msg === null) {
      this.hooks.onMalformed?.(raw);
      return;
    }
    if (msg.seq <= this.lastSeq) {
      this.droppedDuplicates += 1;
      return;
    }
    if (this.lastSeq >= 0 && msg.seq !== this.lastSeq + 1) {
      this.gapCount += 1;
      this.hooks.onGap?.(this.lastSeq + 1, msg.seq);
    }
    this.lastSeq = msg.seq;
    this.hooks.onMessage(msg, raw);
  }

  private scheduleReconnect(): void {
    const backoff = Math.min(this.baseBackoffMs * 2 ** this.attempts, 15_000);
    this.attempts += 1;
    this.timer = setTimeout(() => {
      this.reconnects += 1;
      this.connect();
    }, backoff);
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.hooks.onStatus?.(status);
  }
}
