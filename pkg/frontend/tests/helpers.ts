/** Scripted stand-ins for the session service socket. */

import { WebSocketLike } from "../src/socket";

export class FakeSocket implements WebSocketLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  readyState = 0;
  sent: string[] = [];
  closedByClient = false;

  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  message(raw: string): void {
    this.onmessage?.({ data: raw });
  }

  closeFromServer(): void {
    this.readyState = 3;
    this.onclose?.();
  }

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closedByClient = true;
    this.readyState = 3;
    this.onclose?.();
  }
}

export class FakeSocketFactory {
  instances: FakeSocket[] = [];

  factory = (): FakeSocket => {
    const sock = new FakeSocket();
    this.instances.push(sock);
    return sock;
  };

  latest(): FakeSocket {
    return this.instances[this.instances.length - 1];
  }
}

/** Serialize a server message the way the backend does. */
export function wire(kind: string, seq: number, t_ms: number, payload: unknown): string {
  return JSON.stringify({ kind, seq, t_ms, payload }).replace(/,"/g, ', "').replace(/":/g, '": ');
}

export function etaUpdate(seq: number, block: number, eta: number | string): string {
  const etaText = typeof eta === "string" ? eta : JSON.stringify(eta);
  return (
    `{"kind": "eta-update", "seq": ${seq}, "t_ms": ${block * 200}.0, ` +
    `"payload": {"eta": ${etaText}, "block": ${block}, "segments": ${block * 5000}}}`
  );
}
