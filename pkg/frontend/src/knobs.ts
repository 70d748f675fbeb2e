/** Alignment knob controls: optimistic lock, server-acked display, rate limit.

One set-knob message per committed gesture; while an ack is pending the
control is locked and rapid slider drags are coalesced so at most one
message goes out per interval (trailing value wins). The displayed value is
always the last server-acknowledged one; a rejection reverts the control and
surfaces the error text.
*/

import { KnobAck } from "./protocol";

export interface KnobSpec {
  name: string;
  label: string;
  min: number;
  max: number;
  step: number;
  initial: number;
}

export const KNOB_SPECS: KnobSpec[] = [
  { name: "pump_power_scale", label: "pump power", min: 0.0, max: 4.0, step: 0.05, initial: 1.0 },
  { name: "visibility", label: "visibility", min: 0.0, max: 1.0, step: 0.005, initial: 0.85 },
  { name: "eta_l", label: "linear optics", min: 0.0, max: 1.0, step: 0.005, initial: 0.96 },
  { name: "eta_p", label: "preparation", min: 0.0, max: 1.0, step: 0.005, initial: 0.98 },
  { name: "eta_t", label: "trigger", min: 0.0, max: 1.0, step: 0.005, initial: 0.07 },
  { name: "snr_db", label: "SNR (dB)", min: 1.0, max: 40.0, step: 0.5, initial: 14.0 },
];

export const MIN_SEND_INTERVAL_MS = 100; // at most 10 messages per second

interface KnobState {
  spec: KnobSpec;
  acked: number;
  pendingValue: number | null;
  queuedValue: number | null;
  lastSendAt: number;
  notice: string | null;
}

export class KnobController {
  private knobs = new Map<string, KnobState>();
  sent = 0;

  constructor(
    private send: (msg: { kind: "set-knob"; name: string; value: number }) => boolean,
    private now: () => number = () => Date.now(),
    specs: KnobSpec[] = KNOB_SPECS,
  ) {
    for (const spec of specs) {
      this.knobs.set(spec.name, {
        spec,
        acked: spec.initial,
        pendingValue: null,
        queuedValue: null,
        lastSendAt: -Infinity,
        notice: null,
      });
    }
  }

  /** Value shown by the control: always the server-acknowledged one. */
  displayed(name: string): number {
    return this.state(name).acked;
  }

  locked(name: string): boolean {
    return this.state(name).pendingValue !== null;
  }

  notice(name: string): string | null {
    return this.state(name).notice;
  }

  /**
   * A committed control gesture. Returns false when rejected client-side
   * (out of range) or deferred by the rate limiter / pending lock.
   */
  change(name: string, value: number): boolean {
    const k = this.state(name);
    if (!Number.isFinite(value) || value < k.spec.min || value > k.spec.max) {
      k.notice = `out of range [${k.spec.min}, ${k.spec.max}]`;
      return false;
    }
    k.notice = null;
    if (k.pendingValue !== null || this.now() - k.lastSendAt < MIN_SEND_INTERVAL_MS) {
      k.queuedValue = value; // coalesce: only the latest queued value survives
      return false;
    }
    return this.dispatch(k, value);
  }

  /** Server acknowledgment for this knob arrived. */
  onAck(ack: KnobAck): void {
    const k = this.knobs.get(ack.name);
    if (k === undefined) return;
    if (ack.ok && typeof ack.value === "number") {
      k.acked = ack.value;
    } else if (!ack.ok) {
      k.notice = ack.error ?? "rejected";
    }
    k.pendingValue = null;
    this.flushQueued(k);
  }

  /** Rate-limit tick: sends a coalesced queued value once the window opens. */
  tick(): void {
    for (const k of this.knobs.values()) this.flushQueued(k);
  }

  private flushQueued(k: KnobState): void {
    if (k.queuedValue === null || k.pendingValue !== null) return;
    if (this.now() - k.lastSendAt < MIN_SEND_INTERVAL_MS) return;
    const value = k.queuedValue;
    k.queuedValue = null;
    this.dispatch(k, value);
  }

  private dispatch(k: KnobState, value: number): boolean {
    if (!this.send({ kind: "set-knob", name: k.spec.name, value })) {
      k.notice = "disconnected";
      return false;
    }
    k.pendingValue = value;
    k.lastSendAt = this.now();
    this.sent += 1;
    return true;
  }

  private state(name: string): KnobState {
    const k = this.knobs.get(name);
    if (k === undefined) throw new Error(`unknown knob ${name}`);
    return k;
  }
}
