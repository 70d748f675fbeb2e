/** Wire types of the session service and guards for incoming messages. */

export type MessageKind =
  | "quad-batch"
  | "eta-update"
  | "recon-update"
  | "rate-update"
  | "knob-ack"
  | "snapshot"
  | "error";

export interface Envelope {
  kind: MessageKind;
  seq: number;
  t_ms: number;
  payload: Record<string, unknown>;
}

export interface EtaUpdate {
  eta: number;
  block: number;
  segments: number;
}

export interface QuadBatch {
  values: number[];
  segments: number;
}

export interface ReconUpdate {
  diagonals: number[];
  sigmas: number[];
  iterations: number;
  converged: boolean;
  window: number;
  wigner: { radii: number[]; values: number[] };
}

export interface RateUpdate {
  segments_per_s: number;
  trigger_rate_hz: number;
  segments: number;
}

export interface KnobAck {
  ok: boolean;
  name: string;
  value?: number;
  eta_derived?: number;
  error?: string;
}

const KINDS: ReadonlySet<string> = new Set([
  "quad-batch", "eta-update", "recon-update", "rate-update", "knob-ack", "snapshot", "error",
]);

export function parseEnvelope(raw: string): Envelope | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (typeof msg.kind !== "string" || !KINDS.has(msg.kind)) return null;
  if (typeof msg.seq !== "number" || typeof msg.t_ms !== "number") return null;
  if (typeof msg.payload !== "object" || msg.payload === null) return null;
  return msg as unknown as Envelope;
}

/**
 * Extract the raw source text of the "eta" field from an eta-update message.
 * The readout must show the payload byte-for-byte, so re-serializing the
 * parsed number is not good enough.
 */
export function rawEtaToken(raw: string): string | null {
  const m = raw.match(/"eta":\s*([-+0-9.eE]+)/);
  return m ? m[1] : null;
}
