/**
 * Wire protocol: newline-delimited JSON messages over a WebSocket.
 *
 * The server is the single source of truth; every number the UI displays
 * (timer, phase, metrics) originates from one of these messages.  Field
 * names are part of the contract and must match the server byte for byte.
 */

export const GRID_CELLS = 144;
export const GRID_DIM = 12;

export interface StartMessage {
  type: "start";
  path_id?: string;
  path?: number[][];
  display?: "vdu" | "tdu";
  controller?: "manual" | "external" | "ideal" | "noisy";
  seed?: number;
  speed?: number;
  timeout_s?: number;
  decimation?: number;
}

export interface InputMessage {
  type: "input";
  forward: -1 | 0 | 1;
  dyaw: number;
  dpitch: number;
}

export interface AbortMessage {
  type: "abort";
}

export type ClientMessage = StartMessage | InputMessage | AbortMessage;

export interface EventMessage {
  type: "event";
  kind: "started" | "target_reached" | "aborted";
  t_ms: number;
}

export interface FrameMessage {
  type: "frame";
  t_ms: number;
  grid: number[];
}

export interface MetricsMessage {
  type: "metrics";
  avg_sd_cm: number | null;
  correlation_pct: number | null;
  transit_time_s: number | null;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = EventMessage | FrameMessage | MetricsMessage | ErrorMessage;

export class WireError extends Error {}

function fail(reason: string): never {
  throw new WireError(reason);
}

function requireNumber(value: unknown, name: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    fail(`${name} must be a finite number, got ${JSON.stringify(value)}`);
  }
  return value;
}

/** Parse one server line; throws WireError on anything malformed. */
export function parseServerMessage(text: string): ServerMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    fail(`malformed JSON: ${(e as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    fail("message must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  switch (obj.type) {
    case "event": {
      const kind = obj.kind;
      if (kind !== "started" && kind !== "target_reached" && kind !== "aborted") {
        fail(`unknown event kind ${JSON.stringify(kind)}`);
      }
      return { type: "event", kind, t_ms: requireNumber(obj.t_ms, "t_ms") };
    }
    case "frame": {
      const grid = obj.grid;
      if (!Array.isArray(grid) || grid.length !== GRID_CELLS) {
        fail(`frame grid must have ${GRID_CELLS} cells`);
      }
      for (const v of grid) {
        const n = requireNumber(v, "grid cell");
        if (n < 0 || n > 1) fail(`grid cell ${n} outside [0, 1]`);
      }
      return { type: "frame", t_ms: requireNumber(obj.t_ms, "t_ms"), grid: grid as number[] };
    }
    case "metrics": {
      const field = (name: string): number | null => {
        const v = obj[name];
        return v === null || v === undefined ? null : requireNumber(v, name);
      };
      return {
        type: "metrics",
        avg_sd_cm: field("avg_sd_cm"),
        correlation_pct: field("correlation_pct"),
        transit_time_s: field("transit_time_s"),
      };
    }
    case "error": {
      if (typeof obj.message !== "string") fail("error message must be a string");
      return { type: "error", message: obj.message };
    }
    default:
      fail(`unknown message type ${JSON.stringify(obj.type)}`);
  }
}

/** Serialize a client message; JSON.stringify preserves key insertion order. */
export function serializeClientMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

/** Quantize an intensity in [0, 1] to one of 128 gray levels (round half up). */
export function grayLevel(intensity: number): number {
  return Math.floor(intensity * 127 + 0.5);
}

/** CSS color for a gray level. */
export function grayColor(level: number): string {
  const channel = Math.round((level / 127) * 255);
  return `rgb(${channel}, ${channel}, ${channel})`;
}

export const ACTIVATION_THRESHOLD = 0.05;

/**
 * Voltage a cell would stimulate at, with identity calibration: cells below
 * the activation threshold are off, active cells map to 1..10 V.  Mirrors
 * the server-side display mapping so the TDU view shows what the electrode
 * matrix would do.
 */
export function cellVoltage(intensity: number): number {
  if (intensity < ACTIVATION_THRESHOLD) return 0;
  return Math.min(1 + 9 * intensity, 10);
}
