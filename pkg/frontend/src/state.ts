/**
 * Session view state: a pure reducer over server messages and connection
 * changes.  The UI never simulates anything locally; it folds what the
 * server said into this structure and renders it.
 */

import type { FrameMessage, MetricsMessage, ServerMessage } from "./protocol.js";

export type Phase = "disconnected" | "idle" | "running" | "completed" | "aborted";

export interface TerminalEvent {
  kind: "target_reached" | "aborted";
  t_ms: number;
}

export interface SessionView {
  phase: Phase;
  /** Latest server clock in ms; null outside a run. */
  tMs: number | null;
  /** Latest frame; stale frames are dropped, never queued. */
  frame: FrameMessage | null;
  terminal: TerminalEvent | null;
  metrics: MetricsMessage | null;
  /** Last server-reported error, verbatim. */
  lastError: string | null;
}

export function initialView(): SessionView {
  return {
    phase: "disconnected",
    tMs: null,
    frame: null,
    terminal: null,
    metrics: null,
    lastError: null,
  };
}

export function applyConnection(view: SessionView, open: boolean): SessionView {
  if (open) {
    return { ...view, phase: view.phase === "disconnected" ? "idle" : view.phase };
  }
  // Connection lost: no phantom session, but finished results stay readable.
  return { ...view, phase: "disconnected", tMs: null, frame: null };
}

export function applyMessage(view: SessionView, msg: ServerMessage): SessionView {
  switch (msg.type) {
    case "event":
      if (msg.kind === "started") {
        return {
          phase: "running",
          tMs: msg.t_ms,
          frame: null,
          terminal: null,
          metrics: null,
          lastError: null,
        };
      }
      return {
        ...view,
        phase: msg.kind === "target_reached" ? "completed" : "aborted",
        tMs: msg.t_ms,
        terminal: { kind: msg.kind, t_ms: msg.t_ms },
      };
    case "frame":
      return { ...view, frame: msg, tMs: msg.t_ms };
    case "metrics":
      return { ...view, metrics: msg };
    case "error":
      return { ...view, lastError: msg.message };
  }
}

/** Timer is shown only while running; its value is the server clock. */
export function timerText(view: SessionView): string | null {
  if (view.phase !== "running" || view.tMs === null) return null;
  return `${(view.tMs / 1000).toFixed(2)} s`;
}

/**
 * Transit time after a completed run: the terminal event's t_ms over 1000.
 * String(n) round-trips the exact double, so the displayed number equals
 * t_ms / 1000 with no formatting loss.
 */
export function transitText(view: SessionView): string | null {
  if (view.terminal === null || view.terminal.kind !== "target_reached") return null;
  return `${String(view.terminal.t_ms / 1000)} s`;
}
