import { describe, expect, it } from "vitest";
import type { FrameMessage, ServerMessage } from "../src/protocol.js";
import { GRID_CELLS } from "../src/protocol.js";
import { applyConnection, applyMessage, initialView, timerText, transitText } from "../src/state.js";
import type { SessionView } from "../src/state.js";

const frame = (tMs: number): FrameMessage => ({
  type: "frame",
  t_ms: tMs,
  grid: new Array(GRID_CELLS).fill(0),
});

const fold = (view: SessionView, ...msgs: ServerMessage[]) => msgs.reduce(applyMessage, view);

describe("connection transitions", () => {
  it("starts disconnected and becomes idle on open", () => {
    const view = initialView();
    expect(view.phase).toBe("disconnected");
    expect(applyConnection(view, true).phase).toBe("idle");
  });

  it("drops a running session on close but keeps finished results", () => {
    let view = applyConnection(initialView(), true);
    view = fold(
      view,
      { type: "event", kind: "started", t_ms: 0 },
      frame(100),
      { type: "event", kind: "target_reached", t_ms: 1250 },
      { type: "metrics", avg_sd_cm: 0, correlation_pct: null, transit_time_s: 1.25 },
    );
    const closed = applyConnection(view, false);
    expect(closed.phase).toBe("disconnected");
    expect(closed.tMs).toBeNull();
    expect(closed.frame).toBeNull();
    expect(closed.terminal).toEqual({ kind: "target_reached", t_ms: 1250 });
    expect(closed.metrics?.transit_time_s).toBe(1.25);
  });
});

describe("message folding", () => {
  it("started clears the previous run completely", () => {
    let view = applyConnection(initialView(), true);
    view = fold(
      view,
      { type: "event", kind: "started", t_ms: 0 },
      frame(40),
      { type: "event", kind: "aborted", t_ms: 40 },
      { type: "metrics", avg_sd_cm: null, correlation_pct: null, transit_time_s: null },
      { type: "error", message: "leftover" },
      { type: "event", kind: "started", t_ms: 0 },
    );
    expect(view.phase).toBe("running");
    expect(view.frame).toBeNull();
    expect(view.terminal).toBeNull();
    expect(view.metrics).toBeNull();
    expect(view.lastError).toBeNull();
    expect(view.tMs).toBe(0);
  });

  it("frames advance the clock", () => {
    let view = fold(applyConnection(initialView(), true), {
      type: "event",
      kind: "started",
      t_ms: 0,
    });
    view = fold(view, frame(20), frame(40));
    expect(view.tMs).toBe(40);
    expect(view.frame?.t_ms).toBe(40);
  });

  it("terminal events set phase and stamp the terminal clock", () => {
    const base = fold(applyConnection(initialView(), true), {
      type: "event",
      kind: "started",
      t_ms: 0,
    });
    const done = fold(base, { type: "event", kind: "target_reached", t_ms: 5750 });
    expect(done.phase).toBe("completed");
    expect(done.terminal).toEqual({ kind: "target_reached", t_ms: 5750 });
    const aborted = fold(base, { type: "event", kind: "aborted", t_ms: 300 });
    expect(aborted.phase).toBe("aborted");
  });

  it("keeps server errors verbatim", () => {
    const view = fold(initialView(), { type: "error", message: "no such path 'nope'" });
    expect(view.lastError).toBe("no such path 'nope'");
  });
});

describe("timer", () => {
  it("is hidden unless a session is running", () => {
    expect(timerText(initialView())).toBeNull();
    const running = fold(
      applyConnection(initialView(), true),
      { type: "event", kind: "started", t_ms: 0 },
      frame(1230),
    );
    expect(timerText(running)).toBe("1.23 s");
    const done = fold(running, { type: "event", kind: "target_reached", t_ms: 1250 });
    expect(timerText(done)).toBeNull();
  });
});

describe("transit display", () => {
  it("shows nothing before completion or after an abort", () => {
    expect(transitText(initialView())).toBeNull();
    const aborted = fold(
      applyConnection(initialView(), true),
      { type: "event", kind: "started", t_ms: 0 },
      { type: "event", kind: "aborted", t_ms: 600 },
    );
    expect(transitText(aborted)).toBeNull();
  });

  it("renders t_ms/1000 with no formatting loss", () => {
    for (const tMs of [1250, 5750, 12345, 7, 299995]) {
      const view = fold(
        applyConnection(initialView(), true),
        { type: "event", kind: "started", t_ms: 0 },
        { type: "event", kind: "target_reached", t_ms: tMs },
      );
      const text = transitText(view);
      expect(text).not.toBeNull();
      const numeric = Number((text as string).replace(/ s$/, ""));
      expect(numeric).toBe(tMs / 1000);
    }
  });
});
