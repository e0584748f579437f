import { describe, expect, it } from "vitest";
import {
  ACTIVATION_THRESHOLD,
  GRID_CELLS,
  WireError,
  cellVoltage,
  grayColor,
  grayLevel,
  parseServerMessage,
  serializeClientMessage,
} from "../src/protocol.js";

const zeros = () => new Array(GRID_CELLS).fill(0);

describe("parseServerMessage", () => {
  it("parses events", () => {
    const msg = parseServerMessage('{"type":"event","kind":"started","t_ms":0}');
    expect(msg).toEqual({ type: "event", kind: "started", t_ms: 0 });
  });

  it("parses frames and keeps the grid", () => {
    const grid = zeros();
    grid[7] = 0.5;
    const msg = parseServerMessage(JSON.stringify({ type: "frame", t_ms: 20, grid }));
    if (msg.type !== "frame") throw new Error("expected frame");
    expect(msg.t_ms).toBe(20);
    expect(msg.grid[7]).toBe(0.5);
    expect(msg.grid).toHaveLength(GRID_CELLS);
  });

  it("parses metrics with nulls preserved", () => {
    const msg = parseServerMessage(
      '{"type":"metrics","avg_sd_cm":0.0,"correlation_pct":null,"transit_time_s":1.25}',
    );
    expect(msg).toEqual({
      type: "metrics",
      avg_sd_cm: 0,
      correlation_pct: null,
      transit_time_s: 1.25,
    });
  });

  it("parses errors verbatim", () => {
    const msg = parseServerMessage('{"type":"error","message":"no such path"}');
    expect(msg).toEqual({ type: "error", message: "no such path" });
  });

  it.each([
    ["not json at all", "{nope"],
    ["non-object", "[1,2]"],
    ["unknown type", '{"type":"pose","pos":[0,0,0]}'],
    ["bad event kind", '{"type":"event","kind":"paused","t_ms":5}'],
    ["event without clock", '{"type":"event","kind":"started"}'],
    ["short grid", '{"type":"frame","t_ms":0,"grid":[0.5]}'],
    ["error without message", '{"type":"error"}'],
  ])("rejects %s", (_label, text) => {
    expect(() => parseServerMessage(text)).toThrow(WireError);
  });

  it("rejects grid cells outside [0, 1]", () => {
    const grid = zeros();
    grid[0] = 1.5;
    expect(() => parseServerMessage(JSON.stringify({ type: "frame", t_ms: 0, grid }))).toThrow(
      WireError,
    );
    grid[0] = Number.NaN;
    expect(() => parseServerMessage(JSON.stringify({ type: "frame", t_ms: 0, grid }))).toThrow(
      WireError,
    );
  });
});

describe("serializeClientMessage", () => {
  it("writes the documented field order", () => {
    expect(serializeClientMessage({ type: "input", forward: 1, dyaw: 0, dpitch: 0 })).toBe(
      '{"type":"input","forward":1,"dyaw":0,"dpitch":0}',
    );
    expect(serializeClientMessage({ type: "abort" })).toBe('{"type":"abort"}');
  });

  it("keeps start options it was given", () => {
    const line = serializeClientMessage({
      type: "start",
      path_id: "path1",
      display: "vdu",
      controller: "manual",
    });
    expect(JSON.parse(line)).toEqual({
      type: "start",
      path_id: "path1",
      display: "vdu",
      controller: "manual",
    });
  });
});

describe("gray quantization", () => {
  it("maps the endpoints and midpoint", () => {
    expect(grayLevel(0)).toBe(0);
    expect(grayLevel(1)).toBe(127);
    expect(grayLevel(0.5)).toBe(64);
  });

  it("is monotone over the unit interval", () => {
    let prev = -1;
    for (let i = 0; i <= 1000; i++) {
      const level = grayLevel(i / 1000);
      expect(level).toBeGreaterThanOrEqual(prev);
      expect(level).toBeGreaterThanOrEqual(0);
      expect(level).toBeLessThanOrEqual(127);
      prev = level;
    }
  });

  it("produces black-to-white css colors", () => {
    expect(grayColor(0)).toBe("rgb(0, 0, 0)");
    expect(grayColor(127)).toBe("rgb(255, 255, 255)");
  });
});

describe("cellVoltage", () => {
  it("is zero below the activation threshold", () => {
    expect(cellVoltage(0)).toBe(0);
    expect(cellVoltage(ACTIVATION_THRESHOLD - 1e-9)).toBe(0);
  });

  it("never lands strictly between 0 and 1 volts", () => {
    for (let i = 0; i <= 1000; i++) {
      const v = cellVoltage(i / 1000);
      expect(v === 0 || (v >= 1 && v <= 10)).toBe(true);
    }
  });

  it("spans 1 to 10 volts over active intensities", () => {
    expect(cellVoltage(ACTIVATION_THRESHOLD)).toBeCloseTo(1.45, 10);
    expect(cellVoltage(1)).toBe(10);
  });
});
