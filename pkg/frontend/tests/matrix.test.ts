// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";
import { DotMatrix } from "../src/matrix.js";
import { GRID_CELLS } from "../src/protocol.js";
import type { FrameMessage } from "../src/protocol.js";

const frame = (cells: Record<number, number> = {}): FrameMessage => {
  const grid = new Array(GRID_CELLS).fill(0);
  for (const [i, v] of Object.entries(cells)) grid[Number(i)] = v;
  return { type: "frame", t_ms: 0, grid };
};

let root: HTMLElement;
let matrix: DotMatrix;

beforeEach(() => {
  document.body.innerHTML = '<div id="m"></div>';
  root = document.getElementById("m") as HTMLElement;
  matrix = new DotMatrix(root);
});

describe("construction", () => {
  it("builds 144 dots, all dark", () => {
    const dots = root.querySelectorAll(".dot");
    expect(dots).toHaveLength(GRID_CELLS);
    for (const dot of dots) {
      expect((dot as HTMLElement).dataset.level).toBe("0");
      expect((dot as HTMLElement).style.backgroundColor).toBe("rgb(0, 0, 0)");
    }
  });
});

describe("vdu mode", () => {
  it("lights a full-intensity cell at the top gray level", () => {
    matrix.render(frame({ 17: 1 }));
    const lit = root.querySelectorAll(".dot")[17] as HTMLElement;
    expect(lit.dataset.level).toBe("127");
    expect(lit.style.backgroundColor).toBe("rgb(255, 255, 255)");
  });

  it("quantizes a half-intensity cell to level 64", () => {
    matrix.render(frame({ 3: 0.5 }));
    const dot = root.querySelectorAll(".dot")[3] as HTMLElement;
    expect(dot.dataset.level).toBe("64");
  });

  it("indexes dots row-major through dotAt", () => {
    matrix.render(frame({ [2 * 12 + 5]: 1 }));
    expect(matrix.dotAt(5, 2).dataset.level).toBe("127");
    expect(matrix.dotAt(6, 2).dataset.level).toBe("0");
  });

  it("blanks on a null frame", () => {
    matrix.render(frame({ 0: 1 }));
    matrix.render(null);
    expect(matrix.dotAt(0, 0).dataset.level).toBe("0");
  });
});

describe("tdu mode", () => {
  it("shows the stimulation voltage for active cells", () => {
    matrix.setMode("tdu");
    matrix.render(frame({ 9: 1, 10: 0.5 }));
    const hot = root.querySelectorAll(".dot")[9] as HTMLElement;
    expect(hot.dataset.volts).toBe("10.0");
    expect(hot.textContent).toBe("10.0");
    const mid = root.querySelectorAll(".dot")[10] as HTMLElement;
    expect(mid.dataset.volts).toBe("5.5");
  });

  it("keeps sub-threshold cells off", () => {
    matrix.setMode("tdu");
    matrix.render(frame({ 4: 0.01 }));
    const dot = root.querySelectorAll(".dot")[4] as HTMLElement;
    expect(dot.dataset.volts).toBe("0");
    expect(dot.textContent).toBe("");
  });

  it("re-renders the last frame when the mode flips", () => {
    matrix.render(frame({ 30: 1 }));
    matrix.setMode("tdu");
    const dot = root.querySelectorAll(".dot")[30] as HTMLElement;
    expect(dot.dataset.volts).toBe("10.0");
    expect(dot.dataset.level).toBeUndefined();
    matrix.setMode("vdu");
    expect(dot.dataset.level).toBe("127");
    expect(dot.dataset.volts).toBeUndefined();
  });
});
