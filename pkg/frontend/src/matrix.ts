/**
 * The 12x12 dot matrix: round dots whose brightness is the 128-level gray
 * quantization of the frame intensities, or, in TDU view, the voltage each
 * electrode would stimulate at (0 off, 1..10 V).
 *
 * Geometry follows the physical matrix it stands in for: an 8 cm square
 * holding 2 mm dots, so each dot's diameter is 30% of its cell; the whole
 * grid scales with the viewport (CSS handles the absolute size).
 */

import { FrameMessage, GRID_CELLS, GRID_DIM, cellVoltage, grayColor, grayLevel } from "./protocol.js";

export type DisplayMode = "vdu" | "tdu";

export class DotMatrix {
  private readonly dots: HTMLElement[] = [];
  private mode: DisplayMode = "vdu";
  private lastFrame: FrameMessage | null = null;

  constructor(root: HTMLElement) {
    root.classList.add("matrix");
    const doc = root.ownerDocument;
    for (let i = 0; i < GRID_CELLS; i++) {
      const cell = doc.createElement("div");
      cell.className = "cell";
      const dot = doc.createElement("div");
      dot.className = "dot";
      cell.appendChild(dot);
      root.appendChild(cell);
      this.dots.push(dot);
    }
    this.render(null);
  }

  get displayMode(): DisplayMode {
    return this.mode;
  }

  setMode(mode: DisplayMode): void {
    this.mode = mode;
    this.render(this.lastFrame);
  }

  /** Paint a frame; null blanks the matrix. */
  render(frame: FrameMessage | null): void {
    this.lastFrame = frame;
    for (let i = 0; i < GRID_CELLS; i++) {
      const intensity = frame === null ? 0 : frame.grid[i];
      const dot = this.dots[i];
      if (this.mode === "vdu") {
        const level = grayLevel(intensity);
        dot.style.backgroundColor = grayColor(level);
        dot.dataset.level = String(level);
        dot.textContent = "";
        delete dot.dataset.volts;
      } else {
        const volts = cellVoltage(intensity);
        dot.style.backgroundColor = volts === 0 ? grayColor(0) : grayColor(64);
        dot.dataset.volts = volts === 0 ? "0" : volts.toFixed(1);
        dot.textContent = volts === 0 ? "" : volts.toFixed(1);
        delete dot.dataset.level;
      }
    }
  }

  dotAt(col: number, row: number): HTMLElement {
    return this.dots[row * GRID_DIM + col];
  }
}
