/**
 * Operator console: wires the socket, the pure session-view reducer, the
 * 12 x 12 dot matrix, and the input pump into a single page.
 *
 * Everything shown is taken from server messages; the page never computes
 * trajectory truth locally.  Frames land in a one-slot mailbox and the
 * newest one is painted on the next animation tick, so a slow paint drops
 * stale frames instead of queueing them.
 */

import { DotMatrix } from "./matrix.js";
import type { DisplayMode } from "./matrix.js";
import { InputPump } from "./input.js";
import { SessionSocket } from "./socket.js";
import type { SocketFactory } from "./socket.js";
import { applyConnection, applyMessage, initialView, timerText, transitText } from "./state.js";
import type { SessionView } from "./state.js";
import type { FrameMessage, ServerMessage } from "./protocol.js";

export interface AppOptions {
  url: string;
  wsFactory: SocketFactory;
  flushHz?: number;
}

const PAGE_HTML = `
  <div id="banner" class="banner" hidden>connection lost; results below are from the last session</div>
  <div class="controls">
    <select id="path">
      <option value="path1">path1</option>
      <option value="path2">path2</option>
    </select>
    <select id="display">
      <option value="vdu">vdu</option>
      <option value="tdu">tdu</option>
    </select>
    <button id="start">start</button>
    <button id="abort">abort</button>
  </div>
  <div class="status">
    <span id="phase"></span>
    <span id="timer"></span>
  </div>
  <div class="matrix-holder"></div>
  <div class="results">
    <span id="transit"></span>
    <span id="metrics"></span>
  </div>
  <div id="error" class="error"></div>
`;

export class App {
  readonly matrix: DotMatrix;
  readonly pump: InputPump;
  private readonly socket: SessionSocket;
  private view: SessionView = initialView();
  private everOpened = false;
  private pendingFrame: FrameMessage | null = null;
  private paintScheduled = false;
  private framesReceived = 0;

  constructor(private readonly root: HTMLElement, opts: AppOptions) {
    root.innerHTML = PAGE_HTML;
    this.matrix = new DotMatrix(root.querySelector(".matrix-holder") as HTMLElement);
    this.socket = new SessionSocket(opts.url, opts.wsFactory, {
      onOpen: () => {
        this.everOpened = true;
        this.view = applyConnection(this.view, true);
        this.syncDom();
      },
      onClose: () => {
        this.view = applyConnection(this.view, false);
        if (this.everOpened) this.bannerEl.hidden = false;
        this.syncDom();
      },
      onMessage: (msg) => this.onServerMessage(msg),
      onParseError: (_text, err) => {
        this.view = { ...this.view, lastError: `bad message from server: ${err.message}` };
        this.syncDom();
      },
    });
    this.pump = new InputPump(
      { sendInput: (forward, dyaw, dpitch) => this.socket.send({ type: "input", forward, dyaw, dpitch }) },
      () => this.view.phase === "running",
      opts.flushHz ?? 60,
    );
    this.pump.attach(root.ownerDocument);
    this.pump.start();

    (root.querySelector("#start") as HTMLButtonElement).addEventListener("click", () => this.start());
    (root.querySelector("#abort") as HTMLButtonElement).addEventListener("click", () => this.abort());
    (root.querySelector("#display") as HTMLSelectElement).addEventListener("change", () => {
      this.matrix.setMode(this.displayChoice());
    });

    this.socket.connect();
    this.syncDom();
  }

  private get bannerEl(): HTMLElement {
    return this.root.querySelector("#banner") as HTMLElement;
  }

  private field(id: string): HTMLElement {
    return this.root.querySelector(`#${id}`) as HTMLElement;
  }

  private displayChoice(): DisplayMode {
    return (this.root.querySelector("#display") as HTMLSelectElement).value as DisplayMode;
  }

  /** Frames received since construction; drives the stream-rate check in tests. */
  get frameCount(): number {
    return this.framesReceived;
  }

  get sessionView(): SessionView {
    return this.view;
  }

  /** Test seam: feed one raw wire line as if the socket delivered it. */
  handleRawMessage(msg: ServerMessage): void {
    this.onServerMessage(msg);
  }

  start(): void {
    const pathId = (this.root.querySelector("#path") as HTMLSelectElement).value;
    this.bannerEl.hidden = true;
    this.matrix.setMode(this.displayChoice());
    this.socket.send({
      type: "start",
      path_id: pathId,
      display: this.displayChoice(),
      controller: "manual",
    });
    const anyRoot = this.root as HTMLElement & { requestPointerLock?: () => void };
    anyRoot.requestPointerLock?.();
  }

  abort(): void {
    this.socket.send({ type: "abort" });
  }

  private onServerMessage(msg: ServerMessage): void {
    this.view = applyMessage(this.view, msg);
    if (msg.type === "frame") {
      this.framesReceived += 1;
      this.pendingFrame = msg;
      this.schedulePaint();
    }
    this.syncDom();
  }

  private schedulePaint(): void {
    if (this.paintScheduled) return;
    this.paintScheduled = true;
    const paint = () => {
      this.paintScheduled = false;
      if (this.pendingFrame !== null) {
        this.matrix.render(this.pendingFrame);
        this.pendingFrame = null;
      }
    };
    const w = this.root.ownerDocument.defaultView;
    if (w && typeof w.requestAnimationFrame === "function") w.requestAnimationFrame(paint);
    else setTimeout(paint, 16);
  }

  private syncDom(): void {
    this.field("phase").textContent = this.view.phase;
    this.field("timer").textContent = timerText(this.view) ?? "";
    this.field("transit").textContent = transitText(this.view) === null ? "" : `transit ${transitText(this.view)}`;
    const m = this.view.metrics;
    this.field("metrics").textContent =
      m === null
        ? ""
        : `avg sd ${m.avg_sd_cm === null ? "n/a" : m.avg_sd_cm.toFixed(4) + " cm"}, ` +
          `corr ${m.correlation_pct === null ? "n/a" : m.correlation_pct.toFixed(2) + "%"}`;
    this.field("error").textContent = this.view.lastError ?? "";
    if (this.view.phase !== "running" && this.view.frame === null) this.matrix.render(null);
  }
}
