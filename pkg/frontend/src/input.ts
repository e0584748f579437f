/**
 * Keyboard and pointer capture: key hold state plus accumulated pointer
 * deltas, flushed to the server at 60 Hz or faster as raw device counts
 * (sensitivity is applied server-side).
 *
 * Flush rules: while any input is active every flush sends a message (a held
 * key is a stream, not an edge); releasing everything sends one final
 * all-zero message so the server's sticky forward state stops; full idle
 * sends nothing.  Input while no session is running is dropped locally.
 */

export interface InputSink {
  sendInput(forward: -1 | 0 | 1, dyaw: number, dpitch: number): void;
}

const FORWARD_CODES = new Set(["KeyW", "ArrowUp"]);
const BACKWARD_CODES = new Set(["KeyS", "ArrowDown"]);

export class InputPump {
  private readonly held = new Set<string>();
  private dyaw = 0;
  private dpitch = 0;
  private lastSentActive = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly sink: InputSink,
    private readonly isRunning: () => boolean,
    private readonly flushHz = 60,
  ) {}

  /** Current forward command: simultaneous opposite keys cancel to 0. */
  get forward(): -1 | 0 | 1 {
    let f = 0;
    for (const code of this.held) {
      if (FORWARD_CODES.has(code)) f += 1;
      else if (BACKWARD_CODES.has(code)) f -= 1;
    }
    return Math.sign(f) as -1 | 0 | 1;
  }

  keyDown(code: string): void {
    if (FORWARD_CODES.has(code) || BACKWARD_CODES.has(code)) this.held.add(code);
  }

  keyUp(code: string): void {
    this.held.delete(code);
  }

  pointerDelta(dx: number, dy: number): void {
    this.dyaw += dx;
    this.dpitch += dy;
  }

  /** One flush cycle; exposed for tests, driven by the interval in start(). */
  flush(): void {
    if (!this.isRunning()) {
      // Drop deltas accumulated outside a session; held keys stay, they
      // mirror the physical keyboard state.
      this.dyaw = 0;
      this.dpitch = 0;
      this.lastSentActive = false;
      return;
    }
    const active = this.held.size > 0 || this.dyaw !== 0 || this.dpitch !== 0;
    if (active) {
      this.sink.sendInput(this.forward, this.dyaw, this.dpitch);
      this.dyaw = 0;
      this.dpitch = 0;
      this.lastSentActive = true;
    } else if (this.lastSentActive) {
      this.sink.sendInput(0, 0, 0);
      this.lastSentActive = false;
    }
  }

  attach(doc: Document): void {
    doc.addEventListener("keydown", (e) => this.keyDown((e as KeyboardEvent).code));
    doc.addEventListener("keyup", (e) => this.keyUp((e as KeyboardEvent).code));
    doc.addEventListener("mousemove", (e) => {
      const me = e as MouseEvent;
      if (doc.pointerLockElement) this.pointerDelta(me.movementX, me.movementY);
    });
  }

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => this.flush(), Math.floor(1000 / this.flushHz));
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
