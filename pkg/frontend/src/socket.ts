/**
 * Thin WebSocket wrapper: parses inbound NDJSON messages into typed server
 * messages, serializes outbound client messages, and routes lifecycle events
 * to injected handlers.  The socket constructor is injectable so tests and
 * Node environments can supply a non-browser implementation.
 */

import { ClientMessage, parseServerMessage, serializeClientMessage, WireError } from "./protocol.js";
import type { ServerMessage } from "./protocol.js";

/**
 * Structural subset of the DOM WebSocket that this app needs.  Handler
 * parameters are typed `any` so both the browser WebSocket and Node's ws
 * package satisfy the shape; the app only assigns handlers, never calls
 * them, so nothing leaks.
 */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  // `any` is deliberate: handler slots must accept both DOM and ws event
  // object shapes.
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SocketHandlers {
  onOpen(): void;
  onMessage(msg: ServerMessage): void;
  onClose(): void;
  onParseError(text: string, err: WireError): void;
}

export class SessionSocket {
  private socket: SocketLike | null = null;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly handlers: SocketHandlers,
  ) {}

  connect(): void {
    const sock = this.factory(this.url);
    this.socket = sock;
    sock.onopen = () => this.handlers.onOpen();
    sock.onclose = () => this.handlers.onClose();
    sock.onmessage = (ev: { data: unknown }) => {
      // Node's ws hands Buffers to onmessage; the wire is always UTF-8 text.
      const text = typeof ev.data === "string" ? ev.data : String(ev.data);
      try {
        this.handlers.onMessage(parseServerMessage(text));
      } catch (err) {
        if (err instanceof WireError) this.handlers.onParseError(text, err);
        else throw err;
      }
    };
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  send(msg: ClientMessage): void {
    this.socket?.send(serializeClientMessage(msg));
  }

  close(): void {
    this.socket?.close();
    this.socket = null;
  }
}
