// Socket client: hello on open, JSON frames in both directions, exponential
// backoff reconnect. The server's welcome snapshot rebuilds the entire view,
// so reconnects need no client-side state beyond the URL and role.

import { encode, parseServerMessage, PROTOCOL_VERSION } from "./protocol.js";
import type { ClientMessage, ServerMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface TaskSocketOptions {
  factory?: SocketFactory;
  reconnect?: boolean;
  backoffMs?: number;
  maxBackoffMs?: number;
  setTimer?: (cb: () => void, ms: number) => void;
}

export class TaskSocket {
  private socket: SocketLike | null = null;
  private closed = false;
  private backoff: number;
  private readonly factory: SocketFactory;
  private readonly reconnect: boolean;
  private readonly baseBackoff: number;
  private readonly maxBackoff: number;
  private readonly setTimer: (cb: () => void, ms: number) => void;

  onMessage: ((msg: ServerMessage) => void) | null = null;
  onDisconnect: (() => void) | null = null;

  constructor(
    private url: string,
    private role: "operator" | "observer",
    options: TaskSocketOptions = {},
  ) {
    this.factory = options.factory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.reconnect = options.reconnect ?? true;
    this.baseBackoff = options.backoffMs ?? 500;
    this.maxBackoff = options.maxBackoffMs ?? 8000;
    this.backoff = this.baseBackoff;
    this.setTimer = options.setTimer ?? ((cb, ms) => void setTimeout(cb, ms));
  }

  connect(): void {
    if (this.closed) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoff = this.baseBackoff;
      socket.send(encode({ v: PROTOCOL_VERSION, type: "hello", role: this.role }));
    };
    socket.onmessage = (ev) => {
      const msg = parseServerMessage(ev.data);
      if (msg && this.onMessage) this.onMessage(msg);
    };
    socket.onclose = () => {
      this.socket = null;
      this.onDisconnect?.();
      if (this.reconnect && !this.closed) {
        this.setTimer(() => this.connect(), this.backoff);
        this.backoff = Math.min(this.backoff * 2, this.maxBackoff);
      }
    };
    socket.onerror = () => {
      /* close follows; backoff handles it */
    };
  }

  send(msg: ClientMessage): boolean {
    if (!this.socket) return false;
    try {
      this.socket.send(encode(msg));
      return true;
    } catch {
      return false;
    }
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
    this.socket = null;
  }
}
