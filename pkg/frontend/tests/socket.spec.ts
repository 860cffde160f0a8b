import { describe, expect, it } from "vitest";

import { TaskSocket } from "../src/socket.js";
import type { SocketLike } from "../src/socket.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.onclose?.();
  }

  serverSays(obj: unknown): void {
    this.onmessage?.({ data: JSON.stringify(obj) });
  }
}

function harness() {
  const sockets: FakeSocket[] = [];
  const timers: { cb: () => void; ms: number }[] = [];
  const socket = new TaskSocket("ws://test", "operator", {
    factory: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    setTimer: (cb, ms) => timers.push({ cb, ms }),
    backoffMs: 100,
  });
  return { socket, sockets, timers };
}

describe("task socket", () => {
  it("says hello with its role on open", () => {
    const { socket, sockets } = harness();
    socket.connect();
    sockets[0].onopen?.();
    expect(JSON.parse(sockets[0].sent[0])).toEqual({ v: 1, type: "hello", role: "operator" });
  });

  it("dispatches parsed server messages and drops junk", () => {
    const { socket, sockets } = harness();
    const seen: string[] = [];
    socket.onMessage = (m) => seen.push(m.type);
    socket.connect();
    sockets[0].onopen?.();
    sockets[0].serverSays({ v: 1, type: "phase", phase: "training" });
    sockets[0].onmessage?.({ data: "garbage" });
    sockets[0].serverSays({ v: 7, type: "phase", phase: "x" });
    expect(seen).toEqual(["phase"]);
  });

  it("reconnects with exponential backoff and re-hellos", () => {
    const { socket, sockets, timers } = harness();
    let drops = 0;
    socket.onDisconnect = () => drops++;
    socket.connect();
    sockets[0].onopen?.();
    sockets[0].close();
    expect(drops).toBe(1);
    expect(timers).toHaveLength(1);
    expect(timers[0].ms).toBe(100);
    timers[0].cb(); // fire the reconnect timer
    expect(sockets).toHaveLength(2);
    sockets[1].close(); // attempt fails before opening: backoff doubles
    expect(timers[1].ms).toBe(200);
    timers[1].cb();
    sockets[2].onopen?.(); // success resets the backoff and re-hellos
    expect(JSON.parse(sockets[2].sent[0]).type).toBe("hello");
    sockets[2].close();
    expect(timers[2].ms).toBe(100);
  });

  it("close() is final: no reconnect timers after", () => {
    const { socket, sockets, timers } = harness();
    socket.connect();
    sockets[0].onopen?.();
    socket.close();
    expect(timers).toHaveLength(0);
    expect(socket.send({ v: 1, type: "hello", role: "operator" })).toBe(false);
  });
});
