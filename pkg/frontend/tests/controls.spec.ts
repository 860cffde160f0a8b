import { describe, expect, it } from "vitest";

import { buttonStates } from "../src/controls.js";
import { initialViewState } from "../src/state.js";
import type { ViewState } from "../src/state.js";

function view(overrides: Partial<ViewState>): ViewState {
  return { ...initialViewState(), connected: true, role: "operator", ...overrides };
}

describe("operator controls", () => {
  it("start is gated to idle", () => {
    expect(buttonStates(view({ phase: "idle" })).start).toBe(true);
    expect(buttonStates(view({ phase: "baseline" })).start).toBe(false);
    expect(buttonStates(view({ phase: "idle", compileState: "running" })).start).toBe(false);
  });

  it("break needs the server's break window", () => {
    expect(buttonStates(view({ phase: "baseline", breakAvailable: true })).takeBreak).toBe(true);
    expect(buttonStates(view({ phase: "baseline" })).takeBreak).toBe(false);
    expect(buttonStates(view({ phase: "break", breakAvailable: true })).takeBreak).toBe(false);
  });

  it("resume only during a break", () => {
    expect(buttonStates(view({ phase: "break" })).resume).toBe(true);
    expect(buttonStates(view({ phase: "baseline" })).resume).toBe(false);
  });

  it("observers and disconnected clients get nothing", () => {
    const observer = buttonStates(view({ role: "observer", phase: "idle" }));
    expect(observer.start || observer.takeBreak || observer.resume).toBe(false);
    const offline = buttonStates({ ...view({ phase: "idle" }), connected: false });
    expect(offline.start).toBe(false);
  });
});
