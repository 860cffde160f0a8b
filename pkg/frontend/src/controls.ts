// Operator controls are gated by the server's phase; the buttons only ever
// emit control messages, they never mutate local state.

import type { ViewState } from "./state.js";

export interface ButtonStates {
  start: boolean;
  takeBreak: boolean;
  resume: boolean;
}

export function buttonStates(view: ViewState): ButtonStates {
  const operator = view.role === "operator" && view.connected;
  return {
    start: operator && view.phase === "idle" && view.compileState !== "running",
    takeBreak: operator && view.breakAvailable && view.phase !== "break",
    resume: operator && view.phase === "break",
  };
}
