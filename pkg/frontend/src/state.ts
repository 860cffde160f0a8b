// Render-only mirror of the server's session state. No task logic lives
// here: the reducer copies what the server said, nothing more.

import type {
  Condition,
  DotState,
  ServerMessage,
  StateMessage,
  TargetState,
  TrialResultMessage,
} from "./protocol.js";

export interface ViewState {
  connected: boolean;
  role: "operator" | "observer" | null;
  phase: string;
  condition: Condition | null;
  dot: DotState;
  target: TargetState | null;
  trial: number;
  trialsTotal: number;
  hold: number;
  countdown: number | null;
  breakAvailable: boolean;
  f: number;
  alpha: number;
  compileState: string;
  plan: { name: string; condition: Condition; targets: number }[];
  hulls: { bin: number; vertices: [number, number][] }[];
  lastTrialResult: TrialResultMessage | null;
  lastError: string | null;
  calibrationSamples: number;
}

export function initialViewState(): ViewState {
  return {
    connected: false,
    role: null,
    phase: "idle",
    condition: null,
    dot: { x: 0, y: 0, size: 0 },
    target: null,
    trial: 0,
    trialsTotal: 0,
    hold: 0,
    countdown: null,
    breakAvailable: false,
    f: 0,
    alpha: 0,
    compileState: "pending",
    plan: [],
    hulls: [],
    lastTrialResult: null,
    lastError: null,
    calibrationSamples: 0,
  };
}

function applyState(view: ViewState, msg: StateMessage): ViewState {
  return {
    ...view,
    phase: msg.phase,
    condition: msg.condition,
    dot: msg.dot,
    target: msg.target,
    trial: msg.trial,
    trialsTotal: msg.trials_total,
    hold: msg.hold,
    countdown: msg.countdown,
    breakAvailable: msg.break_available,
    f: msg.f,
    alpha: msg.alpha,
    compileState: msg.compile_state,
  };
}

export function reduce(view: ViewState, msg: ServerMessage): ViewState {
  switch (msg.type) {
    case "welcome":
      // full restore: a reconnect rebuilds everything from the snapshot
      return {
        ...applyState({ ...initialViewState(), connected: true }, msg.snapshot),
        role: msg.role,
        plan: msg.plan,
        hulls: msg.hulls ?? [],
      };
    case "state":
      return applyState(view, msg);
    case "phase":
      return { ...view, phase: msg.phase };
    case "trial-result":
      return { ...view, lastTrialResult: msg };
    case "compile-status":
      return { ...view, compileState: msg.state };
    case "calibration-progress":
      return { ...view, calibrationSamples: msg.samples };
    case "break-available":
      return { ...view, breakAvailable: true };
    case "error":
      return { ...view, lastError: `${msg.code}: ${msg.message}` };
    default:
      return view;
  }
}
