// Message schemas for the task service socket. Mirrors PROTOCOL.md; the UI
// ignores unknown fields and rejects unknown versions.

export const PROTOCOL_VERSION = 1;

export type Condition = "raw" | "remap" | "smoothed";

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface HelloMessage {
  v: typeof PROTOCOL_VERSION;
  type: "hello";
  role: "operator" | "observer";
}

export interface InputMessage {
  v: typeof PROTOCOL_VERSION;
  type: "input";
  t: number;
  x: number;
  y: number;
  z: number;
}

export type ControlAction = "start-phase" | "break" | "resume" | "set-condition";

export interface ControlMessage {
  v: typeof PROTOCOL_VERSION;
  type: "control";
  action: ControlAction;
  condition?: Condition;
}

export type ClientMessage = HelloMessage | InputMessage | ControlMessage;

export interface DotState {
  x: number;
  y: number;
  size: number;
}

export interface TargetState {
  id: number;
  x: number;
  y: number;
  z: number;
}

export interface StateMessage {
  v: number;
  type: "state";
  t: number;
  phase: string;
  condition: Condition | null;
  dot: DotState;
  target: TargetState | null;
  trial: number;
  trials_total: number;
  hold: number;
  countdown: number | null;
  break_available: boolean;
  f: number;
  alpha: number;
  compile_state: string;
}

export interface WelcomeMessage {
  v: number;
  type: "welcome";
  role: "operator" | "observer";
  snapshot: StateMessage;
  plan: { name: string; condition: Condition; targets: number }[];
  hulls?: { bin: number; vertices: [number, number][] }[];
}

export interface TrialResultMessage {
  v: number;
  type: "trial-result";
  target: TargetState;
  condition: Condition;
  outcome: "completed" | "timed-out";
  time_to_first_reach: number | null;
  path_length: number;
  hold_satisfied: boolean;
  duration: number;
}

export interface PhaseMessage {
  v: number;
  type: "phase";
  phase: string;
}

export interface CompileStatusMessage {
  v: number;
  type: "compile-status";
  state: "running" | "done" | "failed";
  profile_hash?: string;
  message?: string;
}

export interface CalibrationProgressMessage {
  v: number;
  type: "calibration-progress";
  trials: number;
  samples: number;
}

export interface BreakAvailableMessage {
  v: number;
  type: "break-available";
  trials: number;
}

export interface ErrorMessage {
  v: number;
  type: "error";
  code: string;
  message: string;
}

export type ServerMessage =
  | WelcomeMessage
  | StateMessage
  | TrialResultMessage
  | PhaseMessage
  | CompileStatusMessage
  | CalibrationProgressMessage
  | BreakAvailableMessage
  | ErrorMessage;

const SERVER_TYPES = new Set([
  "welcome",
  "state",
  "trial-result",
  "phase",
  "compile-status",
  "calibration-progress",
  "break-available",
  "error",
]);

export function encode(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

export function inputMessage(t: number, x: number, y: number, z: number): InputMessage {
  return { v: PROTOCOL_VERSION, type: "input", t, x, y, z };
}

export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  if (msg.v !== PROTOCOL_VERSION) return null;
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) return null;
  return msg as unknown as ServerMessage;
}
