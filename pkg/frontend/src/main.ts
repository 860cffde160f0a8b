// Browser entry point: wire device capture, the socket, rendering, and the
// operator buttons together. Configuration comes from query parameters:
//   ?server=ws://127.0.0.1:8765   service endpoint
//   &device=gamepad|mouse         input device (default gamepad, mouse fallback)
//   &observer=1                   watch-only connection (shows hull overlay)
//   &ax=0&ay=1&az=2               gamepad axis assignment

import { buttonStates } from "./controls.js";
import {
  DEFAULT_AXES,
  GamepadAdapter,
  InputSampler,
  MouseWheelAdapter,
} from "./input.js";
import type { DeviceAdapter } from "./input.js";
import { inputMessage, PROTOCOL_VERSION } from "./protocol.js";
import type { ControlAction } from "./protocol.js";
import { DEFAULT_RENDER, drawToCanvas, renderState } from "./render.js";
import { TaskSocket } from "./socket.js";
import { initialViewState, reduce } from "./state.js";
import type { ViewState } from "./state.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(location.search).get(name) ?? fallback;
}

function main(): void {
  const canvas = document.getElementById("task") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const observer = param("observer", "0") === "1";
  const role = observer ? "observer" : "operator";
  const url = param("server", `ws://${location.hostname || "127.0.0.1"}:8765`);

  let view: ViewState = initialViewState();
  const socket = new TaskSocket(url, role);
  socket.onMessage = (msg) => {
    view = reduce(view, msg);
    syncButtons();
  };
  socket.onDisconnect = () => {
    view = { ...view, connected: false };
    syncButtons();
  };
  socket.connect();

  let adapter: DeviceAdapter;
  if (param("device", "gamepad") === "mouse") {
    const mouse = new MouseWheelAdapter(DEFAULT_RENDER.width / 2 - DEFAULT_RENDER.margin);
    mouse.attach(canvas);
    adapter = mouse;
  } else {
    const axes = {
      ...DEFAULT_AXES,
      x: Number(param("ax", "0")),
      y: Number(param("ay", "1")),
      z: Number(param("az", "2")),
    };
    const pad = new GamepadAdapter(axes);
    const mouse = new MouseWheelAdapter(DEFAULT_RENDER.width / 2 - DEFAULT_RENDER.margin);
    mouse.attach(canvas);
    adapter = { poll: () => pad.poll() ?? mouse.poll() };
  }

  if (!observer) {
    const sampler = new InputSampler(adapter, (s) => {
      socket.send(inputMessage(s.t, s.x, s.y, s.z));
    });
    sampler.start();
  }

  const buttons: Record<string, HTMLButtonElement> = {
    start: document.getElementById("start") as HTMLButtonElement,
    takeBreak: document.getElementById("break") as HTMLButtonElement,
    resume: document.getElementById("resume") as HTMLButtonElement,
  };
  const control = (action: ControlAction) => () =>
    socket.send({ v: PROTOCOL_VERSION, type: "control", action });
  buttons.start.addEventListener("click", control("start-phase"));
  buttons.takeBreak.addEventListener("click", control("break"));
  buttons.resume.addEventListener("click", control("resume"));

  function syncButtons(): void {
    const states = buttonStates(view);
    buttons.start.disabled = !states.start;
    buttons.takeBreak.disabled = !states.takeBreak;
    buttons.resume.disabled = !states.resume;
  }

  const opts = { ...DEFAULT_RENDER, observer };
  function frame(): void {
    drawToCanvas(renderState(view, opts), ctx);
    requestAnimationFrame(frame);
  }
  syncButtons();
  requestAnimationFrame(frame);
}

main();
