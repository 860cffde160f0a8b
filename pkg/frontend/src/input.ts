// Input capture: normalize a device to [-1, 1]^3 and sample it at 60 Hz.
// Adapters are poll-based so the sampler owns all timing; the fake adapter
// doubles as the loopback test vehicle.

export type Axes = [number, number, number];

export interface DeviceAdapter {
  /** Current normalized axes, or null while the device is absent. */
  poll(): Axes | null;
}

function clamp(v: number): number {
  return v < -1 ? -1 : v > 1 ? 1 : v;
}

export function normalizeAxes(x: number, y: number, z: number): Axes {
  return [clamp(x), clamp(y), clamp(z)];
}

export interface GamepadAxisConfig {
  x: number;
  y: number;
  z: number;
  invertY: boolean;
  /** fall back to triggers (buttons 7/6) when the twist axis is missing */
  triggerTwist: boolean;
}

export const DEFAULT_AXES: GamepadAxisConfig = {
  x: 0,
  y: 1,
  z: 2,
  invertY: true, // gamepad sticks report +down; the task space is +up
  triggerTwist: true,
};

type GamepadSource = () => (Gamepad | null)[];

export class GamepadAdapter implements DeviceAdapter {
  constructor(
    private config: GamepadAxisConfig = DEFAULT_AXES,
    private source: GamepadSource = () => navigator.getGamepads(),
  ) {}

  poll(): Axes | null {
    const pads = this.source();
    const pad = pads.find((p) => p !== null);
    if (!pad) return null;
    const ax = pad.axes[this.config.x] ?? 0;
    const rawY = pad.axes[this.config.y] ?? 0;
    const ay = this.config.invertY ? -rawY : rawY;
    let az = pad.axes[this.config.z];
    if ((az === undefined || az === null) && this.config.triggerTwist) {
      const pull = pad.buttons[7]?.value ?? 0;
      const push = pad.buttons[6]?.value ?? 0;
      az = pull - push;
    }
    return normalizeAxes(ax, ay, az ?? 0);
  }
}

export class MouseWheelAdapter implements DeviceAdapter {
  private x = 0;
  private y = 0;
  private z = 0;
  private dragging = false;

  constructor(private radiusPx: number, private wheelStep = 0.05) {}

  attach(el: HTMLElement): void {
    el.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      el.setPointerCapture(e.pointerId);
      this.update(el, e);
    });
    el.addEventListener("pointermove", (e) => {
      if (this.dragging) this.update(el, e);
    });
    const release = () => {
      this.dragging = false;
      this.x = 0;
      this.y = 0; // spring return, like a physical stick
    };
    el.addEventListener("pointerup", release);
    el.addEventListener("pointercancel", release);
    el.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.z = clamp(this.z - Math.sign(e.deltaY) * this.wheelStep);
    });
  }

  private update(el: HTMLElement, e: PointerEvent): void {
    const rect = el.getBoundingClientRect();
    const cx = rect.left + rect.width / 2;
    const cy = rect.top + rect.height / 2;
    this.x = clamp((e.clientX - cx) / this.radiusPx);
    this.y = clamp(-(e.clientY - cy) / this.radiusPx);
  }

  /** twist is sticky by design: a wheel has no spring return */
  poll(): Axes {
    return [this.x, this.y, this.z];
  }
}

export class FakeDeviceAdapter implements DeviceAdapter {
  private t = 0;

  constructor(
    private waveform: (t: number) => Axes,
    private now: () => number, // seconds
  ) {}

  poll(): Axes {
    const [x, y, z] = this.waveform(this.now());
    return normalizeAxes(x, y, z);
  }
}

export interface Sample {
  t: number;
  x: number;
  y: number;
  z: number;
}

export interface SamplerHooks {
  /** milliseconds-resolution monotonic clock */
  now?: () => number;
  schedule?: (cb: () => void, intervalMs: number) => () => void;
}

const defaultSchedule = (cb: () => void, intervalMs: number) => {
  const id = setInterval(cb, intervalMs);
  return () => clearInterval(id);
};

/**
 * Polls the adapter on a fixed interval and emits timestamped samples.
 * Samples go out the instant they are read: capture-to-send latency is
 * bounded by one frame by construction.
 */
export class InputSampler {
  private cancel: (() => void) | null = null;
  private t0: number | null = null;
  readonly intervalMs: number;
  private now: () => number;
  private schedule: (cb: () => void, intervalMs: number) => () => void;

  constructor(
    private adapter: DeviceAdapter,
    private onSample: (s: Sample) => void,
    rateHz = 60,
    hooks: SamplerHooks = {},
  ) {
    this.intervalMs = 1000 / rateHz;
    this.now = hooks.now ?? (() => performance.now());
    this.schedule = hooks.schedule ?? defaultSchedule;
  }

  start(): void {
    if (this.cancel) return;
    this.t0 = null;
    this.cancel = this.schedule(() => this.tick(), this.intervalMs);
  }

  stop(): void {
    this.cancel?.();
    this.cancel = null;
  }

  tick(): void {
    const axes = this.adapter.poll();
    if (axes === null) return;
    const nowMs = this.now();
    if (this.t0 === null) this.t0 = nowMs;
    const [x, y, z] = axes;
    this.onSample({ t: (nowMs - this.t0) / 1000, x, y, z });
  }
}
