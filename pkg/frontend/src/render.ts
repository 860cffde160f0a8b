// Pure rendering: ViewState -> draw-op list, plus a canvas executor.
// Keeping ops as data makes frames snapshot-testable without a DOM.

import type { ViewState } from "./state.js";

export type DrawOp =
  | { kind: "clear"; color: string }
  | { kind: "circle"; x: number; y: number; r: number; fill: string | null; stroke: string | null; width: number }
  | { kind: "ring"; x: number; y: number; r: number; fraction: number; color: string; width: number }
  | { kind: "polygon"; points: [number, number][]; stroke: string; width: number }
  | { kind: "text"; x: number; y: number; text: string; size: number; color: string; align: "left" | "center" | "right" };

export interface RenderOptions {
  width: number;
  height: number;
  margin: number;
  dotMinR: number;
  dotMaxR: number;
  observer: boolean;
}

export const DEFAULT_RENDER: RenderOptions = {
  width: 640,
  height: 640,
  margin: 48,
  dotMinR: 8,
  dotMaxR: 44,
  observer: false,
};

const COLORS = {
  background: "#101418",
  frame: "#2a323c",
  target: "#f0a33c",
  dot: "#4cc2ff",
  holdRing: "#7ce07c",
  text: "#e8edf2",
  dim: "#8a949e",
  hull: "#5a6a7a",
  error: "#ff6b6b",
};

export function sizeToRadius(size: number, opts: RenderOptions): number {
  const f = (Math.max(-1, Math.min(1, size)) + 1) / 2;
  return opts.dotMinR + f * (opts.dotMaxR - opts.dotMinR);
}

export function renderState(view: ViewState, opts: RenderOptions = DEFAULT_RENDER): DrawOp[] {
  const ops: DrawOp[] = [{ kind: "clear", color: COLORS.background }];
  const span = Math.min(opts.width, opts.height) - 2 * opts.margin;
  const cx = opts.width / 2;
  const cy = opts.height / 2;
  const toPx = (wx: number, wy: number): [number, number] => [
    cx + (wx * span) / 2,
    cy - (wy * span) / 2,
  ];

  // workspace frame
  ops.push({
    kind: "polygon",
    points: [toPx(-1, -1), toPx(1, -1), toPx(1, 1), toPx(-1, 1)],
    stroke: COLORS.frame,
    width: 2,
  });

  if (opts.observer && view.hulls.length > 0) {
    for (const hull of view.hulls) {
      ops.push({
        kind: "polygon",
        points: hull.vertices.map(([x, y]) => toPx(x, y)),
        stroke: COLORS.hull,
        width: 1,
      });
    }
  }

  if (view.target) {
    const [tx, ty] = toPx(view.target.x, view.target.y);
    const tr = sizeToRadius(view.target.z, opts);
    ops.push({ kind: "circle", x: tx, y: ty, r: tr, fill: null, stroke: COLORS.target, width: 3 });
    if (view.hold > 0) {
      ops.push({
        kind: "ring",
        x: tx,
        y: ty,
        r: tr + 8,
        fraction: view.hold,
        color: COLORS.holdRing,
        width: 4,
      });
    }
  }

  const [dx, dy] = toPx(view.dot.x, view.dot.y);
  ops.push({
    kind: "circle",
    x: dx,
    y: dy,
    r: sizeToRadius(view.dot.size, opts),
    fill: COLORS.dot,
    stroke: null,
    width: 0,
  });

  // banner
  const condition = view.condition ? ` / ${view.condition}` : "";
  const trial = view.trialsTotal > 0 ? `  trial ${view.trial + 1}/${view.trialsTotal}` : "";
  ops.push({
    kind: "text",
    x: opts.width / 2,
    y: 24,
    text: `${view.phase}${condition}${trial}`,
    size: 16,
    color: COLORS.text,
    align: "center",
  });

  if (view.countdown !== null) {
    ops.push({
      kind: "text",
      x: opts.width / 2,
      y: 48,
      text: `hold ${view.countdown.toFixed(1)}s`,
      size: 14,
      color: COLORS.holdRing,
      align: "center",
    });
  }
  if (view.phase === "break") {
    ops.push({
      kind: "text",
      x: opts.width / 2,
      y: opts.height / 2,
      text: "break — resume when ready",
      size: 18,
      color: COLORS.text,
      align: "center",
    });
  }
  if (view.compileState === "running") {
    ops.push({
      kind: "text",
      x: opts.width / 2,
      y: opts.height - 20,
      text: "building your custom map…",
      size: 14,
      color: COLORS.dim,
      align: "center",
    });
  }
  if (view.lastError) {
    ops.push({
      kind: "text",
      x: opts.width / 2,
      y: opts.height - 40,
      text: view.lastError,
      size: 12,
      color: COLORS.error,
      align: "center",
    });
  }
  if (!view.connected) {
    ops.push({
      kind: "text",
      x: opts.width / 2,
      y: opts.height / 2 - 30,
      text: "reconnecting…",
      size: 18,
      color: COLORS.error,
      align: "center",
    });
  }
  return ops;
}

export function drawToCanvas(ops: DrawOp[], ctx: CanvasRenderingContext2D): void {
  for (const op of ops) {
    switch (op.kind) {
      case "clear":
        ctx.fillStyle = op.color;
        ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
        break;
      case "circle":
        ctx.beginPath();
        ctx.arc(op.x, op.y, op.r, 0, 2 * Math.PI);
        if (op.fill) {
          ctx.fillStyle = op.fill;
          ctx.fill();
        }
        if (op.stroke) {
          ctx.strokeStyle = op.stroke;
          ctx.lineWidth = op.width;
          ctx.stroke();
        }
        break;
      case "ring":
        ctx.beginPath();
        ctx.arc(op.x, op.y, op.r, -Math.PI / 2, -Math.PI / 2 + op.fraction * 2 * Math.PI);
        ctx.strokeStyle = op.color;
        ctx.lineWidth = op.width;
        ctx.stroke();
        break;
      case "polygon":
        ctx.beginPath();
        op.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
        ctx.closePath();
        ctx.strokeStyle = op.stroke;
        ctx.lineWidth = op.width;
        ctx.stroke();
        break;
      case "text":
        ctx.fillStyle = op.color;
        ctx.font = `${op.size}px sans-serif`;
        ctx.textAlign = op.align;
        ctx.fillText(op.text, op.x, op.y);
        break;
    }
  }
}
