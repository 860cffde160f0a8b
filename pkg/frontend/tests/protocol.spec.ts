import { describe, expect, it } from "vitest";

import {
  encode,
  inputMessage,
  parseServerMessage,
  PROTOCOL_VERSION,
} from "../src/protocol.js";

describe("protocol", () => {
  it("encodes input messages with the current version", () => {
    const text = encode(inputMessage(1.25, 0.5, -0.25, 0.0));
    const parsed = JSON.parse(text);
    expect(parsed).toEqual({ v: 1, type: "input", t: 1.25, x: 0.5, y: -0.25, z: 0 });
  });

  it("round-trips floats exactly through JSON", () => {
    const values = [0.1 + 0.2, 1 / 3, -0.9999999, 1e-12];
    const text = encode(inputMessage(values[0], values[1], values[2], values[3]));
    const parsed = JSON.parse(text);
    expect(parsed.t).toBe(values[0]);
    expect(parsed.x).toBe(values[1]);
    expect(parsed.y).toBe(values[2]);
    expect(parsed.z).toBe(values[3]);
  });

  it("parses known server messages", () => {
    const msg = parseServerMessage(
      JSON.stringify({ v: PROTOCOL_VERSION, type: "phase", phase: "baseline" }),
    );
    expect(msg).not.toBeNull();
    expect(msg!.type).toBe("phase");
  });

  it("rejects garbage, wrong versions, unknown types", () => {
    expect(parseServerMessage("not json")).toBeNull();
    expect(parseServerMessage('"just a string"')).toBeNull();
    expect(parseServerMessage(JSON.stringify({ v: 99, type: "state" }))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ v: 1, type: "mystery" }))).toBeNull();
    expect(parseServerMessage(JSON.stringify({ v: 1 }))).toBeNull();
  });
});
