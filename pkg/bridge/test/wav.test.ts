import { describe, expect, it } from "vitest";

import { decodeWav, encodeWavPcm16 } from "../src/wav.js";

function tone(n: number, freq: number, sr: number): Float64Array {
  const x = new Float64Array(n);
  for (let t = 0; t < n; t++) x[t] = 0.7 * Math.sin((2 * Math.PI * freq * t) / sr);
  return x;
}

describe("wav round trip", () => {
  it("recovers PCM16 samples within one quantization step", () => {
    const sr = 16000;
    const x = tone(3200, 440, sr);
    const clip = decodeWav(encodeWavPcm16(x, sr));
    expect(clip.sampleRate).toBe(sr);
    expect(clip.samples.length).toBe(x.length);
    // round(v*32767)/32768 is off by at most (|v| + 0.5)/32768
    for (let i = 0; i < x.length; i++) {
      const bound = (Math.abs(x[i]) + 0.5) / 32768;
      expect(Math.abs(clip.samples[i] - x[i])).toBeLessThanOrEqual(bound);
    }
  });

  it("clips out-of-range samples instead of wrapping", () => {
    const clip = decodeWav(encodeWavPcm16(new Float64Array([2.0, -2.0]), 8000));
    expect(clip.samples[0]).toBeCloseTo(1, 3);
    expect(clip.samples[1]).toBeCloseTo(-1, 3);
  });
});

describe("decodeWav", () => {
  it("rejects non-RIFF input", () => {
    expect(() => decodeWav(Buffer.alloc(100))).toThrow(/RIFF/);
  });

  it("rejects RIFF files without a data chunk", () => {
    const buf = Buffer.alloc(44);
    buf.write("RIFF", 0, "ascii");
    buf.write("WAVE", 8, "ascii");
    expect(() => decodeWav(buf)).toThrow(/data chunk/);
  });

  it("averages stereo channels to mono", () => {
    // hand-built 2-channel PCM16 file with one frame: L=+0.5, R=-0.5
    const buf = Buffer.alloc(48);
    buf.write("RIFF", 0, "ascii");
    buf.writeUInt32LE(40, 4);
    buf.write("WAVE", 8, "ascii");
    buf.write("fmt ", 12, "ascii");
    buf.writeUInt32LE(16, 16);
    buf.writeUInt16LE(1, 20);
    buf.writeUInt16LE(2, 22);
    buf.writeUInt32LE(8000, 24);
    buf.writeUInt32LE(32000, 28);
    buf.writeUInt16LE(4, 32);
    buf.writeUInt16LE(16, 34);
    buf.write("data", 36, "ascii");
    buf.writeUInt32LE(4, 40);
    buf.writeInt16LE(16384, 44);
    buf.writeInt16LE(-16384, 46);
    const clip = decodeWav(buf);
    expect(clip.samples.length).toBe(1);
    expect(clip.samples[0]).toBe(0);
  });

  it("rejects unsupported encodings", () => {
    const buf = encodeWavPcm16(new Float64Array(4), 8000);
    buf.writeUInt16LE(8, 34); // claim 8-bit PCM
    expect(() => decodeWav(buf)).toThrow(/unsupported/);
  });
});
