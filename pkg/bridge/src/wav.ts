/** Minimal RIFF/WAVE decoder: PCM16, PCM32 and IEEE float32, any channel
 * count (channels are averaged to mono). */

export interface AudioClip {
  samples: Float64Array;
  sampleRate: number;
}

export function decodeWav(buf: Buffer): AudioClip {
  if (buf.length < 44 || buf.toString("ascii", 0, 4) !== "RIFF" ||
      buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }
  let fmt: { format: number; channels: number; sampleRate: number; bits: number } | null = null;
  let dataStart = -1;
  let dataLen = 0;
  let off = 12;
  while (off + 8 <= buf.length) {
    const id = buf.toString("ascii", off, off + 4);
    const size = buf.readUInt32LE(off + 4);
    if (id === "fmt ") {
      fmt = {
        format: buf.readUInt16LE(off + 8),
        channels: buf.readUInt16LE(off + 10),
        sampleRate: buf.readUInt32LE(off + 12),
        bits: buf.readUInt16LE(off + 22),
      };
    } else if (id === "data") {
      dataStart = off + 8;
      dataLen = size;
    }
    off += 8 + size + (size % 2);
  }
  if (!fmt || dataStart < 0) throw new Error("missing fmt or data chunk");
  const { format, channels, sampleRate, bits } = fmt;
  const bytesPer = bits / 8;
  const frames = Math.floor(dataLen / (bytesPer * channels));
  const samples = new Float64Array(frames);
  for (let i = 0; i < frames; i++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) {
      const p = dataStart + (i * channels + c) * bytesPer;
      if (format === 1 && bits === 16) {
        acc += buf.readInt16LE(p) / 32768;
      } else if (format === 1 && bits === 32) {
        acc += buf.readInt32LE(p) / 2147483648;
      } else if (format === 3 && bits === 32) {
        acc += buf.readFloatLE(p);
      } else {
        throw new Error(`unsupported WAV encoding: format ${format}, ${bits} bits`);
      }
    }
    samples[i] = acc / channels;
  }
  return { samples, sampleRate };
}

/** PCM16 mono encoder, used by tests and the demo clip generator. */
export function encodeWavPcm16(samples: Float64Array | number[], sampleRate: number): Buffer {
  const n = samples.length;
  const buf = Buffer.alloc(44 + n * 2);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + n * 2, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(1, 20);
  buf.writeUInt16LE(1, 22);
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 2, 28);
  buf.writeUInt16LE(2, 32);
  buf.writeUInt16LE(16, 34);
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(n * 2, 40);
  for (let i = 0; i < n; i++) {
    const v = Math.max(-1, Math.min(1, samples[i]));
    buf.writeInt16LE(Math.round(v * 32767), 44 + i * 2);
  }
  return buf;
}
