/**
 * NPY v1.0 subset writer/reader.
 *
 * Matches the consumer's restricted format bit for bit: magic
 * "\x93NUMPY", version 1.0, ASCII header literal padded with spaces so
 * the preamble is a multiple of 64 bytes and ends in "\n", C-order
 * little-endian <f4 or <f8 payload, 1 or 2 dimensions.
 */

export type Precision = "f32" | "f64";

export interface Matrix {
  /** Row-major values. */
  data: Float64Array;
  shape: [number] | [number, number];
}

const MAGIC = Buffer.from("\x93NUMPY", "latin1");

export function encodeMatrix(m: Matrix, precision: Precision = "f32"): Buffer {
  const count = m.shape.reduce((a, b) => a * b, 1);
  if (m.data.length !== count) {
    throw new Error(`shape ${m.shape} does not match ${m.data.length} values`);
  }
  if (m.shape.some((d) => d < 1)) {
    throw new Error("matrices with an empty dimension cannot be saved");
  }
  for (const v of m.data) {
    if (!Number.isFinite(v)) throw new Error("matrix must be finite");
  }
  const descr = precision === "f32" ? "<f4" : "<f8";
  const shapeStr =
    m.shape.length === 1 ? `(${m.shape[0]},)` : `(${m.shape[0]}, ${m.shape[1]})`;
  let header = `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeStr}, }`;
  const unpadded = 10 + header.length + 1;
  header = header + " ".repeat((64 - (unpadded % 64)) % 64) + "\n";

  const itemSize = precision === "f32" ? 4 : 8;
  const out = Buffer.alloc(10 + header.length + count * itemSize);
  MAGIC.copy(out, 0);
  out[6] = 1;
  out[7] = 0;
  out.writeUInt16LE(header.length, 8);
  out.write(header, 10, "ascii");
  let off = 10 + header.length;
  for (const v of m.data) {
    if (precision === "f32") {
      out.writeFloatLE(Math.fround(v), off);
    } else {
      out.writeDoubleLE(v, off);
    }
    off += itemSize;
  }
  return out;
}

export function decodeMatrix(buf: Buffer): Matrix {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
    throw new Error("bad magic; not an NPY file");
  }
  if (buf[6] !== 1 || buf[7] !== 0) {
    throw new Error(`unsupported NPY version ${buf[6]}.${buf[7]}`);
  }
  const hlen = buf.readUInt16LE(8);
  const header = buf.subarray(10, 10 + hlen).toString("ascii");
  const descr = /('|")descr\1:\s*('|")(<f4|<f8)\2/.exec(header)?.[3];
  if (!descr) throw new Error(`unsupported descr in header: ${header}`);
  if (!/fortran_order('|")?\s*:\s*False/.test(header)) {
    throw new Error("Fortran-order arrays are not supported");
  }
  const shapeMatch = /shape('|")?:\s*\((\s*\d+\s*(?:,\s*\d+\s*)?),?\s*\)/.exec(header);
  if (!shapeMatch) throw new Error(`unparseable shape in header: ${header}`);
  const dims = shapeMatch[2].split(",").map((s) => parseInt(s.trim(), 10));
  const shape = (dims.length === 1 ? [dims[0]] : [dims[0], dims[1]]) as Matrix["shape"];
  const count = dims.reduce((a, b) => a * b, 1);
  const itemSize = descr === "<f4" ? 4 : 8;
  const payload = buf.subarray(10 + hlen);
  if (payload.length !== count * itemSize) {
    throw new Error(
      `payload size mismatch: expected ${count * itemSize} bytes, found ${payload.length}`
    );
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    data[i] =
      descr === "<f4" ? payload.readFloatLE(i * 4) : payload.readDoubleLE(i * 8);
  }
  return { data, shape };
}

/** Convenience: flatten an F x T row-major matrix-of-rows. */
export function fromRows(rows: number[][] | Float64Array[]): Matrix {
  const f = rows.length;
  const t = rows[0].length;
  const data = new Float64Array(f * t);
  rows.forEach((row, i) => {
    if (row.length !== t) throw new Error("ragged rows");
    data.set(row, i * t);
  });
  return { data, shape: [f, t] };
}
