/**
 * Demo spectrogram classifier plus gradient-based saliency.
 *
 * A small convolutional tfjs model with deterministically seeded
 * weights stands in for an externally trained checkpoint (none can
 * ship with this package). Saliency comes from tfjs autodiff: plain
 * input gradients of the class probability, or integrated gradients
 * with a midpoint rule from a zero baseline.
 */

import * as tf from "@tensorflow/tfjs";

export type Method = "gradient" | "ig";

export interface SaliencyConfig {
  method: Method;
  targetClass: number;
  igSteps: number;
}

/** mulberry32: tiny seeded PRNG, enough to freeze demo weights. */
export function seededUniform(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export class DemoClassifier {
  private readonly weights: {
    conv1: tf.Tensor4D;
    conv2: tf.Tensor4D;
    dense: tf.Tensor2D;
  };

  constructor(public readonly seed: number) {
    const rand = seededUniform(seed);
    const gauss = () => {
      // Box-Muller from the seeded uniform stream
      const u = Math.max(rand(), 1e-12);
      const v = rand();
      return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
    };
    const init = (shape: number[], scale: number) => {
      const n = shape.reduce((a, b) => a * b, 1);
      const vals = new Float32Array(n);
      for (let i = 0; i < n; i++) vals[i] = gauss() * scale;
      return tf.tensor(vals, shape);
    };
    this.weights = {
      conv1: init([3, 3, 1, 4], 0.4) as tf.Tensor4D,
      conv2: init([3, 3, 4, 8], 0.25) as tf.Tensor4D,
      dense: init([8, 2], 0.5) as tf.Tensor2D,
    };
  }

  /** Fixed input standardization. Per-input mean/std would make the net
   * scale invariant and break path-integral attributions from a zero
   * baseline, so constants chosen for the log-mel range are used. */
  static readonly INPUT_SHIFT = 3.0;
  static readonly INPUT_SCALE = 4.0;

  /** x: [F, T] spectrogram tensor; returns [2] probabilities. */
  probs(x: tf.Tensor2D): tf.Tensor1D {
    return tf.tidy(() => {
      let h = x
        .sub(DemoClassifier.INPUT_SHIFT)
        .div(DemoClassifier.INPUT_SCALE)
        .expandDims(0)
        .expandDims(-1) as tf.Tensor4D;
      h = tf.conv2d(h, this.weights.conv1, 1, "same").relu();
      h = tf.avgPool(h, 2, 2, "same");
      h = tf.conv2d(h, this.weights.conv2, 1, "same").relu();
      h = tf.avgPool(h, 2, 2, "same");
      const feat = h.mean([1, 2]) as tf.Tensor2D;
      const logits = tf.matMul(feat, this.weights.dense);
      return tf.softmax(logits).squeeze([0]) as tf.Tensor1D;
    });
  }

  private classProb(c: number): (x: tf.Tensor) => tf.Tensor {
    return (x) => this.probs(x as tf.Tensor2D).gather([c]).squeeze();
  }

  /** d prob_c / d x as an F x T array of rows. */
  gradientSaliency(spec: Float64Array[], c: number): Float64Array[] {
    const x = toTensor(spec);
    const g = tf.tidy(() => tf.grad(this.classProb(c))(x));
    const out = fromTensor(g, spec.length, spec[0].length);
    x.dispose();
    g.dispose();
    return out;
  }

  /** Midpoint-rule integrated gradients from the zero baseline. */
  integratedGradients(spec: Float64Array[], c: number, steps: number): Float64Array[] {
    const f = spec.length;
    const t = spec[0].length;
    const x = toTensor(spec);
    const acc = new Float64Array(f * t);
    const gradFn = tf.grad(this.classProb(c));
    for (let i = 0; i < steps; i++) {
      const alpha = (i + 0.5) / steps;
      const point = tf.tidy(() => x.mul(alpha) as tf.Tensor2D);
      const g = gradFn(point);
      const vals = g.dataSync();
      for (let j = 0; j < acc.length; j++) acc[j] += vals[j] / steps;
      point.dispose();
      g.dispose();
    }
    x.dispose();
    const rows: Float64Array[] = [];
    for (let i = 0; i < f; i++) {
      const row = new Float64Array(t);
      for (let j = 0; j < t; j++) row[j] = spec[i][j] * acc[i * t + j];
      rows.push(row);
    }
    return rows;
  }

  saliency(spec: Float64Array[], cfg: SaliencyConfig): Float64Array[] {
    return cfg.method === "gradient"
      ? this.gradientSaliency(spec, cfg.targetClass)
      : this.integratedGradients(spec, cfg.targetClass, cfg.igSteps);
  }
}

function toTensor(rows: Float64Array[]): tf.Tensor2D {
  const f = rows.length;
  const t = rows[0].length;
  const flat = new Float32Array(f * t);
  rows.forEach((row, i) => {
    for (let j = 0; j < t; j++) flat[i * t + j] = Math.fround(row[j]);
  });
  return tf.tensor2d(flat, [f, t]);
}

function fromTensor(g: tf.Tensor, f: number, t: number): Float64Array[] {
  const vals = g.dataSync();
  const rows: Float64Array[] = [];
  for (let i = 0; i < f; i++) {
    const row = new Float64Array(t);
    for (let j = 0; j < t; j++) row[j] = vals[i * t + j];
    rows.push(row);
  }
  return rows;
}
