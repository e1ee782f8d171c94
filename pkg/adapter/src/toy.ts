/**
 * Deterministic toy embedder: normalize(tanh(W x + b)).
 *
 * W (D x HWC, row-major) is drawn first from the portable normal stream,
 * then b (D); every entry is scaled by 1/sqrt(HWC). Same seed and dims give
 * the same weights as the Python implementation, so embeddings agree to
 * well within 1e-5.
 */

import { normalStream } from "./rng.js";

export interface InputDims {
  h: number;
  w: number;
  c: number;
}

export interface Backend {
  readonly input: InputDims;
  readonly embedDim: number;
  embed(pixels: Float64Array): Promise<Float64Array> | Float64Array;
}

export function normalize(v: Float64Array): Float64Array {
  let sq = 0;
  for (let i = 0; i < v.length; i++) sq += v[i] * v[i];
  const norm = Math.sqrt(sq);
  if (norm === 0) throw new Error("zero embedding cannot be normalized");
  const out = new Float64Array(v.length);
  for (let i = 0; i < v.length; i++) out[i] = v[i] / norm;
  return out;
}

export class ToyBackend implements Backend {
  readonly input: InputDims;
  readonly embedDim: number;
  private readonly weights: Float64Array; // row-major D x N
  private readonly bias: Float64Array;

  constructor(seed: number, input: InputDims, embedDim = 128) {
    this.input = input;
    this.embedDim = embedDim;
    const n = input.h * input.w * input.c;
    const scale = 1.0 / Math.sqrt(n);
    const stream = normalStream(seed, embedDim * n + embedDim);
    this.weights = new Float64Array(embedDim * n);
    this.bias = new Float64Array(embedDim);
    for (let i = 0; i < embedDim * n; i++) this.weights[i] = stream[i] * scale;
    for (let i = 0; i < embedDim; i++) this.bias[i] = stream[embedDim * n + i] * scale;
  }

  embed(pixels: Float64Array): Float64Array {
    const n = this.input.h * this.input.w * this.input.c;
    if (pixels.length !== n) {
      throw new Error(`expected ${n} pixels, got ${pixels.length}`);
    }
    const y = new Float64Array(this.embedDim);
    for (let i = 0; i < this.embedDim; i++) {
      let acc = this.bias[i];
      const row = i * n;
      for (let j = 0; j < n; j++) acc += this.weights[row + j] * pixels[j];
      y[i] = Math.tanh(acc);
    }
    return normalize(y);
  }
}
