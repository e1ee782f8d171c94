/**
 * Optional real-model backend via @tensorflow/tfjs (peer dependency).
 *
 * Loads a graph model from a model.json path, feeds it a [1, h, w, c]
 * float tensor and L2-normalizes the flattened output itself rather than
 * trusting the model head. Preprocessing is fixed to the declared input
 * dims, which the hello reply advertises, so the harness never silently
 * resamples.
 */

import { Backend, InputDims, normalize } from "./toy.js";

export async function loadModelBackend(
  modelPath: string,
  input: InputDims,
): Promise<Backend> {
  // resolved at runtime so the toy backend works without tfjs installed
  const moduleName = "@tensorflow/tfjs";
  let tf: any;
  try {
    tf = await import(moduleName);
  } catch {
    throw new Error(
      "the model backend requires @tensorflow/tfjs; npm install @tensorflow/tfjs",
    );
  }
  const url = modelPath.includes("://") ? modelPath : `file://${modelPath}`;
  const model = await tf.loadGraphModel(url);
  const probe = tf.tidy(() => model.predict(tf.zeros([1, input.h, input.w, input.c])));
  const embedDim: number = probe.size;
  probe.dispose();
  return {
    input,
    embedDim,
    async embed(pixels: Float64Array): Promise<Float64Array> {
      const out = tf.tidy(() => {
        const x = tf.tensor(Array.from(pixels), [1, input.h, input.w, input.c]);
        return model.predict(x).flatten();
      });
      const data = await out.data();
      out.dispose();
      return normalize(Float64Array.from(data));
    },
  };
}
