/**
 * ONNX inference for the bridge, on onnxruntime-web's WASM backend (the
 * binaries ship inside the npm package, so the bridge stays install-and-run).
 *
 * Model contract: one image input [1, 3, S, S] (float32, RGB, 0..1), one
 * output of per-detection rows [1, N, 5 + C] (or the transposed
 * [1, 5 + C, N]) holding cx, cy, w, h in input-frame pixels, objectness, and
 * C class probabilities. Output is passed through raw: no NMS and no score
 * floor - suppression belongs to the pipeline's own `nms` command.
 */

import { readFile } from 'node:fs/promises';

import * as ort from 'onnxruntime-web';

import type { RgbImage } from './image.js';
import { letterboxTensor, planLetterbox, unmapBox } from './letterbox.js';
import type { BridgeConfig, DetectionsDocument } from './schema.js';
import { validateHeadWidth } from './schema.js';

const DEFAULT_INPUT_SIZE = 608;

ort.env.wasm.numThreads = 1;

export async function loadSession(modelPath: string): Promise<ort.InferenceSession> {
  let bytes: Buffer;
  try {
    bytes = await readFile(modelPath);
  } catch (err) {
    throw new Error(`cannot read model ${modelPath}: ${(err as Error).message}`);
  }
  try {
    return await ort.InferenceSession.create(bytes, { executionProviders: ['wasm'] });
  } catch (err) {
    throw new Error(`cannot load model ${modelPath}: ${(err as Error).message}`);
  }
}

/** Static square input edge from model metadata, if the model declares one. */
export function staticInputSize(session: ort.InferenceSession): number | undefined {
  const meta = session.inputMetadata?.[0];
  if (!meta?.isTensor) {
    return undefined;
  }
  const shape = meta.shape;
  if (
    shape.length === 4 &&
    typeof shape[2] === 'number' &&
    shape[2] > 0 &&
    shape[2] === shape[3]
  ) {
    return shape[2];
  }
  return undefined;
}

interface HeadLayout {
  count: number;
  width: number;
  transposed: boolean;
}

/**
 * Resolve [1, N, V] vs [1, V, N] using the expected per-detection width
 * V = classes + 5. Exact-width match beats the size heuristic, so small
 * detection counts cannot be mistaken for a transposed head.
 */
export function resolveHeadLayout(dims: readonly number[], numClasses: number): HeadLayout {
  if (dims.length !== 3 || dims[0] !== 1) {
    throw new Error(`unexpected detector output shape [${dims.join(', ')}]; expected [1, N, V]`);
  }
  const expected = numClasses + 5;
  if (dims[2] === expected) {
    return { count: dims[1], width: dims[2], transposed: false };
  }
  if (dims[1] === expected) {
    return { count: dims[2], width: dims[1], transposed: true };
  }
  // Neither axis fits the configured classes: report via the filter formula.
  const width = dims[2] >= 5 ? dims[2] : dims[1];
  validateHeadWidth(width, numClasses);
  throw new Error(`unreachable: head width ${width} passed validation unexpectedly`);
}

export async function runDetector(image: RgbImage, config: BridgeConfig): Promise<DetectionsDocument> {
  const session = await loadSession(config.modelPath);
  const inputSize = config.inputSize ?? staticInputSize(session) ?? DEFAULT_INPUT_SIZE;
  const plan = planLetterbox(image.width, image.height, inputSize);

  const feeds: Record<string, ort.Tensor> = {};
  feeds[session.inputNames[0]] = new ort.Tensor(
    'float32',
    letterboxTensor(image, plan),
    [1, 3, inputSize, inputSize],
  );
  const results = await session.run(feeds);
  const output = results[session.outputNames[0]];

  const layout = resolveHeadLayout(output.dims, config.classNames.length);
  validateHeadWidth(layout.width, config.classNames.length);
  const data = output.data as Float32Array;
  const at = layout.transposed
    ? (row: number, field: number) => data[field * layout.count + row]
    : (row: number, field: number) => data[row * layout.width + field];

  const detections: DetectionsDocument['detections'] = [];
  for (let i = 0; i < layout.count; i++) {
    const bbox = unmapBox(
      { cx: at(i, 0), cy: at(i, 1), w: at(i, 2), h: at(i, 3) },
      plan,
      image.width,
      image.height,
    );
    if (!bbox) continue;
    const objectness = at(i, 4);
    let best = 0;
    let bestScore = -Infinity;
    for (let c = 0; c < config.classNames.length; c++) {
      const score = at(i, 5 + c);
      if (score > bestScore) {
        best = c;
        bestScore = score;
      }
    }
    const confidence = Math.min(1, Math.max(0, objectness * bestScore));
    detections.push({ class: config.classNames[best], bbox, confidence });
  }

  return {
    image: { width: image.width, height: image.height },
    detections,
  };
}
