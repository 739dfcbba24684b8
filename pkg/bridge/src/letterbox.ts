/**
 * Letterbox an image into the detector's square input frame and map raw
 * detector boxes back to the original frame. The un-mapping is exact when
 * the input is already square at the detector size (scale 1, zero padding).
 */

import type { RgbImage } from './image.js';

export const LETTERBOX_FILL = 114;

export interface LetterboxPlan {
  inputSize: number;
  scale: number;
  padX: number;
  padY: number;
}

export function planLetterbox(width: number, height: number, inputSize: number): LetterboxPlan {
  const scale = Math.min(inputSize / width, inputSize / height);
  return {
    inputSize,
    scale,
    padX: (inputSize - width * scale) / 2,
    padY: (inputSize - height * scale) / 2,
  };
}

/**
 * Build the [1, 3, S, S] CHW float tensor data, RGB normalized to [0, 1],
 * nearest-neighbor resampled, gray-filled outside the image content.
 */
export function letterboxTensor(image: RgbImage, plan: LetterboxPlan): Float32Array {
  const s = plan.inputSize;
  const out = new Float32Array(3 * s * s).fill(LETTERBOX_FILL / 255);
  const plane = s * s;
  for (let oy = 0; oy < s; oy++) {
    const sy = Math.floor((oy - plan.padY) / plan.scale);
    if (sy < 0 || sy >= image.height) continue;
    for (let ox = 0; ox < s; ox++) {
      const sx = Math.floor((ox - plan.padX) / plan.scale);
      if (sx < 0 || sx >= image.width) continue;
      const src = (sy * image.width + sx) * 3;
      const dst = oy * s + ox;
      out[dst] = image.rgb[src] / 255;
      out[plane + dst] = image.rgb[src + 1] / 255;
      out[2 * plane + dst] = image.rgb[src + 2] / 255;
    }
  }
  return out;
}

function roundHalfUp(v: number): number {
  return Math.floor(v + 0.5);
}

export interface RawBox {
  cx: number;
  cy: number;
  w: number;
  h: number;
}

/**
 * Map one raw box (center format, input-frame pixels) back into the original
 * image frame as an integer corner-format box. Returns null when the box
 * lands entirely outside the image (the pipeline's loader rejects those).
 */
export function unmapBox(
  raw: RawBox,
  plan: LetterboxPlan,
  imageWidth: number,
  imageHeight: number,
): { x: number; y: number; w: number; h: number } | null {
  const x0 = (raw.cx - raw.w / 2 - plan.padX) / plan.scale;
  const y0 = (raw.cy - raw.h / 2 - plan.padY) / plan.scale;
  const x = roundHalfUp(x0);
  const y = roundHalfUp(y0);
  const w = Math.max(1, roundHalfUp(raw.w / plan.scale));
  const h = Math.max(1, roundHalfUp(raw.h / plan.scale));
  if (x >= imageWidth || x + w <= 0 || y >= imageHeight || y + h <= 0) {
    return null;
  }
  return { x, y, w, h };
}
