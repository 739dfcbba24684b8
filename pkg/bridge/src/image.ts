/**
 * Image loading for the bridge: PNG (via pngjs) and binary PGM (P5), the two
 * formats the inspection pipeline itself speaks.
 */

import { PNG } from 'pngjs';

export interface RgbImage {
  width: number;
  height: number;
  /** Interleaved RGB, 3 bytes per pixel, row-major. */
  rgb: Uint8Array;
}

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export function decodeImage(data: Buffer): RgbImage {
  if (data.subarray(0, 8).equals(PNG_MAGIC)) {
    return decodePng(data);
  }
  if (data.length >= 2 && data[0] === 0x50 && data[1] === 0x35) {
    return decodePgm(data);
  }
  throw new Error('unrecognized image format; expected PNG or binary PGM (P5)');
}

function decodePng(data: Buffer): RgbImage {
  const png = PNG.sync.read(data);
  const rgb = new Uint8Array(png.width * png.height * 3);
  for (let i = 0, j = 0; i < png.data.length; i += 4, j += 3) {
    rgb[j] = png.data[i];
    rgb[j + 1] = png.data[i + 1];
    rgb[j + 2] = png.data[i + 2];
  }
  return { width: png.width, height: png.height, rgb };
}

function decodePgm(data: Buffer): RgbImage {
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < data.length) {
      const ch = data[pos];
      if (ch === 0x23) {
        // comment to end of line
        while (pos < data.length && data[pos] !== 0x0a) pos++;
      } else if (ch === 0x20 || ch === 0x09 || ch === 0x0a || ch === 0x0d) {
        pos++;
      } else {
        break;
      }
    }
    let start = pos;
    while (pos < data.length && data[pos] >= 0x30 && data[pos] <= 0x39) pos++;
    if (pos === start) {
      throw new Error(`malformed PGM header at byte ${pos}`);
    }
    fields.push(Number(data.subarray(start, pos).toString('ascii')));
  }
  pos++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (maxval > 255) {
    throw new Error(`PGM maxval ${maxval} exceeds 8-bit range`);
  }
  const expected = width * height;
  if (data.length - pos < expected) {
    throw new Error(`PGM pixel data truncated: need ${expected} bytes, have ${data.length - pos}`);
  }
  const rgb = new Uint8Array(expected * 3);
  for (let i = 0; i < expected; i++) {
    const v = data[pos + i];
    rgb[i * 3] = v;
    rgb[i * 3 + 1] = v;
    rgb[i * 3 + 2] = v;
  }
  return { width, height, rgb };
}
