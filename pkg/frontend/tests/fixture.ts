/** Scripted drawing shared by the unit and integration tests: deterministic
 * strokes standing in for a user sketching a mask, two context dots, and a
 * color patch. */

import { HintRaster, MaskRaster, CONTEXT_DOT_RADIUS } from "../src/raster.js";

export function drawFixture(width: number, height: number): { mask: MaskRaster; patches: HintRaster } {
  const mask = new MaskRaster(width, height);
  mask.stroke(width * 0.3, height * 0.35, width * 0.6, height * 0.35, 7, 1);
  mask.stroke(width * 0.45, height * 0.35, width * 0.45, height * 0.65, 7, 1);
  mask.stampDisk(4, 4, CONTEXT_DOT_RADIUS, 1);
  mask.stampDisk(width - 5, height - 5, CONTEXT_DOT_RADIUS, 1);

  const patches = new HintRaster(width, height);
  patches.paintStroke(width * 0.35, height * 0.4, width * 0.55, height * 0.4, 5, [210, 40, 40]);
  patches.paintDisk(width * 0.45, height * 0.55, 6, [40, 190, 60]);
  return { mask, patches };
}

/** Tiny deterministic PRNG for generating a reproducible base image. */
export function xorshift32(seed: number): () => number {
  let x = seed >>> 0 || 1;
  return () => {
    x ^= x << 13;
    x >>>= 0;
    x ^= x >>> 17;
    x ^= x << 5;
    x >>>= 0;
    return x;
  };
}

export function noiseImageRgba(width: number, height: number, seed: number): Uint8Array {
  const next = xorshift32(seed);
  const data = new Uint8Array(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    const r = next();
    data[i * 4] = r & 0xff;
    data[i * 4 + 1] = (r >>> 8) & 0xff;
    data[i * 4 + 2] = (r >>> 16) & 0xff;
    data[i * 4 + 3] = 255;
  }
  return data;
}
