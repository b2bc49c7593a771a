/**
 * The authoritative pixel model behind the canvas.
 *
 * Every tool mutates these buffers; the on-screen canvas and the exported
 * PNGs are both rendered from them, so what you see is exactly what the
 * server receives. Brushes are hard-edged rounds: a pixel is painted iff its
 * center lies within the radius.
 */

import { encodeGray, encodeRgba } from "./png.js";

export class MaskRaster {
  readonly width: number;
  readonly height: number;
  readonly bits: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.bits = new Uint8Array(width * height);
  }

  stampDisk(cx: number, cy: number, radius: number, value: 0 | 1): void {
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(cx - radius - 1));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + radius + 1));
    const y0 = Math.max(0, Math.floor(cy - radius - 1));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + radius + 1));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x + 0.5 - cx;
        const dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= r2) this.bits[y * this.width + x] = value;
      }
    }
  }

  stroke(x0: number, y0: number, x1: number, y1: number, radius: number, value: 0 | 1): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.stampDisk(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, radius, value);
    }
  }

  isEmpty(): boolean {
    return !this.bits.some((b) => b !== 0);
  }

  area(): number {
    let n = 0;
    for (const b of this.bits) if (b) n++;
    return n;
  }

  /** 8-bit grayscale PNG, foreground 255 (server thresholds at 128). */
  toPng(): Uint8Array {
    const gray = new Uint8Array(this.bits.length);
    for (let i = 0; i < this.bits.length; i++) gray[i] = this.bits[i] ? 255 : 0;
    return encodeGray(this.width, this.height, gray);
  }
}

export type Rgb = [number, number, number];

export class HintRaster {
  readonly width: number;
  readonly height: number;
  /** RGBA; alpha > 0 marks the painted support. */
  readonly data: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4);
  }

  paintDisk(cx: number, cy: number, radius: number, color: Rgb): void {
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(cx - radius - 1));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + radius + 1));
    const y0 = Math.max(0, Math.floor(cy - radius - 1));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + radius + 1));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x + 0.5 - cx;
        const dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= r2) {
          const at = (y * this.width + x) * 4;
          this.data[at] = color[0];
          this.data[at + 1] = color[1];
          this.data[at + 2] = color[2];
          this.data[at + 3] = 255;
        }
      }
    }
  }

  paintStroke(x0: number, y0: number, x1: number, y1: number, radius: number, color: Rgb): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.paintDisk(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, radius, color);
    }
  }

  /** Collage-style paste of RGBA source pixels (fully opaque on support). */
  pasteRect(
    src: Uint8Array,
    srcWidth: number,
    sx: number,
    sy: number,
    w: number,
    h: number,
    dx: number,
    dy: number,
  ): void {
    for (let y = 0; y < h; y++) {
      const ty = dy + y;
      if (ty < 0 || ty >= this.height) continue;
      for (let x = 0; x < w; x++) {
        const tx = dx + x;
        if (tx < 0 || tx >= this.width) continue;
        const from = ((sy + y) * srcWidth + (sx + x)) * 4;
        const to = (ty * this.width + tx) * 4;
        this.data[to] = src[from];
        this.data[to + 1] = src[from + 1];
        this.data[to + 2] = src[from + 2];
        this.data[to + 3] = 255;
      }
    }
  }

  erase(cx: number, cy: number, radius: number): void {
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(cx - radius - 1));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + radius + 1));
    const y0 = Math.max(0, Math.floor(cy - radius - 1));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + radius + 1));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x + 0.5 - cx;
        const dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= r2) this.data.fill(0, (y * this.width + x) * 4, (y * this.width + x) * 4 + 4);
      }
    }
  }

  hasSupport(): boolean {
    for (let i = 3; i < this.data.length; i += 4) {
      if (this.data[i] > 0) return true;
    }
    return false;
  }

  toPng(): Uint8Array {
    return encodeRgba(this.width, this.height, this.data);
  }
}

/** Radius of a context dot: a 3x3-ish stamp, far below the dot-area cutoff. */
export const CONTEXT_DOT_RADIUS = 1.6;
