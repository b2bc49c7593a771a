"""Independent reference implementations used to compute expected values.

Everything here is deliberately written from the definitions (plain Python,
brute force) rather than calling the package code it is used to check.
"""

import hashlib
import math
import struct
from fractions import Fraction

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15


def splitmix64_finalize(z):
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def u64_unit(z):
    return (z >> 11) / 9007199254740992.0


def mock_noise(seed, stage_index, x, y, c):
    key = ((seed * GAMMA) & MASK64) ^ (stage_index << 48) ^ (y << 24) ^ (x << 2) ^ c
    return u64_unit(splitmix64_finalize(key))


def two_stage_value(seed, start, strength, canny_steps, base_steps, x, y, c, edge=False):
    """Pure-real two-stage mock formula (no intermediate quantization),
    for a fully-editable pixel (soft = 1)."""
    total = canny_steps + base_steps
    w1 = strength * canny_steps / total
    w2 = strength * base_steps / total
    if edge:
        v1 = start
    else:
        v1 = (1.0 - w1) * start + w1 * mock_noise(seed, 0, x, y, c)
    return (1.0 - w2) * v1 + w2 * mock_noise(seed, 1, x, y, c)


def quantize_scalar(v):
    return int(min(max(math.floor(abs(v) * 255.0 + 0.5) * (1 if v >= 0 else -1), 0), 255))


def gaussian_kernel_1d(sigma):
    radius = math.ceil(3.0 * sigma)
    w = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-radius, radius + 1)]
    total = sum(w)
    return [v / total for v in w], radius


def conv2d_clamped(mask, sigma):
    """Direct O(N^2 k^2) 2-D Gaussian convolution with clamp-to-edge borders."""
    w1, radius = gaussian_kernel_1d(sigma)
    h, w = mask.shape
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    acc += w1[dy + radius] * w1[dx + radius] * mask[yy, xx]
            out[y, x] = acc
    return out


def bilinear_reference(src, out_h, out_w):
    """Bilinear resample evaluated from the definition at output pixel centers."""
    h, w = src.shape[:2]
    out = np.zeros((out_h, out_w) + src.shape[2:], dtype=np.float64)
    for i in range(out_h):
        sy = (i + 0.5) * h / out_h - 0.5
        y0 = math.floor(sy)
        fy = sy - y0
        ya = min(max(y0, 0), h - 1)
        yb = min(max(y0 + 1, 0), h - 1)
        for j in range(out_w):
            sx = (j + 0.5) * w / out_w - 0.5
            x0 = math.floor(sx)
            fx = sx - x0
            xa = min(max(x0, 0), w - 1)
            xb = min(max(x0 + 1, 0), w - 1)
            top = (1 - fx) * src[ya, xa] + fx * src[ya, xb]
            bot = (1 - fx) * src[yb, xa] + fx * src[yb, xb]
            out[i, j] = (1 - fy) * top + fy * bot
    return out


def extend_bbox_rational(x0, y0, x1, y1, tw, th, img_w, img_h):
    """Rational-arithmetic reference for the aspect-matching box extension."""
    w = x1 - x0
    h = y1 - y0
    aspect = Fraction(w, h)
    target = Fraction(tw, th)
    if aspect < target:
        new_w = math.ceil(Fraction(h) * target)
        new_h = h
    else:
        new_w = w
        new_h = math.ceil(Fraction(w) / target)

    def pad(lo, hi, new_len, limit):
        if new_len >= limit:
            return 0, limit, new_len > limit
        total = new_len - (hi - lo)
        before = total // 2
        lo -= before
        hi += total - before
        if lo < 0:
            hi += -lo
            lo = 0
        elif hi > limit:
            lo -= hi - limit
            hi = limit
        return lo, hi, False

    nx0, nx1, cx = pad(x0, x1, new_w, img_w)
    ny0, ny1, cy = pad(y0, y1, new_h, img_h)
    return (nx0, ny0, nx1, ny1), cx or cy


def mock_embedding(content_hash, dim=64):
    comps = [u64_unit(splitmix64_finalize(content_hash ^ i)) - 0.5 for i in range(dim)]
    norm = math.sqrt(sum(v * v for v in comps))
    return [v / norm for v in comps]


def text_hash(text):
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


def image_hash(pixels_u8):
    h, w, c = pixels_u8.shape
    header = struct.pack(">III", w, h, c)
    return int.from_bytes(
        hashlib.sha256(header + pixels_u8.tobytes()).digest()[:8], "big"
    )


def cosine(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return sum(x * y for x, y in zip(a, b)) / (na * nb)
