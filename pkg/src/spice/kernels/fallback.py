"""Numpy implementations of the pixel kernels.

Evaluation-order contract (mirrored exactly by the compiled module so the two
paths are bit-identical):

- separable blur: horizontal pass then vertical pass; within a pass the taps
  accumulate in ascending offset order and the sum is divided by the exact
  integer tap total once per pass;
- bilinear: out = (1-fy)*((1-fx)*v00 + fx*v01) + fy*((1-fx)*v10 + fx*v11);
- area: per output cell, coverage weights accumulate in ascending source
  index order, then divide by the weight sum accumulated in the same order;
- blend: out = soft*edited + (1-soft)*original, with soft exactly 0 or 1
  passing input bytes through untouched;
- integer stages (edge smoothing, Sobel, direction predicates, noise hashing)
  are exact and therefore order-free.

Borders clamp to the edge everywhere.
"""

import numpy as np
from scipy import ndimage

_U64 = np.uint64
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0

_TAN22_NUM = 5741
_TAN22_DEN = 13860


def _clamped_pad_1d(n, radius):
    return np.clip(np.arange(-radius, n + radius), 0, n - 1)


def _blur_pass_f64(src, taps):
    """One horizontal pass of the normalized blur over the last axis."""
    k = taps.shape[0]
    radius = k // 2
    total = float(int(taps.sum()))
    w = src.shape[-1]
    padded = src[..., _clamped_pad_1d(w, radius)]
    acc = np.zeros_like(src)
    for i in range(k):
        acc += float(taps[i]) * padded[..., i : i + w]
    return acc / total


def blur_sep_f64(src, taps):
    out = _blur_pass_f64(src, taps)
    out = _blur_pass_f64(np.ascontiguousarray(out.T), taps)
    return np.ascontiguousarray(out.T)


def _blur_pass_i64(src, taps):
    k = taps.shape[0]
    radius = k // 2
    w = src.shape[-1]
    padded = src[..., _clamped_pad_1d(w, radius)]
    acc = np.zeros_like(src)
    for i in range(k):
        acc += taps[i] * padded[..., i : i + w]
    return acc


def blur_sep_i64(src, taps):
    out = _blur_pass_i64(src, taps)
    return np.ascontiguousarray(_blur_pass_i64(np.ascontiguousarray(out.T), taps).T)


def sobel_i64(sm):
    h, w = sm.shape
    p = sm[np.clip(np.arange(-1, h + 1), 0, h - 1)][:, np.clip(np.arange(-1, w + 1), 0, w - 1)]
    right = p[0:h, 2:] + 2 * p[1 : h + 1, 2:] + p[2:, 2:]
    left = p[0:h, 0:w] + 2 * p[1 : h + 1, 0:w] + p[2:, 0:w]
    bottom = p[2:, 0:w] + 2 * p[2:, 1 : w + 1] + p[2:, 2:]
    top = p[0:h, 0:w] + 2 * p[0:h, 1 : w + 1] + p[0:h, 2:]
    return right - left, bottom - top


def gradient_mag2(gx, gy):
    fx = gx.astype(np.float64)
    fy = gy.astype(np.float64)
    return fx * fx + fy * fy


def nms_keep(gx, gy, mag2):
    """Keep local maxima of mag2 along the quantized gradient direction.

    Sectors come from exact integer comparisons against tan(22.5 deg), so the
    decision is symmetric under axis swaps and sign flips; ties keep the pixel.
    Missing neighbors (image border) never suppress.
    """
    h, w = mag2.shape
    adx = np.abs(gx)
    ady = np.abs(gy)
    horiz = ady * _TAN22_DEN <= adx * _TAN22_NUM
    vert = ~horiz & (adx * _TAN22_DEN <= ady * _TAN22_NUM)
    diag1 = ~horiz & ~vert & ((gx > 0) == (gy > 0))
    diag2 = ~horiz & ~vert & ~diag1

    p = np.zeros((h + 2, w + 2), dtype=mag2.dtype)
    p[1:-1, 1:-1] = mag2

    def shifted(dy, dx):
        return p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    n1 = np.zeros_like(mag2)
    n2 = np.zeros_like(mag2)
    for sector, (dy, dx) in (
        (horiz, (0, 1)),
        (vert, (1, 0)),
        (diag1, (1, 1)),
        (diag2, (-1, 1)),
    ):
        n1 = np.where(sector, shifted(dy, dx), n1)
        n2 = np.where(sector, shifted(-dy, -dx), n2)
    return (mag2 > 0) & (mag2 >= n1) & (mag2 >= n2)


def hysteresis(weak, strong):
    weak = weak.astype(bool)
    strong = strong.astype(bool)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return np.zeros_like(weak, dtype=np.uint8)
    seeded = np.zeros(count + 1, dtype=bool)
    seeded[np.unique(labels[strong])] = True
    seeded[0] = False
    return (seeded[labels] & weak).astype(np.uint8)


def resize_bilinear_f64(src, out_h, out_w):
    h, w, c = src.shape
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    y0f = np.floor(sy)
    x0f = np.floor(sx)
    fy = (sy - y0f)[:, None, None]
    fx = (sx - x0f)[None, :, None]
    y0 = np.clip(y0f.astype(np.intp), 0, h - 1)
    y1 = np.clip(y0f.astype(np.intp) + 1, 0, h - 1)
    x0 = np.clip(x0f.astype(np.intp), 0, w - 1)
    x1 = np.clip(x0f.astype(np.intp) + 1, 0, w - 1)
    v00 = src[y0][:, x0]
    v01 = src[y0][:, x1]
    v10 = src[y1][:, x0]
    v11 = src[y1][:, x1]
    top = (1.0 - fx) * v00 + fx * v01
    bottom = (1.0 - fx) * v10 + fx * v11
    return (1.0 - fy) * top + fy * bottom


def _area_pass(src, out_n):
    """Area-average resample of the column axis of a (rows, cols, channels) block."""
    h, w, c = src.shape
    scale = w / out_n
    out = np.empty((h, out_n, c), dtype=np.float64)
    for j in range(out_n):
        b0 = j * scale
        b1 = (j + 1) * scale
        c0 = int(np.floor(b0))
        c1 = min(int(np.ceil(b1)), w)
        c0 = min(c0, w - 1)
        acc = np.zeros((h, c), dtype=np.float64)
        wsum = 0.0
        for col in range(c0, c1):
            wgt = min(b1, col + 1.0) - max(b0, float(col))
            if wgt < 0.0:
                wgt = 0.0
            acc += wgt * src[:, col, :]
            wsum += wgt
        out[:, j, :] = acc / wsum
    return out


def resize_area_f64(src, out_h, out_w):
    out = _area_pass(src, out_w)
    out = np.ascontiguousarray(out.transpose(1, 0, 2))
    out = _area_pass(out, out_h)
    return np.ascontiguousarray(out.transpose(1, 0, 2))


def blend_u8(original, edited, soft):
    of = original / 255.0
    ef = edited / 255.0
    s = soft[:, :, None]
    blended = s * ef + (1.0 - s) * of
    q = quantize_u8(blended)
    out = np.where(s == 0.0, original, np.where(s == 1.0, edited, q))
    return out.astype(np.uint8)


def noise_field(seed, stage_index, h, w, c):
    base = _U64(((seed * _GAMMA) & 0xFFFFFFFFFFFFFFFF) ^ (stage_index << 48))
    ys = (np.arange(h, dtype=np.uint64) << _U64(24))[:, None, None]
    xs = (np.arange(w, dtype=np.uint64) << _U64(2))[None, :, None]
    cs = np.arange(c, dtype=np.uint64)[None, None, :]
    z = base ^ ys ^ xs ^ cs
    z = z ^ (z >> _U64(30))
    z = z * _MIX1
    z = z ^ (z >> _U64(27))
    z = z * _MIX2
    z = z ^ (z >> _U64(31))
    return (z >> _U64(11)).astype(np.float64) * _INV_2_53


def quantize_u8(values):
    mag = np.floor(np.abs(values) * 255.0 + 0.5)
    out = np.sign(values) * mag
    return np.clip(out, 0.0, 255.0).astype(np.uint8)
