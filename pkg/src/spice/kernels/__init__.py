"""Pixel kernels with a compiled fast path.

The compiled extension (``spice.kernels._native``, built from Cython) and the
numpy fallback implement the same evaluation-order contract, so both produce
bit-identical outputs; ``tests/test_kernel_parity.py`` enforces that. Selection
happens once at import time. Set ``SPICE_FORCE_FALLBACK=1`` to skip the
extension (used by the benchmark to time both paths).
"""

import math
import os

import numpy as np

HAVE_NATIVE = False
if os.environ.get("SPICE_FORCE_FALLBACK", "") in ("", "0"):
    try:
        from spice.kernels import _native as _impl

        HAVE_NATIVE = True
    except ImportError:
        from spice.kernels import fallback as _impl
else:
    from spice.kernels import fallback as _impl

IMPL_NAME = "native" if HAVE_NATIVE else "fallback"

# Weight scale for the soft-mask blur. Snapping exp() to a fixed-point grid
# keeps the kernel identical across libm versions; the quantization error
# (~6e-8 per tap) is far below the 1/255 mask resolution.
BLUR_SCALE_BITS = 24
# Coarser scale for the edge detector's smoothing stage: gradients stay in
# int64 range through Sobel and the direction predicates.
EDGE_SCALE_BITS = 8

# tan(22.5 deg) = sqrt(2)-1 as a continued-fraction convergent, used for
# exact integer gradient-direction sector tests.
TAN22_NUM = 5741
TAN22_DEN = 13860

SPLITMIX_GAMMA = 0x9E3779B97F4A7C15


def gaussian_taps(sigma, scale_bits=BLUR_SCALE_BITS):
    """Fixed-point Gaussian taps w_i = exp(-i^2 / 2 sigma^2), radius ceil(3 sigma).

    Returned as int64 with the center tap equal to 2**scale_bits; callers
    normalize by the exact integer tap sum.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    i = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(i * i) / (2.0 * sigma * sigma))
    return np.rint(w * float(1 << scale_bits)).astype(np.int64)


def blur_separable(src, sigma):
    """Normalized separable Gaussian blur with clamp-to-edge borders.

    src is float64 HxW; output stays in [0, 1] when the input is. Constant
    regions are preserved exactly (integer taps cancel against their sum).
    """
    taps = gaussian_taps(sigma)
    src = np.ascontiguousarray(src, dtype=np.float64)
    return _impl.blur_sep_f64(src, taps)


def blur_separable_i64(src, taps):
    """Unnormalized integer separable convolution (edge-detector smoothing)."""
    src = np.ascontiguousarray(src, dtype=np.int64)
    return _impl.blur_sep_i64(src, taps)


def sobel_i64(smoothed):
    """3x3 Sobel gradients of an integer image, clamp-to-edge borders."""
    smoothed = np.ascontiguousarray(smoothed, dtype=np.int64)
    return _impl.sobel_i64(smoothed)


def gradient_mag2(gx, gy):
    """Squared gradient magnitude as float64 (commutative sum, so exactly
    invariant under 90-degree rotations of the input)."""
    return _impl.gradient_mag2(gx, gy)


def nms_keep(gx, gy, mag2):
    """Non-maximum suppression over 4 quantized directions; ties are kept."""
    return _impl.nms_keep(gx, gy, mag2)


def hysteresis(weak, strong):
    """8-connected hysteresis: weak pixels survive iff connected to a strong one."""
    return _impl.hysteresis(
        np.ascontiguousarray(weak, dtype=np.uint8),
        np.ascontiguousarray(strong, dtype=np.uint8),
    ).astype(bool)


def resize_bilinear(src, out_h, out_w):
    """Bilinear resample of float64 HxWxC at output pixel centers."""
    src = np.ascontiguousarray(src, dtype=np.float64)
    return _impl.resize_bilinear_f64(src, int(out_h), int(out_w))


def resize_area(src, out_h, out_w):
    """Coverage-weighted (area) resample of float64 HxWxC; exact box means."""
    src = np.ascontiguousarray(src, dtype=np.float64)
    return _impl.resize_area_f64(src, int(out_h), int(out_w))


def nearest_index(src_len, out_len):
    """Source index per output index for nearest-neighbor sampling."""
    scale = src_len / out_len
    idx = np.floor((np.arange(out_len, dtype=np.float64) + 0.5) * scale)
    return np.clip(idx, 0, src_len - 1).astype(np.intp)


def resize_nearest(src, out_h, out_w):
    """Nearest-neighbor resample (any dtype, 2-D or 3-D)."""
    ys = nearest_index(src.shape[0], out_h)
    xs = nearest_index(src.shape[1], out_w)
    return np.ascontiguousarray(src[np.ix_(ys, xs)])


def blend_u8(original, edited, soft):
    """out = soft*edited + (1-soft)*original, quantized; soft 0/1 pass bytes through."""
    return _impl.blend_u8(
        np.ascontiguousarray(original, dtype=np.uint8),
        np.ascontiguousarray(edited, dtype=np.uint8),
        np.ascontiguousarray(soft, dtype=np.float64),
    )


def noise_field(seed, stage_index, h, w, c):
    """Deterministic per-pixel noise in [0, 1) from a counter-based hash."""
    return _impl.noise_field(
        int(seed) & 0xFFFFFFFFFFFFFFFF, int(stage_index), int(h), int(w), int(c)
    )


def quantize_u8(values):
    """[0,1] reals to 8-bit, ties rounded half away from zero, clipped."""
    return _impl.quantize_u8(np.ascontiguousarray(values, dtype=np.float64))


def splitmix64_finalize(z):
    """Scalar reference mix used by the noise field and the embedding mock."""
    mask = 0xFFFFFFFFFFFFFFFF
    z &= mask
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & mask
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & mask
    z ^= z >> 31
    return z


def u64_to_unit(z):
    """Top 53 bits of a u64 mapped to [0, 1)."""
    return (z >> 11) * (1.0 / 9007199254740992.0)
