"""Deterministic pixel operations: resampling, blur, blending, color, PNG I/O.

Filter policy: bilinear when upscaling rasters, area-average when downscaling
(anti-aliased box integration), nearest for masks. Same-size resizes are
byte-identical no-ops for every filter.
"""

from __future__ import annotations

import enum
import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from spice import kernels
from spice.buffers import BinaryMask, ImageBuffer, Resolution, SoftMask, quantize
from spice.errors import CodecError, ValidationError


class ResampleFilter(enum.Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"
    AREA_AVERAGE = "area_average"


def _target_dims(target) -> tuple[int, int]:
    """Accepts a Resolution or a (width, height) pair; returns (width, height)."""
    if isinstance(target, Resolution):
        return target.size
    w, h = target
    return int(w), int(h)


def resize(image: ImageBuffer, target, filter: ResampleFilter = ResampleFilter.BILINEAR) -> ImageBuffer:
    out_w, out_h = _target_dims(target)
    if out_w < 1 or out_h < 1:
        raise ValidationError(f"resize target must be positive, got {out_w}x{out_h}")
    if (out_w, out_h) == (image.width, image.height):
        return image
    if filter is ResampleFilter.NEAREST:
        return ImageBuffer(kernels.resize_nearest(image.pixels, out_h, out_w))
    src = image.to_float()
    if filter is ResampleFilter.BILINEAR:
        out = kernels.resize_bilinear(src, out_h, out_w)
    else:
        out = kernels.resize_area(src, out_h, out_w)
    return ImageBuffer(quantize(out))


def pick_resize_filter(src_size: tuple[int, int], dst_size: tuple[int, int]) -> ResampleFilter:
    """Bilinear only when no axis shrinks; otherwise area-average."""
    if dst_size[0] >= src_size[0] and dst_size[1] >= src_size[1]:
        return ResampleFilter.BILINEAR
    return ResampleFilter.AREA_AVERAGE


def resize_mask(bits: np.ndarray, target) -> np.ndarray:
    """Nearest-neighbor resize for boolean masks (mandatory for binary data)."""
    out_w, out_h = _target_dims(target)
    if out_w < 1 or out_h < 1:
        raise ValidationError(f"resize target must be positive, got {out_w}x{out_h}")
    if (out_h, out_w) == bits.shape:
        return bits.copy()
    return kernels.resize_nearest(bits, out_h, out_w)


def gaussian_blur(mask, sigma: float) -> SoftMask:
    """Separable Gaussian blur of a binary or soft mask, clamp-to-edge borders.

    Kernel radius is ceil(3*sigma); constant regions survive exactly, so an
    all-ones mask blurs to all ones.
    """
    if sigma <= 0:
        raise ValidationError(f"blur sigma must be positive, got {sigma}")
    if isinstance(mask, BinaryMask):
        values = mask.bits.astype(np.float64)
    elif isinstance(mask, SoftMask):
        values = mask.values
    else:
        values = np.asarray(mask, dtype=np.float64)
    out = kernels.blur_separable(values, sigma)
    return SoftMask(np.clip(out, 0.0, 1.0))


def blend(original: ImageBuffer, edited: ImageBuffer, soft: SoftMask) -> ImageBuffer:
    """Convex per-pixel mix: soft*edited + (1-soft)*original.

    Computed in [0,1] and quantized half-away-from-zero; pixels with soft
    exactly 0 (resp. 1) are byte-identical to the original (resp. edited).
    """
    if (original.height, original.width) != (edited.height, edited.width) or (
        original.height,
        original.width,
    ) != (soft.height, soft.width):
        raise ValidationError(
            f"blend dimension mismatch: original {original.size}, edited {edited.size}, "
            f"soft {soft.width}x{soft.height}"
        )
    if original.channels != edited.channels:
        raise ValidationError("blend inputs must share channel count")
    return ImageBuffer(kernels.blend_u8(original.pixels, edited.pixels, soft.values))


def rgb_to_hsv_hue(rgb) -> tuple[float, bool]:
    """Hexcone hue of an RGB triple in [0,1], scaled to [0,1).

    Returns (hue, degenerate); gray inputs (max == min) report hue 0 with the
    degenerate flag set rather than raising.
    """
    r, g, b = (float(v) for v in rgb)
    for v in (r, g, b):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"rgb components must lie in [0,1], got {rgb}")
    mx = max(r, g, b)
    mn = min(r, g, b)
    if mx == mn:
        return 0.0, True
    delta = mx - mn
    if mx == r:
        h = ((g - b) / delta) % 6.0
    elif mx == g:
        h = (b - r) / delta + 2.0
    else:
        h = (r - g) / delta + 4.0
    hue = h / 6.0
    if hue >= 1.0:
        hue -= 1.0
    return hue, False


def decode_png(data: bytes) -> ImageBuffer:
    """Decode an 8-bit RGB/RGBA PNG. Grayscale decodes via decode_mask_png."""
    img = _open_png(data)
    if img.mode == "RGB" or img.mode == "RGBA":
        return ImageBuffer(np.asarray(img, dtype=np.uint8))
    if img.mode in ("L", "LA", "P", "1"):
        converted = img.convert("RGBA" if "A" in img.mode or _palette_has_alpha(img) else "RGB")
        return ImageBuffer(np.asarray(converted, dtype=np.uint8))
    raise CodecError(f"unsupported PNG mode {img.mode!r} (8-bit RGB/RGBA/grayscale only)")


def decode_mask_png(data: bytes, threshold: int = 128) -> np.ndarray:
    """Decode a mask PNG to bool bits: foreground = value >= threshold."""
    img = _open_png(data)
    if img.mode not in ("L", "RGB", "RGBA", "P", "1", "LA"):
        raise CodecError(f"unsupported PNG mode {img.mode!r} for mask input")
    gray = np.asarray(img.convert("L"), dtype=np.uint8)
    return gray >= threshold


def decode_soft_mask_png(data: bytes) -> np.ndarray:
    """Decode a grayscale PNG to [0,1] float values (0..255 -> k/255)."""
    img = _open_png(data)
    gray = np.asarray(img.convert("L"), dtype=np.uint8)
    return gray / 255.0


def _palette_has_alpha(img) -> bool:
    return img.mode == "P" and "transparency" in img.info


def _open_png(data: bytes):
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CodecError(f"malformed PNG stream: {exc}") from exc
    if img.format != "PNG":
        raise CodecError(f"expected PNG data, got {img.format}")
    bits = img.info.get("bits", 8)
    if bits != 8 or img.mode in ("I", "I;16", "F", "I;16B"):
        raise CodecError(f"unsupported PNG bit depth (mode {img.mode!r}); 8-bit only")
    return img


def encode_png(image: ImageBuffer) -> bytes:
    mode = "RGB" if image.channels == 3 else "RGBA"
    return _encode(Image.fromarray(np.asarray(image.pixels), mode))


def encode_mask_png(bits: np.ndarray) -> bytes:
    gray = np.where(bits, np.uint8(255), np.uint8(0))
    return _encode(Image.fromarray(gray, "L"))


def encode_soft_mask_png(soft: SoftMask) -> bytes:
    return _encode(Image.fromarray(soft.to_u8(), "L"))


def _encode(img) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
