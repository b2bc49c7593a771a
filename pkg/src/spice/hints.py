"""Color/reference hints and edge extraction.

Hints are full-canvas RGBA rasters: the alpha channel only marks support
(alpha > 0), blending weight comes from the layer opacity. The edge detector
is classic Canny with thresholds relative to the crop's maximum gradient
magnitude; its integer smoothing/gradient stages make the boolean output
exactly equivariant under 90-degree rotations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from spice import kernels
from spice.buffers import ImageBuffer, quantize
from spice.errors import ValidationError

# Luma in integer thousandths keeps the whole gradient path exact.
_LUMA_WEIGHTS = (299, 587, 114)
_MAX_CANNY_SIGMA = 32.0


class HintKind(enum.Enum):
    COLOR_PATCH = "color_patch"
    REFERENCE_PASTE = "reference_paste"


@dataclass(frozen=True)
class HintLayer:
    kind: HintKind
    raster: ImageBuffer
    opacity: float

    def __post_init__(self):
        if self.raster.channels != 4:
            raise ValidationError("hint layers must be RGBA (alpha marks the support)")
        if not 0.0 <= self.opacity <= 1.0:
            raise ValidationError(f"hint opacity must lie in [0,1], got {self.opacity}")


class EdgeMap:
    """H x W boolean edge raster."""

    __slots__ = ("bits",)

    def __init__(self, bits: np.ndarray):
        bits = np.ascontiguousarray(bits)
        if bits.dtype != np.bool_ or bits.ndim != 2:
            raise ValidationError("edge map must be a boolean HxW array")
        bits.setflags(write=False)
        self.bits = bits

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EdgeMap)
            and self.bits.shape == other.bits.shape
            and np.array_equal(self.bits, other.bits)
        )


def composite_hints(base: ImageBuffer, layers) -> ImageBuffer:
    """Apply hint layers in order: on each layer's support,
    out = opacity*layer + (1-opacity)*current. No layers returns base as-is."""
    layers = list(layers)
    if not layers:
        return base
    for layer in layers:
        if (layer.raster.height, layer.raster.width) != (base.height, base.width):
            raise ValidationError(
                f"hint layer {layer.raster.size} does not match base {base.size}"
            )
    current = base.to_float()
    for layer in layers:
        if layer.opacity == 0.0:
            continue
        px = layer.raster.to_float()
        support = layer.raster.pixels[:, :, 3] > 0
        rgb = px[:, :, :3]
        mixed = layer.opacity * rgb + (1.0 - layer.opacity) * current[:, :, :3]
        current[:, :, :3] = np.where(support[:, :, None], mixed, current[:, :, :3])
    return ImageBuffer(quantize(current))


def _luma_i64(image: ImageBuffer) -> np.ndarray:
    px = image.pixels.astype(np.int64)
    wr, wg, wb = _LUMA_WEIGHTS
    return wr * px[:, :, 0] + wg * px[:, :, 1] + wb * px[:, :, 2]


def canny_edges(
    crop: ImageBuffer, sigma: float = 1.4, low: float = 0.1, high: float = 0.2
) -> EdgeMap:
    """Gaussian smooth, 3x3 Sobel, 4-direction non-maximum suppression (ties
    kept), then hysteresis with thresholds low/high relative to the maximum
    gradient magnitude in the crop."""
    if not 0.0 < low < high:
        raise ValidationError(f"need 0 < low < high, got low={low} high={high}")
    if sigma <= 0.0 or sigma > _MAX_CANNY_SIGMA:
        raise ValidationError(f"canny sigma must lie in (0, {_MAX_CANNY_SIGMA}], got {sigma}")
    luma = _luma_i64(crop)
    taps = kernels.gaussian_taps(sigma, scale_bits=kernels.EDGE_SCALE_BITS)
    smoothed = kernels.blur_separable_i64(luma, taps)
    gx, gy = kernels.sobel_i64(smoothed)
    mag2 = kernels.gradient_mag2(gx, gy)
    max_mag2 = float(mag2.max())
    if max_mag2 == 0.0:
        return EdgeMap(np.zeros(mag2.shape, dtype=bool))
    kept = kernels.nms_keep(gx, gy, mag2)
    t2_low = (low * low) * max_mag2
    t2_high = (high * high) * max_mag2
    weak = kept & (mag2 >= t2_low)
    strong = kept & (mag2 >= t2_high)
    return EdgeMap(kernels.hysteresis(weak, strong))
