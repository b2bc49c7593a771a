"""Mask analysis: context-dot classification, bounding boxes, soft masks.

Context dots are tiny connected components the user drops at opposite corners
of the region they want the model to see; they stretch the processing crop
without materially enlarging the edited area. Components at most dot_area_max
pixels are dots, everything else is edit region; a mask of only dots edits
nothing and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from spice import imageops
from spice.buffers import BinaryMask, BoundingBox, ContextMask, Resolution, SoftMask, crop_mask_bits
from spice.errors import MaskError, ValidationError

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class Dot:
    centroid_x: float
    centroid_y: float
    area: int


@dataclass
class ContextAnalysis:
    edit_mask: BinaryMask
    dots: list[Dot] = field(default_factory=list)
    dot_bits: np.ndarray | None = None
    context_bbox: BoundingBox | None = None
    extended_bbox: BoundingBox | None = None
    clamped: bool = False

    def context_bits(self) -> np.ndarray:
        if self.dot_bits is None:
            return self.edit_mask.bits
        return self.edit_mask.bits | self.dot_bits


def classify_context_dots(mask: ContextMask, dot_area_max: int) -> ContextAnalysis:
    """Split an annotated mask into edit components and context dots by
    8-connected component area."""
    bits = mask.bits
    if not bits.any():
        raise MaskError("mask is empty; nothing to edit")
    labels, count = ndimage.label(bits, structure=_EIGHT_CONNECTED)
    areas = np.bincount(labels.ravel())
    dot_labels = [
        lbl for lbl in range(1, count + 1) if areas[lbl] <= dot_area_max
    ]
    dot_bits = np.isin(labels, dot_labels) & bits
    edit_bits = bits & ~dot_bits
    if not edit_bits.any():
        raise MaskError(
            "no edit region: every component is small enough to be a context dot"
        )
    dots = []
    for lbl in dot_labels:
        ys, xs = np.nonzero(labels == lbl)
        dots.append(
            Dot(
                centroid_x=float(xs.mean()) + 0.5,
                centroid_y=float(ys.mean()) + 0.5,
                area=int(areas[lbl]),
            )
        )
    return ContextAnalysis(edit_mask=BinaryMask(edit_bits), dots=dots, dot_bits=dot_bits)


def tight_bbox(mask) -> BoundingBox:
    """Minimal box over all foreground pixels (dots included)."""
    bits = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(bits.any(axis=1))
    cols = np.flatnonzero(bits.any(axis=0))
    if rows.size == 0:
        raise MaskError("cannot take the bounding box of an empty mask")
    return BoundingBox(
        x0=int(cols[0]), y0=int(rows[0]), x1=int(cols[-1]) + 1, y1=int(rows[-1]) + 1
    )


def extend_bbox(
    bbox: BoundingBox, target: Resolution, image_dims: tuple[int, int]
) -> tuple[BoundingBox, bool]:
    """Grow one side of the box so its aspect matches the target resolution.

    All arithmetic is exact integer math: the deficient side grows to
    ceil(other * target_aspect), padding splits evenly with the odd pixel on
    the right/bottom, overflowing boxes shift inward, and boxes wider/taller
    than the image clamp to the full dimension (clamped=True, accepting the
    aspect distortion). The result always contains the input box.
    """
    img_w, img_h = image_dims
    if not bbox.within(img_w, img_h):
        raise ValidationError(f"bounding box {bbox} exceeds image {img_w}x{img_h}")
    tw, th = target.width, target.height
    w, h = bbox.width, bbox.height

    # aspect(bbox) < aspect(target)  <=>  w * th < tw * h, exactly.
    if w * th < tw * h:
        new_w = -(-(h * tw) // th)
        new_h = h
    else:
        new_w = w
        new_h = -(-(w * th) // tw)

    x0, x1, clamped_x = _pad_axis(bbox.x0, bbox.x1, new_w, img_w)
    y0, y1, clamped_y = _pad_axis(bbox.y0, bbox.y1, new_h, img_h)
    return BoundingBox(x0=x0, y0=y0, x1=x1, y1=y1), clamped_x or clamped_y


def aspect_error(box: BoundingBox, target: Resolution) -> float:
    """Aspect mismatch against the target, measured in the orientation where
    the target aspect is at most 1.

    In that orientation the ceil-based single-side extension provably stays
    within 1/min(box width, box height); the raw width/height mismatch has no
    such discretization bound for wide targets (growing the height of a
    too-wide box by one pixel moves width/height by nearly aspect^2/width).
    """
    if target.width >= target.height:
        return abs(box.height / box.width - target.height / target.width)
    return abs(box.width / box.height - target.width / target.height)


def _pad_axis(lo: int, hi: int, new_len: int, limit: int) -> tuple[int, int, bool]:
    if new_len >= limit:
        return 0, limit, new_len > limit
    pad = new_len - (hi - lo)
    before = pad // 2
    lo -= before
    hi += pad - before
    if lo < 0:
        hi -= lo
        lo = 0
    elif hi > limit:
        lo -= hi - limit
        hi = limit
    return lo, hi, False


def scale_bbox(
    bbox: BoundingBox, factor: float, must_contain: BoundingBox, image_dims: tuple[int, int]
) -> BoundingBox:
    """Scale a box about its center (context-size sweeps), keeping the edit
    region inside and clamping to the image."""
    if factor <= 0:
        raise ValidationError(f"context scale factor must be positive, got {factor}")
    img_w, img_h = image_dims
    new_w = max(1, int(round(bbox.width * factor)))
    new_h = max(1, int(round(bbox.height * factor)))
    cx2 = bbox.x0 + bbox.x1
    cy2 = bbox.y0 + bbox.y1
    x0 = (cx2 - new_w) // 2
    y0 = (cy2 - new_h) // 2
    x1, y1 = x0 + new_w, y0 + new_h
    x0 = min(x0, must_contain.x0)
    y0 = min(y0, must_contain.y0)
    x1 = max(x1, must_contain.x1)
    y1 = max(y1, must_contain.y1)
    return BoundingBox(
        x0=max(0, x0), y0=max(0, y0), x1=min(img_w, x1), y1=min(img_h, y1)
    )


def make_soft_mask(
    analysis: ContextAnalysis,
    working: Resolution,
    blur_fraction: float,
    *,
    disable_blur: bool = False,
    include_dots: bool = True,
) -> tuple[SoftMask, SoftMask]:
    """Produce the (working-resolution, source-bbox-resolution) soft masks.

    The binary mask is cropped to the extended box, nearest-resized to the
    working canvas, and blurred with sigma = blur_fraction * min(working dims);
    the source-side mask is blurred at the crop's own scale
    (sigma = blur_fraction * min(crop dims)) so both transitions cover the
    same fraction of their canvas. Values are snapped to the k/255 grid,
    matching their grayscale-PNG wire encoding.
    """
    if analysis.extended_bbox is None:
        raise ValidationError("extended bounding box has not been computed")
    box = analysis.extended_bbox
    bits = analysis.context_bits() if include_dots else analysis.edit_mask.bits
    crop = crop_mask_bits(bits, box)
    working_bits = imageops.resize_mask(crop, working)
    if disable_blur:
        return (
            SoftMask(working_bits.astype(np.float64)),
            SoftMask(crop.astype(np.float64)),
        )
    sigma_w = blur_fraction * min(working.width, working.height)
    sigma_s = blur_fraction * min(box.width, box.height)
    soft_working = imageops.gaussian_blur(working_bits.astype(np.float64), sigma_w)
    soft_source = imageops.gaussian_blur(crop.astype(np.float64), sigma_s)
    return SoftMask.snapped(soft_working.values), SoftMask.snapped(soft_source.values)
