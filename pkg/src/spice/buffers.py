"""Raster domain types.

Pixel data is stored as 8-bit (uint8) and converted to [0, 1] float64 for
arithmetic; the quantization rule (ties round half away from zero) makes the
8-bit -> float -> 8-bit round trip the identity.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from spice import kernels
from spice.errors import ValidationError


def quantize(values: np.ndarray) -> np.ndarray:
    """[0,1] float array to uint8, ties rounded half away from zero."""
    return kernels.quantize_u8(values)


class ImageBuffer:
    """H x W x C uint8 raster, C = 3 (RGB) or 4 (RGBA). Immutable."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        pixels = np.ascontiguousarray(pixels)
        if pixels.dtype != np.uint8:
            raise ValidationError(f"image pixels must be uint8, got {pixels.dtype}")
        if pixels.ndim != 3 or pixels.shape[2] not in (3, 4):
            raise ValidationError(f"image must be HxWx3 or HxWx4, got shape {pixels.shape}")
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValidationError(f"image dimensions must be >= 1, got {pixels.shape[:2]}")
        pixels.setflags(write=False)
        self.pixels = pixels

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def size(self) -> tuple[int, int]:
        """(width, height)"""
        return (self.width, self.height)

    def to_float(self) -> np.ndarray:
        return self.pixels / 255.0

    @classmethod
    def from_float(cls, values: np.ndarray) -> "ImageBuffer":
        return cls(quantize(values))

    @classmethod
    def full(cls, width: int, height: int, color=(0, 0, 0)) -> "ImageBuffer":
        px = np.empty((height, width, len(color)), dtype=np.uint8)
        px[:] = np.asarray(color, dtype=np.uint8)
        return cls(px)

    def digest(self) -> str:
        """SHA-256 over width || height || channels || raw bytes, hex encoded."""
        h = hashlib.sha256()
        h.update(struct.pack(">III", self.width, self.height, self.channels))
        h.update(self.pixels.tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ImageBuffer)
            and self.pixels.shape == other.pixels.shape
            and np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"


class BinaryMask:
    """H x W boolean mask; True marks editable pixels. Immutable."""

    __slots__ = ("bits",)

    def __init__(self, bits: np.ndarray):
        bits = np.ascontiguousarray(bits)
        if bits.dtype != np.bool_:
            raise ValidationError(f"mask bits must be bool, got {bits.dtype}")
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ValidationError(f"mask must be non-empty HxW, got shape {bits.shape}")
        bits.setflags(write=False)
        self.bits = bits

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    def any(self) -> bool:
        return bool(self.bits.any())

    def area(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BinaryMask)
            and self.bits.shape == other.bits.shape
            and np.array_equal(self.bits, other.bits)
        )

    def __repr__(self):
        return f"{type(self).__name__}({self.width}x{self.height}, area={self.area()})"


class ContextMask(BinaryMask):
    """A binary edit mask that may additionally carry context dots."""


class SoftMask:
    """H x W float64 mask in [0, 1]; values sit on the k/255 grid so the
    grayscale-PNG wire round trip is lossless."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValidationError(f"soft mask must be non-empty HxW, got shape {values.shape}")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValidationError("soft mask values must lie in [0, 1]")
        values.setflags(write=False)
        self.values = values

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def to_u8(self) -> np.ndarray:
        return quantize(self.values)

    @classmethod
    def from_u8(cls, u8: np.ndarray) -> "SoftMask":
        return cls(np.ascontiguousarray(u8, dtype=np.uint8) / 255.0)

    @classmethod
    def snapped(cls, values: np.ndarray) -> "SoftMask":
        """Quantize arbitrary [0,1] values onto the k/255 grid."""
        return cls.from_u8(quantize(values))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SoftMask)
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"SoftMask({self.width}x{self.height})"


@dataclass(frozen=True)
class BoundingBox:
    """Half-open pixel box: [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValidationError(f"degenerate bounding box {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.x0 <= other.x0
            and self.y0 <= other.y0
            and self.x1 >= other.x1
            and self.y1 >= other.y1
        )

    def within(self, width: int, height: int) -> bool:
        return self.x1 <= width and self.y1 <= height


@dataclass(frozen=True)
class Resolution:
    """Model working-canvas size; diffusion backends want multiples of 8."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 64 or self.height < 64:
            raise ValidationError(f"resolution must be at least 64x64, got {self}")
        if self.width % 8 or self.height % 8:
            raise ValidationError(f"resolution sides must be multiples of 8, got {self}")

    @property
    def size(self) -> tuple[int, int]:
        return (self.width, self.height)


def crop_image(image: ImageBuffer, box: BoundingBox) -> ImageBuffer:
    if not box.within(image.width, image.height):
        raise ValidationError(f"crop box {box} exceeds image {image.width}x{image.height}")
    return ImageBuffer(image.pixels[box.y0 : box.y1, box.x0 : box.x1].copy())


def paste_image(image: ImageBuffer, box: BoundingBox, patch: ImageBuffer) -> ImageBuffer:
    if (patch.height, patch.width) != (box.height, box.width):
        raise ValidationError(f"patch {patch.size} does not fit box {box}")
    out = image.pixels.copy()
    out[box.y0 : box.y1, box.x0 : box.x1] = patch.pixels
    return ImageBuffer(out)


def crop_mask_bits(bits: np.ndarray, box: BoundingBox) -> np.ndarray:
    return bits[box.y0 : box.y1, box.x0 : box.x1].copy()
