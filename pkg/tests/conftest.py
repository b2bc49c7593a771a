import numpy as np
import pytest

from spice.buffers import ContextMask, ImageBuffer


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def make_image(width, height, rng, channels=3):
    return ImageBuffer(rng.integers(0, 256, (height, width, channels), dtype=np.uint8))


def solid_image(width, height, color=(128, 128, 128)):
    return ImageBuffer.full(width, height, color)


def blob_mask(width, height, x0, y0, x1, y1, dots=()):
    """Rectangle blob plus optional square dots given as (x, y, side)."""
    bits = np.zeros((height, width), dtype=bool)
    bits[y0:y1, x0:x1] = True
    for (dx, dy, side) in dots:
        bits[dy : dy + side, dx : dx + side] = True
    return ContextMask(bits)


def rgba_patch(width, height, box, color, alpha=255):
    """Full-canvas RGBA raster with an opaque rectangle at box=(x0,y0,x1,y1)."""
    px = np.zeros((height, width, 4), dtype=np.uint8)
    x0, y0, x1, y1 = box
    px[y0:y1, x0:x1, :3] = np.asarray(color, dtype=np.uint8)
    px[y0:y1, x0:x1, 3] = alpha
    return ImageBuffer(px)
