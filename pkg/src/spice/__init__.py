"""Iterative image editing: context-dot masks, soft inpainting, color/edge
hints, two-stage denoising, sessions, and an edit-precision evaluation suite.

The denoising itself is an external service (or the built-in deterministic
mock); this package owns everything around it.
"""

from spice.buffers import (
    BinaryMask,
    BoundingBox,
    ContextMask,
    ImageBuffer,
    Resolution,
    SoftMask,
)
from spice.config import AblationFlags, EditConfig
from spice.session import EditSession, EditStep, commit_step, load_project, new_session, revert, save_project

__version__ = "0.1.0"

__all__ = [
    "AblationFlags",
    "BinaryMask",
    "BoundingBox",
    "ContextMask",
    "EditConfig",
    "EditSession",
    "EditStep",
    "ImageBuffer",
    "Resolution",
    "SoftMask",
    "commit_step",
    "load_project",
    "new_session",
    "revert",
    "save_project",
    "__version__",
]
