"""The end-to-end edit step and hyperparameter sweeps.

One step runs: mask analysis -> bounding box (aspect-matched to the working
canvas) -> hint compositing at source resolution -> crop + resize to the
working canvas -> edge extraction -> two-stage denoise (canny stage early,
base stage late, linked by the continuation state) -> downsample back to the
crop -> soft-masked composite into the active image. Pixels whose source-side
soft mask is exactly zero come out byte-identical, which is what keeps
quality from degrading over long editing sessions.
"""

from __future__ import annotations

import concurrent.futures
import time
from dataclasses import dataclass, field

import numpy as np

from spice import imageops, maskops
from spice.backends import DenoiseRequest, STAGE_BASE, STAGE_CANNY
from spice.buffers import (
    BoundingBox,
    ContextMask,
    ImageBuffer,
    crop_image,
    paste_image,
)
from spice.config import EditConfig
from spice.errors import CancelledError, ValidationError
from spice.hints import canny_edges, composite_hints
from spice.imageops import ResampleFilter, pick_resize_filter
from spice.session import EditStep, Provenance, StepInputs

SWEEP_AXES = ("denoising_strength", "canny_steps", "context_scale")


@dataclass(frozen=True)
class StepSchedule:
    canny_steps: int
    base_steps: int

    @property
    def total(self) -> int:
        return self.canny_steps + self.base_steps


def validate_schedule(canny_steps: int, base_steps: int) -> StepSchedule:
    if canny_steps < 0 or base_steps < 0:
        raise ValidationError("step counts must be non-negative")
    if canny_steps + base_steps < 1:
        raise ValidationError("schedule needs at least one denoising step")
    return StepSchedule(canny_steps=canny_steps, base_steps=base_steps)


def _check_cancelled(cancel_check) -> None:
    if cancel_check is not None and cancel_check():
        raise CancelledError("edit step cancelled")


def run_edit_step(
    image: ImageBuffer,
    mask: ContextMask,
    hint_layers,
    config: EditConfig,
    backend,
    *,
    context_scale: float | None = None,
    cancel_check=None,
) -> EditStep:
    if (mask.height, mask.width) != (image.height, image.width):
        raise ValidationError(
            f"mask {mask.width}x{mask.height} does not match image {image.width}x{image.height}"
        )
    ablation = config.ablation
    if ablation.disable_canny_stage and config.canny_steps > 0:
        raise ValidationError(
            "inconsistent ablation: canny stage disabled but canny_steps > 0"
        )
    schedule = validate_schedule(config.canny_steps, config.base_steps)
    started = time.perf_counter()

    # Mask analysis. Disabling context dots models "no dots were drawn": they
    # stop contributing to both the bounding box and the inpainted region.
    analysis = maskops.classify_context_dots(mask, config.dot_area_max)
    include_dots = not ablation.disable_context_dots
    bbox_source = analysis.context_bits() if include_dots else analysis.edit_mask.bits
    analysis.context_bbox = maskops.tight_bbox(bbox_source)
    extended, clamped = maskops.extend_bbox(
        analysis.context_bbox, config.target_resolution, (image.width, image.height)
    )
    if context_scale is not None:
        extended = maskops.scale_bbox(
            extended, context_scale, analysis.context_bbox, (image.width, image.height)
        )
    analysis.extended_bbox = extended
    analysis.clamped = clamped

    soft_working, soft_source = maskops.make_soft_mask(
        analysis,
        config.target_resolution,
        config.blur_fraction,
        disable_blur=ablation.disable_blur,
        include_dots=include_dots,
    )
    _check_cancelled(cancel_check)

    hinted = image if ablation.disable_hints else composite_hints(image, hint_layers)

    crop = crop_image(hinted, extended)
    working_size = config.target_resolution.size
    filt = pick_resize_filter((crop.width, crop.height), working_size)
    working_crop = imageops.resize(crop, working_size, filt)

    run_canny = schedule.canny_steps > 0 and not ablation.disable_canny_stage
    edge_map = canny_edges(working_crop) if run_canny else None
    _check_cancelled(cancel_check)

    digests = []
    continuation = None
    backend_id = ""
    if run_canny:
        stage1 = backend.denoise(
            DenoiseRequest(
                crop=working_crop,
                prompt=config.prompt,
                soft_mask=soft_working,
                edge_map=edge_map,
                denoising_strength=config.denoising_strength,
                stage_steps=schedule.canny_steps,
                total_steps=schedule.total,
                stage=STAGE_CANNY,
                seed=config.seed,
            )
        )
        continuation = stage1.continuation
        backend_id = stage1.backend_id
        digests.append(stage1.continuation.digest)
        denoised = stage1.result
        _check_cancelled(cancel_check)
    else:
        denoised = working_crop

    if schedule.base_steps > 0:
        stage2 = backend.denoise(
            DenoiseRequest(
                crop=working_crop,
                prompt=config.prompt,
                soft_mask=soft_working,
                edge_map=None,
                denoising_strength=config.denoising_strength,
                stage_steps=schedule.base_steps,
                total_steps=schedule.total,
                stage=STAGE_BASE,
                seed=config.seed,
                continuation=continuation,
            )
        )
        backend_id = stage2.backend_id
        digests.append(stage2.continuation.digest)
        denoised = stage2.result
        _check_cancelled(cancel_check)

    downsampled = imageops.resize(
        denoised, (extended.width, extended.height), ResampleFilter.AREA_AVERAGE
    )
    original_crop = crop_image(image, extended)
    blended_crop = imageops.blend(original_crop, downsampled, soft_source)
    result = paste_image(image, extended, blended_crop)

    return EditStep(
        index=-1,
        inputs=StepInputs(original=image, mask=mask, hinted=hinted),
        config=config,
        result=result,
        provenance=Provenance(
            backend_id=backend_id,
            duration_s=time.perf_counter() - started,
            continuation_digests=tuple(digests),
        ),
    )


@dataclass
class SweepCell:
    value: float
    status: str
    step: EditStep | None = None
    error: str = ""
    crop_box: BoundingBox | None = None


@dataclass
class SweepResult:
    axis: str
    cells: list[SweepCell] = field(default_factory=list)
    contact_sheet: ImageBuffer | None = None

    def metadata(self) -> dict:
        return {
            "axis": self.axis,
            "values": [c.value for c in self.cells],
            "cells": [
                {"value": c.value, "status": c.status, "error": c.error}
                for c in self.cells
            ],
        }


def _sweep_config(config: EditConfig, axis: str, value: float) -> tuple[EditConfig, float | None]:
    if axis == "denoising_strength":
        return config.with_(denoising_strength=float(value)), None
    if axis == "canny_steps":
        steps = int(value)
        total = config.canny_steps + config.base_steps
        if not 0 <= steps <= total:
            raise ValidationError(f"canny_steps {steps} outside total schedule {total}")
        return config.with_(canny_steps=steps, base_steps=total - steps), None
    return config, float(value)


def run_sweep(
    image: ImageBuffer,
    mask: ContextMask,
    hint_layers,
    config: EditConfig,
    backend,
    axis: str,
    values,
    jobs: int = 1,
) -> SweepResult:
    """One edit step per value, all from the same seed; failed cells become
    placeholders instead of aborting the sweep."""
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    values = list(values)
    if len(values) < 2:
        raise ValidationError("a sweep needs at least two values")

    def run_cell(value) -> SweepCell:
        try:
            cell_config, scale = _sweep_config(config, axis, value)
            step = run_edit_step(
                image, mask, hint_layers, cell_config, backend, context_scale=scale
            )
            box = _result_crop_box(image, mask, cell_config, scale)
            return SweepCell(value=float(value), status="ok", step=step, crop_box=box)
        except Exception as exc:
            return SweepCell(value=float(value), status="error", error=str(exc))

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(run_cell, values))
    else:
        cells = [run_cell(v) for v in values]

    if not any(c.status == "ok" for c in cells):
        raise ValidationError(
            "every sweep cell failed; first error: " + cells[0].error
        )
    return SweepResult(axis=axis, cells=cells, contact_sheet=_contact_sheet(cells))


def _result_crop_box(image, mask, config, scale) -> BoundingBox:
    analysis = maskops.classify_context_dots(mask, config.dot_area_max)
    include_dots = not config.ablation.disable_context_dots
    bits = analysis.context_bits() if include_dots else analysis.edit_mask.bits
    tight = maskops.tight_bbox(bits)
    box, _ = maskops.extend_bbox(
        tight, config.target_resolution, (image.width, image.height)
    )
    if scale is not None:
        box = maskops.scale_bbox(box, scale, tight, (image.width, image.height))
    return box


_PLACEHOLDER_GRAY = 128


def _contact_sheet(cells) -> ImageBuffer:
    """Horizontal strip of the edited crops, order preserving the value list;
    failed cells render as flat gray placeholders."""
    crops = []
    for cell in cells:
        if cell.status == "ok":
            crops.append(crop_image(cell.step.result, cell.crop_box).pixels)
        else:
            crops.append(None)
    sizes = [c.shape for c in crops if c is not None]
    max_h = max(s[0] for s in sizes)
    channels = sizes[0][2]
    fallback_w = max(s[1] for s in sizes)
    columns = []
    for c in crops:
        if c is None:
            c = np.full((max_h, fallback_w, channels), _PLACEHOLDER_GRAY, dtype=np.uint8)
        elif c.shape[0] < max_h:
            pad = np.zeros((max_h - c.shape[0], c.shape[1], channels), dtype=np.uint8)
            c = np.concatenate([c, pad], axis=0)
        columns.append(c)
    return ImageBuffer(np.concatenate(columns, axis=1))
