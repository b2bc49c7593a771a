"""Edit-precision measurement and embedding-based scores.

Object properties come from a segmentation mask (produced externally): bbox
width/height, bbox center, rotation as the direction from the mask's center
of mass to the bbox center (+x right, +y up, degrees in (-180, 180]), hue of
the mean RGB, and aspect ratio. Percentage errors divide by the specified
value, except rotation (normalized by 360 degrees) and hue (normalized by
1.0), both wrapped to the nearest equivalent difference first.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass

import numpy as np

from spice import imageops
from spice.buffers import BinaryMask, ImageBuffer
from spice.errors import MaskError, MetricUndefined, ValidationError
from spice.maskops import tight_bbox

_ZERO_DIRECTION_NORM = 1e-9


@dataclass(frozen=True)
class ObjectProperties:
    width: float
    height: float
    center_x: float
    center_y: float
    rotation: float
    rotation_degenerate: bool
    hue: float
    hue_degenerate: bool
    aspect_ratio: float


@dataclass(frozen=True)
class PropertySpec:
    width: float
    height: float
    center_x: float
    center_y: float
    rotation: float
    hue: float
    aspect_ratio: float

    @classmethod
    def from_dict(cls, d: dict) -> "PropertySpec":
        try:
            return cls(**{k: float(d[k]) for k in (
                "width", "height", "center_x", "center_y", "rotation", "hue", "aspect_ratio"
            )})
        except KeyError as exc:
            raise ValidationError(f"property spec missing field {exc}") from exc


@dataclass(frozen=True)
class PropertyErrors:
    pct_width: float
    pct_height: float
    pct_x: float
    pct_y: float
    pct_rotation: float
    pct_color: float
    pct_aspect: float

    def to_dict(self) -> dict:
        return asdict(self)


def measure_object(seg_mask: BinaryMask, image: ImageBuffer) -> ObjectProperties:
    if (seg_mask.height, seg_mask.width) != (image.height, image.width):
        raise ValidationError("segmentation mask must match the image dimensions")
    if not seg_mask.any():
        raise MaskError("segmentation mask is empty")
    box = tight_bbox(seg_mask)
    center_x = (box.x0 + box.x1) / 2.0
    center_y = (box.y0 + box.y1) / 2.0

    ys, xs = np.nonzero(seg_mask.bits)
    centroid_x = float(xs.mean()) + 0.5
    centroid_y = float(ys.mean()) + 0.5

    # Direction from center of mass to bbox center, with image rows flipped
    # so +y points up.
    vx = center_x - centroid_x
    vy = -(center_y - centroid_y)
    degenerate = math.hypot(vx, vy) < 1e-9
    rotation = 0.0 if degenerate else wrap_degrees(math.degrees(math.atan2(vy, vx)))

    mean_rgb = image.pixels[ys, xs, :3].mean(axis=0) / 255.0
    hue, hue_degenerate = imageops.rgb_to_hsv_hue(mean_rgb)

    return ObjectProperties(
        width=float(box.width),
        height=float(box.height),
        center_x=center_x,
        center_y=center_y,
        rotation=rotation,
        rotation_degenerate=degenerate,
        hue=hue,
        hue_degenerate=hue_degenerate,
        aspect_ratio=box.width / box.height,
    )


def wrap_degrees(angle: float) -> float:
    """Wrap into (-180, 180]."""
    wrapped = angle % 360.0
    if wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def wrap_hue(delta: float) -> float:
    """Wrap a hue difference into (-0.5, 0.5]."""
    wrapped = delta % 1.0
    if wrapped > 0.5:
        wrapped -= 1.0
    return wrapped


def percentage_errors(measured: ObjectProperties, spec: PropertySpec) -> PropertyErrors:
    for name in ("width", "height", "center_x", "center_y", "aspect_ratio"):
        if getattr(spec, name) == 0:
            raise ValidationError(f"specified {name} must be non-zero (it is a denominator)")
    return PropertyErrors(
        pct_width=(measured.width - spec.width) / spec.width * 100.0,
        pct_height=(measured.height - spec.height) / spec.height * 100.0,
        pct_x=(measured.center_x - spec.center_x) / spec.center_x * 100.0,
        pct_y=(measured.center_y - spec.center_y) / spec.center_y * 100.0,
        pct_rotation=wrap_degrees(measured.rotation - spec.rotation) / 360.0 * 100.0,
        pct_color=wrap_hue(measured.hue - spec.hue) / 1.0 * 100.0,
        pct_aspect=(measured.aspect_ratio - spec.aspect_ratio) / spec.aspect_ratio * 100.0,
    )


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def clip_dir(
    src_img: ImageBuffer,
    edit_img: ImageBuffer,
    src_caption: str,
    tgt_caption: str,
    embedder,
) -> float:
    """Cosine between the caption-direction and image-direction embedding deltas."""
    text_dir = embedder.embed_text(tgt_caption).values - embedder.embed_text(src_caption).values
    image_dir = embedder.embed_image(edit_img).values - embedder.embed_image(src_img).values
    if np.linalg.norm(text_dir) < _ZERO_DIRECTION_NORM:
        raise MetricUndefined("caption direction is a zero vector")
    if np.linalg.norm(image_dir) < _ZERO_DIRECTION_NORM:
        raise MetricUndefined("image direction is a zero vector")
    return _cosine(text_dir, image_dir)


def clip_out(edit_img: ImageBuffer, tgt_caption: str, embedder) -> float:
    """Cosine between the edited image and the target caption embeddings."""
    return _cosine(embedder.embed_image(edit_img).values, embedder.embed_text(tgt_caption).values)


def _aggregate(values: list[float]) -> dict:
    n = len(values)
    if n == 0:
        return {"mean": None, "sd": None, "n": 0}
    mean = sum(values) / n
    if n == 1:
        return {"mean": mean, "sd": 0.0, "n": 1, "single_sample": True}
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return {"mean": mean, "sd": math.sqrt(var), "n": n}


def evaluate_cases(case_dir: str, embedder) -> dict:
    """Score every case subdirectory ({source,edited}.png + caption files).

    Per-case failures and undefined directions are reported and excluded from
    the aggregates; ordering is deterministic (by case name).
    """
    if not os.path.isdir(case_dir):
        raise ValidationError(f"case directory not found: {case_dir}")
    names = sorted(
        d for d in os.listdir(case_dir) if os.path.isdir(os.path.join(case_dir, d))
    )
    if not names:
        raise ValidationError(f"no cases found in {case_dir}")

    rows = []
    dirs, outs = [], []
    undefined = 0
    for name in names:
        row = {"case": name}
        try:
            root = os.path.join(case_dir, name)
            src = imageops.decode_png(_read(os.path.join(root, "source.png")))
            edit = imageops.decode_png(_read(os.path.join(root, "edited.png")))
            src_cap = _read_text(os.path.join(root, "source_caption.txt"))
            tgt_cap = _read_text(os.path.join(root, "target_caption.txt"))
        except Exception as exc:
            row["error"] = str(exc)
            rows.append(row)
            continue
        try:
            row["clip_dir"] = clip_dir(src, edit, src_cap, tgt_cap, embedder)
            dirs.append(row["clip_dir"])
        except MetricUndefined as exc:
            row["clip_dir"] = None
            row["undefined"] = str(exc)
            undefined += 1
        row["clip_out"] = clip_out(edit, tgt_cap, embedder)
        outs.append(row["clip_out"])
        rows.append(row)

    return {
        "cases": rows,
        "aggregates": {"clip_dir": _aggregate(dirs), "clip_out": _aggregate(outs)},
        "undefined_count": undefined,
        "errored": [r["case"] for r in rows if "error" in r],
    }


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read().strip()


def write_report(report: dict, path: str, csv_path: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(
                f, fieldnames=["case", "clip_dir", "clip_out", "undefined", "error"]
            )
            writer.writeheader()
            for row in report["cases"]:
                writer.writerow({k: row.get(k, "") for k in writer.fieldnames})
