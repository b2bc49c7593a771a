"""Editing sessions: an ordered chain of committed steps over a base image.

Each step's input image is the previous step's result, so long iterative
edits recycle outputs. Reverting moves a cursor; committing after a revert
truncates the abandoned branch (history is linear). Projects persist as a
directory with a manifest plus one PNG per layer.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
import uuid
from dataclasses import dataclass, field, replace

from spice import imageops
from spice.buffers import ContextMask, ImageBuffer
from spice.config import EditConfig
from spice.errors import ProjectError, ValidationError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StepInputs:
    original: ImageBuffer
    mask: ContextMask
    hinted: ImageBuffer


@dataclass(frozen=True)
class Provenance:
    backend_id: str = ""
    duration_s: float = 0.0
    continuation_digests: tuple[str, ...] = ()


@dataclass(frozen=True)
class EditStep:
    index: int
    inputs: StepInputs
    config: EditConfig
    result: ImageBuffer
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        if (self.result.height, self.result.width) != (
            self.inputs.original.height,
            self.inputs.original.width,
        ):
            raise ValidationError("step result dimensions must match its input image")


@dataclass
class EditSession:
    id: str
    base_image: ImageBuffer
    steps: list[EditStep] = field(default_factory=list)
    cursor: int = -1

    def active_image(self) -> ImageBuffer:
        return self.base_image if self.cursor < 0 else self.steps[self.cursor].result


def new_session(base_image: ImageBuffer, session_id: str | None = None) -> EditSession:
    return EditSession(id=session_id or uuid.uuid4().hex, base_image=base_image)


def commit_step(session: EditSession, step: EditStep) -> EditSession:
    """Append after the cursor, discarding any reverted-away steps."""
    active = session.active_image()
    if step.inputs.original != active:
        raise ValidationError("step input image does not match the session's active image")
    del session.steps[session.cursor + 1 :]
    index = session.cursor + 1
    session.steps.append(replace(step, index=index))
    session.cursor = index
    return session


def revert(session: EditSession, to_step: int) -> EditSession:
    """Move the cursor; -1 selects the base image. Nothing is deleted until
    the next commit."""
    if not -1 <= to_step < len(session.steps):
        raise ValidationError(
            f"revert target {to_step} out of range; session has {len(session.steps)} steps"
        )
    session.cursor = to_step
    return session


def _step_dir(index: int) -> str:
    return f"steps/{index:04d}"


def save_project(session: EditSession, path: str) -> None:
    """Write the session to a directory; the manifest lands last via an
    atomic rename so interrupted saves never look valid."""
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "base.png"), "wb") as f:
        f.write(imageops.encode_png(session.base_image))
    manifest_steps = []
    for step in session.steps:
        rel = _step_dir(step.index)
        step_dir = os.path.join(path, rel)
        os.makedirs(step_dir, exist_ok=True)
        files = {
            "mask": f"{rel}/mask.png",
            "hint": f"{rel}/hint.png",
            "result": f"{rel}/result.png",
        }
        with open(os.path.join(step_dir, "mask.png"), "wb") as f:
            f.write(imageops.encode_mask_png(step.inputs.mask.bits))
        with open(os.path.join(step_dir, "hint.png"), "wb") as f:
            f.write(imageops.encode_png(step.inputs.hinted))
        with open(os.path.join(step_dir, "result.png"), "wb") as f:
            f.write(imageops.encode_png(step.result))
        manifest_steps.append(
            {
                "index": step.index,
                "config": step.config.to_dict(),
                "files": files,
                "provenance": {
                    "backend_id": step.provenance.backend_id,
                    "duration_s": step.provenance.duration_s,
                    "continuation_digests": list(step.provenance.continuation_digests),
                },
            }
        )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "id": session.id,
        "base_image": "base.png",
        "cursor": session.cursor,
        "saved_at": time.time(),
        "steps": manifest_steps,
    }
    fd, tmp = tempfile.mkstemp(dir=path, prefix=".manifest-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2)
        os.replace(tmp, os.path.join(path, "manifest.json"))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_layer(path: str, rel: str) -> bytes:
    full = os.path.join(path, rel)
    if not os.path.exists(full):
        raise ProjectError(f"project layer missing: {rel}")
    with open(full, "rb") as f:
        return f.read()


def load_project(path: str) -> EditSession:
    manifest_path = os.path.join(path, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ProjectError(f"no manifest.json in {path}")
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProjectError(f"unreadable manifest: {exc}") from exc
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ProjectError(f"unsupported project schema_version {version!r}")

    base = imageops.decode_png(_read_layer(path, manifest["base_image"]))
    session = EditSession(id=manifest["id"], base_image=base)
    previous = base
    for entry in manifest["steps"]:
        files = entry["files"]
        mask = ContextMask(imageops.decode_mask_png(_read_layer(path, files["mask"])))
        hinted = imageops.decode_png(_read_layer(path, files["hint"]))
        result = imageops.decode_png(_read_layer(path, files["result"]))
        step = EditStep(
            index=int(entry["index"]),
            inputs=StepInputs(original=previous, mask=mask, hinted=hinted),
            config=EditConfig.from_dict(entry["config"]),
            result=result,
            provenance=Provenance(
                backend_id=entry["provenance"].get("backend_id", ""),
                duration_s=float(entry["provenance"].get("duration_s", 0.0)),
                continuation_digests=tuple(
                    entry["provenance"].get("continuation_digests", ())
                ),
            ),
        )
        session.steps.append(step)
        previous = result
    cursor = int(manifest.get("cursor", len(session.steps) - 1))
    if not -1 <= cursor < max(len(session.steps), 1) and cursor != -1:
        raise ProjectError(f"manifest cursor {cursor} out of range")
    session.cursor = min(cursor, len(session.steps) - 1)
    return session
