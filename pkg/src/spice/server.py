"""HTTP API for sessions, steps, sweeps, and image retrieval.

One edit step may be in flight per session (concurrent submissions get 409);
failed backend calls leave the session untouched; every commit persists the
project directory via an atomic manifest rename. Steps run synchronously by
default, or detach with mode=async and a polling token.
"""

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from fastapi import FastAPI, Form, Request, UploadFile
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from spice import imageops, pipeline, presets, session as sessions
from spice.backends import MockDenoiseBackend
from spice.buffers import ContextMask, ImageBuffer
from spice.config import EditConfig
from spice.errors import (
    BackendError,
    BackendUnavailable,
    CancelledError,
    CodecError,
    MaskError,
    ProjectError,
    SpiceError,
    ValidationError,
)
from spice.hints import HintKind, HintLayer


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str, retryable: bool = False):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.retryable = retryable


def _bad_request(message: str) -> ApiException:
    return ApiException(400, "bad_request", message)


def _not_found(message: str) -> ApiException:
    return ApiException(404, "not_found", message)


def _conflict(message: str) -> ApiException:
    return ApiException(409, "conflict", message, retryable=True)


def _backend_unavailable(message: str) -> ApiException:
    return ApiException(503, "backend_unavailable", message, retryable=True)


@dataclass
class _SessionSlot:
    session: sessions.EditSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    cancel: threading.Event = field(default_factory=threading.Event)
    sweep_count: int = 0


@dataclass
class _PendingStep:
    status: str = "running"
    index: int | None = None
    error: str | None = None


class SessionStore:
    def __init__(self, project_root: str):
        self.project_root = project_root
        self._slots: dict[str, _SessionSlot] = {}
        self._registry_lock = threading.Lock()
        os.makedirs(project_root, exist_ok=True)

    def create(self, image: ImageBuffer) -> sessions.EditSession:
        sess = sessions.new_session(image)
        with self._registry_lock:
            self._slots[sess.id] = _SessionSlot(session=sess)
        self.persist(sess)
        return sess

    def slot(self, session_id: str) -> _SessionSlot:
        with self._registry_lock:
            slot = self._slots.get(session_id)
            if slot is None:
                path = os.path.join(self.project_root, session_id)
                if os.path.isdir(path):
                    try:
                        sess = sessions.load_project(path)
                    except ProjectError as exc:
                        raise _not_found(f"session {session_id} unloadable: {exc}")
                    slot = _SessionSlot(session=sess)
                    self._slots[session_id] = slot
                else:
                    raise _not_found(f"no session {session_id}")
            return slot

    def persist(self, sess: sessions.EditSession) -> None:
        sessions.save_project(sess, os.path.join(self.project_root, sess.id))

    def session_dir(self, session_id: str) -> str:
        return os.path.join(self.project_root, session_id)


def _decode_config(config_json: str) -> EditConfig:
    try:
        payload = json.loads(config_json) if config_json else {}
    except json.JSONDecodeError as exc:
        raise _bad_request(f"config is not valid JSON: {exc}")
    try:
        return EditConfig.from_dict(payload)
    except (ValidationError, TypeError) as exc:
        raise _bad_request(str(exc))


async def _decode_hints(files: list[UploadFile], meta_json: str, config: EditConfig):
    try:
        meta = json.loads(meta_json) if meta_json else []
    except json.JSONDecodeError as exc:
        raise _bad_request(f"hints_meta is not valid JSON: {exc}")
    layers = []
    for i, upload in enumerate(files):
        data = await upload.read()
        try:
            raster = imageops.decode_png(data)
        except CodecError as exc:
            raise _bad_request(f"hint {i}: {exc}")
        entry = meta[i] if i < len(meta) else {}
        kind = HintKind(entry.get("kind", HintKind.COLOR_PATCH.value))
        default_opacity = 1.0 if kind is HintKind.REFERENCE_PASTE else config.patch_opacity
        opacity = float(entry.get("opacity", default_opacity))
        try:
            layers.append(HintLayer(kind=kind, raster=raster, opacity=opacity))
        except ValidationError as exc:
            raise _bad_request(f"hint {i}: {exc}")
    return layers


def _step_summary(session_id: str, step) -> dict:
    base = f"/v1/sessions/{session_id}/steps/{step.index}"
    return {
        "index": step.index,
        "config": step.config.to_dict(),
        "result_url": f"{base}/result.png",
        "mask_url": f"{base}/mask.png",
        "hint_url": f"{base}/hint.png",
        "thumbnail_url": f"{base}/result.png",
        "provenance": {
            "backend_id": step.provenance.backend_id,
            "duration_s": step.provenance.duration_s,
            "continuation_digests": list(step.provenance.continuation_digests),
        },
    }


def create_app(
    project_root: str,
    backend=None,
    embedder=None,
    max_parallel_steps: int = 4,
) -> FastAPI:
    backend = backend or MockDenoiseBackend()
    store = SessionStore(project_root)
    executor = ThreadPoolExecutor(max_workers=max_parallel_steps)
    pending: dict[str, _PendingStep] = {}

    app = FastAPI(title="spice session server")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ApiException)
    async def _api_error(_request: Request, exc: ApiException):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "message": exc.message, "retryable": exc.retryable},
        )

    @app.exception_handler(SpiceError)
    async def _spice_error(_request: Request, exc: SpiceError):
        return await _api_error(_request, _translate(exc))

    def _translate(exc: SpiceError) -> ApiException:
        if isinstance(exc, BackendUnavailable):
            return _backend_unavailable(str(exc))
        if isinstance(exc, (ValidationError, MaskError, CodecError)):
            return _bad_request(str(exc))
        if isinstance(exc, BackendError):
            return _backend_unavailable(str(exc))
        return ApiException(500, "internal", str(exc))

    @app.get("/v1/health")
    async def health():
        return {
            "status": "ok",
            "backend_id": getattr(backend, "backend_id", "unknown"),
        }

    @app.get("/v1/presets")
    async def get_presets():
        return {"presets": presets.concrete_presets()}

    @app.post("/v1/sessions", status_code=201)
    async def create_session(image: UploadFile):
        data = await image.read()
        try:
            decoded = imageops.decode_png(data)
        except CodecError as exc:
            raise _bad_request(str(exc))
        sess = store.create(decoded)
        return {"session_id": sess.id}

    @app.get("/v1/sessions/{session_id}")
    async def get_session(session_id: str):
        slot = store.slot(session_id)
        sess = slot.session
        return {
            "id": sess.id,
            "width": sess.base_image.width,
            "height": sess.base_image.height,
            "cursor": sess.cursor,
            "base_url": f"/v1/sessions/{sess.id}/base.png",
            "active_url": (
                f"/v1/sessions/{sess.id}/base.png"
                if sess.cursor < 0
                else f"/v1/sessions/{sess.id}/steps/{sess.cursor}/result.png"
            ),
            "steps": [_step_summary(sess.id, step) for step in sess.steps],
        }

    def _run_and_commit(slot: _SessionSlot, mask, layers, config) -> int:
        sess = slot.session
        step = pipeline.run_edit_step(
            sess.active_image(),
            mask,
            layers,
            config,
            backend,
            cancel_check=slot.cancel.is_set,
        )
        sessions.commit_step(sess, step)
        store.persist(sess)
        return sess.cursor

    @app.post("/v1/sessions/{session_id}/steps")
    async def post_step(
        session_id: str,
        mask: UploadFile,
        hints: list[UploadFile] = [],
        config: str = Form(""),
        hints_meta: str = Form(""),
        mode: str = Form("sync"),
    ):
        slot = store.slot(session_id)
        cfg = _decode_config(config)
        mask_data = await mask.read()
        try:
            mask_bits = imageops.decode_mask_png(mask_data)
        except CodecError as exc:
            raise _bad_request(str(exc))
        layers = await _decode_hints(hints, hints_meta, cfg)

        if not slot.lock.acquire(blocking=False):
            raise _conflict("a step is already in flight for this session")
        slot.cancel.clear()

        def run_locked() -> int:
            try:
                sess = slot.session
                context = ContextMask(mask_bits)
                if (context.height, context.width) != (
                    sess.active_image().height,
                    sess.active_image().width,
                ):
                    raise ValidationError("mask dimensions do not match the active image")
                return _run_and_commit(slot, context, layers, cfg)
            finally:
                slot.lock.release()

        if mode == "async":
            token = uuid.uuid4().hex
            pending[token] = _PendingStep()

            def job():
                try:
                    index = run_locked()
                    pending[token].index = index
                    pending[token].status = "done"
                except CancelledError as exc:
                    pending[token].status = "cancelled"
                    pending[token].error = str(exc)
                except Exception as exc:
                    pending[token].status = "error"
                    pending[token].error = str(exc)

            executor.submit(job)
            return JSONResponse(
                status_code=202,
                content={"token": token, "poll_url": f"/v1/sessions/{session_id}/pending/{token}"},
            )

        try:
            index = await run_in_threadpool(run_locked)
        except CancelledError as exc:
            raise _conflict(str(exc))
        return _step_summary(session_id, slot.session.steps[index])

    @app.get("/v1/sessions/{session_id}/pending/{token}")
    async def poll_step(session_id: str, token: str):
        state = pending.get(token)
        if state is None:
            raise _not_found(f"no pending step {token}")
        body = {"status": state.status}
        if state.index is not None:
            body["index"] = state.index
            body["step"] = _step_summary(session_id, store.slot(session_id).session.steps[state.index])
        if state.error:
            body["error"] = state.error
        return body

    @app.post("/v1/sessions/{session_id}/cancel")
    async def cancel_step(session_id: str):
        slot = store.slot(session_id)
        slot.cancel.set()
        return {"cancelled": True}

    @app.post("/v1/sessions/{session_id}/revert")
    async def revert_session(session_id: str, body: dict):
        slot = store.slot(session_id)
        if "to_step" not in body:
            raise _bad_request("body must contain to_step")
        try:
            sessions.revert(slot.session, int(body["to_step"]))
        except ValidationError as exc:
            raise _bad_request(str(exc))
        store.persist(slot.session)
        return {"cursor": slot.session.cursor}

    @app.get("/v1/sessions/{session_id}/base.png")
    async def get_base(session_id: str):
        slot = store.slot(session_id)
        return Response(
            content=imageops.encode_png(slot.session.base_image), media_type="image/png"
        )

    @app.get("/v1/sessions/{session_id}/steps/{index}/{kind}.png")
    async def get_step_image(session_id: str, index: int, kind: str):
        slot = store.slot(session_id)
        steps = slot.session.steps
        if not 0 <= index < len(steps):
            raise _not_found(f"no step {index}")
        step = steps[index]
        if kind == "result":
            payload = imageops.encode_png(step.result)
        elif kind == "hint":
            payload = imageops.encode_png(step.inputs.hinted)
        elif kind == "mask":
            payload = imageops.encode_mask_png(step.inputs.mask.bits)
        else:
            raise _not_found(f"no image kind {kind!r}")
        return Response(content=payload, media_type="image/png")

    @app.post("/v1/sessions/{session_id}/sweeps")
    async def post_sweep(
        session_id: str,
        mask: UploadFile,
        hints: list[UploadFile] = [],
        config: str = Form(""),
        hints_meta: str = Form(""),
        axis: str = Form(...),
        values: str = Form(...),
    ):
        slot = store.slot(session_id)
        cfg = _decode_config(config)
        try:
            value_list = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise _bad_request(f"bad sweep values: {exc}")
        mask_bits = imageops.decode_mask_png(await mask.read())
        layers = await _decode_hints(hints, hints_meta, cfg)

        if not slot.lock.acquire(blocking=False):
            raise _conflict("a step is already in flight for this session")

        def run_sweep_locked():
            try:
                return pipeline.run_sweep(
                    slot.session.active_image(),
                    ContextMask(mask_bits),
                    layers,
                    cfg,
                    backend,
                    axis,
                    value_list,
                )
            finally:
                slot.lock.release()

        result = await run_in_threadpool(run_sweep_locked)

        sweep_index = slot.sweep_count
        slot.sweep_count += 1
        sweep_dir = os.path.join(store.session_dir(session_id), "sweeps", f"{sweep_index:03d}")
        os.makedirs(sweep_dir, exist_ok=True)
        with open(os.path.join(sweep_dir, "contact_sheet.png"), "wb") as f:
            f.write(imageops.encode_png(result.contact_sheet))
        with open(os.path.join(sweep_dir, "sweep.json"), "w", encoding="utf-8") as f:
            json.dump(result.metadata(), f, indent=2)
        cells = []
        for i, cell in enumerate(result.cells):
            entry = {"value": cell.value, "status": cell.status}
            if cell.status == "ok":
                cell_path = os.path.join(sweep_dir, f"cell_{i:02d}.png")
                with open(cell_path, "wb") as f:
                    f.write(imageops.encode_png(cell.step.result))
                entry["image_url"] = (
                    f"/v1/sessions/{session_id}/sweeps/{sweep_index}/cell_{i:02d}.png"
                )
            else:
                entry["error"] = cell.error
            cells.append(entry)
        return {
            "axis": axis,
            "cells": cells,
            "contact_sheet_url": (
                f"/v1/sessions/{session_id}/sweeps/{sweep_index}/contact_sheet.png"
            ),
        }

    @app.get("/v1/sessions/{session_id}/sweeps/{sweep_index}/{name}")
    async def get_sweep_file(session_id: str, sweep_index: int, name: str):
        if "/" in name or ".." in name or not name.endswith(".png"):
            raise _not_found("no such sweep file")
        path = os.path.join(
            store.session_dir(session_id), "sweeps", f"{sweep_index:03d}", name
        )
        if not os.path.exists(path):
            raise _not_found("no such sweep file")
        with open(path, "rb") as f:
            return Response(content=f.read(), media_type="image/png")

    return app
