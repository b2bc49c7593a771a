"""JSON/base64-PNG wire protocol for denoising and embedding services.

POST /v1/denoise
  {crop_png, mask_png, edge_png?, prompt, strength, stage, stage_steps,
   total_steps, seed, continuation_png?, continuation_digest?}
  -> {result_png, continuation_digest, backend_id}

POST /v1/embed
  {kind: "text"|"image", payload} -> {dim, values}

Rasters travel as base64 PNG; soft masks as 8-bit grayscale (k -> k/255);
digests are SHA-256 over width||height||channels||raw bytes, hex encoded.
"""

import base64

from spice import imageops
from spice.backends import (
    ContinuationState,
    DenoiseRequest,
    DenoiseResponse,
    MockDenoiseBackend,
    MockEmbedder,
)
from spice.buffers import ImageBuffer, SoftMask
from spice.errors import ContractViolation, SpiceError
from spice.hints import EdgeMap


def image_to_b64(image: ImageBuffer) -> str:
    return base64.b64encode(imageops.encode_png(image)).decode("ascii")


def image_from_b64(data: str) -> ImageBuffer:
    return imageops.decode_png(base64.b64decode(data))


def soft_mask_to_b64(soft: SoftMask) -> str:
    return base64.b64encode(imageops.encode_soft_mask_png(soft)).decode("ascii")


def soft_mask_from_b64(data: str) -> SoftMask:
    return SoftMask(imageops.decode_soft_mask_png(base64.b64decode(data)))


def edge_map_to_b64(edges: EdgeMap) -> str:
    return base64.b64encode(imageops.encode_mask_png(edges.bits)).decode("ascii")


def edge_map_from_b64(data: str) -> EdgeMap:
    return EdgeMap(imageops.decode_mask_png(base64.b64decode(data)))


def denoise_request_to_json(request: DenoiseRequest) -> dict:
    payload = {
        "crop_png": image_to_b64(request.crop),
        "mask_png": soft_mask_to_b64(request.soft_mask),
        "prompt": request.prompt,
        "strength": request.denoising_strength,
        "stage": request.stage,
        "stage_steps": request.stage_steps,
        "total_steps": request.total_steps,
        "seed": request.seed,
    }
    if request.edge_map is not None:
        payload["edge_png"] = edge_map_to_b64(request.edge_map)
    if request.continuation is not None:
        payload["continuation_png"] = image_to_b64(request.continuation.intermediate)
        payload["continuation_digest"] = request.continuation.digest
    return payload


def denoise_request_from_json(payload: dict) -> DenoiseRequest:
    try:
        edge = payload.get("edge_png")
        continuation_png = payload.get("continuation_png")
        continuation = None
        if continuation_png is not None:
            inter = image_from_b64(continuation_png)
            digest = payload.get("continuation_digest") or inter.digest()
            continuation = ContinuationState(intermediate=inter, digest=digest)
            continuation.verify()
        return DenoiseRequest(
            crop=image_from_b64(payload["crop_png"]),
            prompt=payload.get("prompt", ""),
            soft_mask=soft_mask_from_b64(payload["mask_png"]),
            edge_map=edge_map_from_b64(edge) if edge is not None else None,
            denoising_strength=float(payload["strength"]),
            stage_steps=int(payload["stage_steps"]),
            total_steps=int(payload["total_steps"]),
            stage=str(payload["stage"]),
            seed=int(payload["seed"]),
            continuation=continuation,
        )
    except KeyError as exc:
        raise ContractViolation(f"denoise request missing field {exc}") from exc


def denoise_response_to_json(response: DenoiseResponse) -> dict:
    return {
        "result_png": image_to_b64(response.result),
        "continuation_digest": response.continuation.digest,
        "backend_id": response.backend_id,
    }


def denoise_response_from_json(payload: dict) -> DenoiseResponse:
    try:
        result = image_from_b64(payload["result_png"])
        digest = payload["continuation_digest"]
        backend_id = payload["backend_id"]
    except KeyError as exc:
        raise ContractViolation(f"denoise response missing field {exc}") from exc
    continuation = ContinuationState(intermediate=result, digest=digest)
    continuation.verify()
    return DenoiseResponse(result=result, continuation=continuation, backend_id=backend_id)


def build_backend_service(backend=None, embedder=None):
    """A FastAPI app serving the wire protocol; defaults to mock semantics.

    Used as the loopback stub for differential testing and as a reference
    for real deployments.
    """
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    backend = backend or MockDenoiseBackend()
    embedder = embedder or MockEmbedder()
    app = FastAPI(title="spice denoise service")

    @app.post("/v1/denoise")
    async def denoise(request: Request):
        payload = await request.json()
        try:
            req = denoise_request_from_json(payload)
            resp = backend.denoise(req)
        except SpiceError as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return denoise_response_to_json(resp)

    @app.post("/v1/embed")
    async def embed(request: Request):
        payload = await request.json()
        kind = payload.get("kind")
        try:
            if kind == "text":
                vec = embedder.embed_text(payload["payload"])
            elif kind == "image":
                vec = embedder.embed_image(image_from_b64(payload["payload"]))
            else:
                return JSONResponse(
                    status_code=400, content={"error": f"unknown embed kind {kind!r}"}
                )
        except (SpiceError, KeyError) as exc:
            return JSONResponse(status_code=400, content={"error": str(exc)})
        return {"dim": vec.dim, "values": vec.values.tolist()}

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "backend_id": getattr(backend, "backend_id", "unknown")}

    return app
