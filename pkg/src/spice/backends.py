"""Denoising and embedding backends.

The mock backend is a deterministic stand-in for a diffusion server: it mixes
the start image toward a counter-based noise field by
w = strength * stage_steps / total_steps, respects the soft mask, and pins
edge pixels during the canny stage. It exists so the whole pipeline can be
verified bit-exactly at desk scale; it does not pretend to be a sampler.

Continuation state crosses the protocol boundary as a decoded intermediate
image plus a content digest (latents are not portable between heterogeneous
backends; real servers may key internal caches on the digest).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from spice import kernels
from spice.buffers import ImageBuffer, SoftMask, quantize
from spice.errors import BackendUnavailable, ContractViolation, ValidationError
from spice.hints import EdgeMap

STAGE_CANNY = "canny"
STAGE_BASE = "base"
STAGE_INDEX = {STAGE_CANNY: 0, STAGE_BASE: 1}

EMBED_DIM = 64


@dataclass(frozen=True)
class ContinuationState:
    intermediate: ImageBuffer
    digest: str

    @classmethod
    def from_image(cls, image: ImageBuffer) -> "ContinuationState":
        return cls(intermediate=image, digest=image.digest())

    def verify(self) -> None:
        if self.intermediate.digest() != self.digest:
            raise ContractViolation("continuation digest does not match its image")


@dataclass(frozen=True)
class DenoiseRequest:
    crop: ImageBuffer
    prompt: str
    soft_mask: SoftMask
    edge_map: EdgeMap | None
    denoising_strength: float
    stage_steps: int
    total_steps: int
    stage: str
    seed: int
    continuation: ContinuationState | None = None

    def __post_init__(self):
        if self.stage not in STAGE_INDEX:
            raise ValidationError(f"unknown stage {self.stage!r}")
        if (self.edge_map is not None) != (self.stage == STAGE_CANNY):
            raise ValidationError("edge map must be present exactly for the canny stage")
        if self.stage_steps < 1:
            raise ValidationError("stage_steps must be at least 1")
        if self.total_steps < self.stage_steps:
            raise ValidationError("total_steps must be at least stage_steps")
        if not 0.0 <= self.denoising_strength <= 1.0:
            raise ValidationError("denoising_strength must lie in [0,1]")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        dims = (self.crop.height, self.crop.width)
        if (self.soft_mask.height, self.soft_mask.width) != dims:
            raise ValidationError("soft mask dimensions must match the crop")
        if self.edge_map is not None and (self.edge_map.height, self.edge_map.width) != dims:
            raise ValidationError("edge map dimensions must match the crop")
        if self.continuation is not None:
            inter = self.continuation.intermediate
            if (inter.height, inter.width, inter.channels) != (*dims, self.crop.channels):
                raise ValidationError("continuation image dimensions must match the crop")


@dataclass(frozen=True)
class DenoiseResponse:
    result: ImageBuffer
    continuation: ContinuationState
    backend_id: str


def mock_denoise_field(request: DenoiseRequest) -> np.ndarray:
    """The mock's pre-quantization float result in [0,1]."""
    start_img = (
        request.continuation.intermediate if request.continuation is not None else request.crop
    )
    start = start_img.to_float()
    h, w, c = start.shape
    weight = request.denoising_strength * request.stage_steps / request.total_steps
    noise = kernels.noise_field(request.seed, STAGE_INDEX[request.stage], h, w, c)
    blended = (1.0 - weight) * start + weight * noise
    soft = request.soft_mask.values[:, :, None]
    return soft * blended + (1.0 - soft) * start


class MockDenoiseBackend:
    """Deterministic local backend implementing the contract exactly."""

    backend_id = "mock"

    def denoise(self, request: DenoiseRequest) -> DenoiseResponse:
        start_img = (
            request.continuation.intermediate if request.continuation is not None else request.crop
        )
        result = quantize(mock_denoise_field(request))
        soft = request.soft_mask.values
        # Exactly-zero mask pixels keep their start bytes (quantization-proof).
        zero = soft == 0.0
        if zero.any():
            result[zero] = start_img.pixels[zero]
        if request.stage == STAGE_CANNY:
            edges = request.edge_map.bits
            result[edges] = start_img.pixels[edges]
        image = ImageBuffer(result)
        return DenoiseResponse(
            result=image,
            continuation=ContinuationState.from_image(image),
            backend_id=self.backend_id,
        )


class HttpDenoiseBackend:
    """Client for a denoising service speaking the JSON/base64-PNG protocol."""

    def __init__(self, url: str, timeout: float = 120.0, client=None):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._client = client

    @property
    def backend_id(self) -> str:
        return f"http:{self.url}"

    def _post(self, path: str, payload: dict) -> dict:
        import httpx

        client = self._client
        try:
            if client is None:
                resp = httpx.post(self.url + path, json=payload, timeout=self.timeout)
            else:
                resp = client.post(self.url + path, json=payload)
        except Exception as exc:
            raise BackendUnavailable(f"denoise service unreachable at {self.url}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"denoise service returned HTTP {resp.status_code}: {resp.text[:200]}"
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise ContractViolation(f"non-JSON response from denoise service: {exc}") from exc

    def denoise(self, request: DenoiseRequest) -> DenoiseResponse:
        from spice import wire

        payload = wire.denoise_request_to_json(request)
        body = self._post("/v1/denoise", payload)
        response = wire.denoise_response_from_json(body)
        if (response.result.height, response.result.width) != (
            request.crop.height,
            request.crop.width,
        ):
            raise ContractViolation(
                f"backend returned {response.result.size}, expected {request.crop.size}"
            )
        return response


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray

    def __post_init__(self):
        norm = float(np.linalg.norm(self.values))
        if abs(norm - 1.0) > 1e-6:
            raise ValidationError(f"embedding must be unit-norm, got |v| = {norm}")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def _content_hash_u64(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big")


def text_content_hash(text: str) -> int:
    return _content_hash_u64(text.encode("utf-8"))


def image_content_hash(image: ImageBuffer) -> int:
    import struct

    header = struct.pack(">III", image.width, image.height, image.channels)
    return _content_hash_u64(header + image.pixels.tobytes())


def _mock_embedding(content_hash: int, dim: int = EMBED_DIM) -> EmbeddingVector:
    comps = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        z = kernels.splitmix64_finalize(content_hash ^ i)
        comps[i] = kernels.u64_to_unit(z) - 0.5
    norm = float(np.linalg.norm(comps))
    return EmbeddingVector(values=comps / norm)


class MockEmbedder:
    """Hash-seeded unit vectors: deterministic, input-sensitive, dimension 64."""

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValidationError("cannot embed empty text")
        return _mock_embedding(text_content_hash(text))

    def embed_image(self, image: ImageBuffer) -> EmbeddingVector:
        return _mock_embedding(image_content_hash(image))


class HttpEmbedder:
    """Client for an embedding service (POST /v1/embed)."""

    def __init__(self, url: str, timeout: float = 60.0, client=None):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self._client = client

    def _post(self, payload: dict) -> EmbeddingVector:
        import httpx

        client = self._client
        try:
            if client is None:
                resp = httpx.post(self.url + "/v1/embed", json=payload, timeout=self.timeout)
            else:
                resp = client.post(self.url + "/v1/embed", json=payload)
        except Exception as exc:
            raise BackendUnavailable(f"embedding service unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"embedding service returned HTTP {resp.status_code}")
        body = resp.json()
        values = np.asarray(body["values"], dtype=np.float64)
        if values.shape != (int(body["dim"]),):
            raise ContractViolation("embedding dim does not match its values")
        return EmbeddingVector(values=values)

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text:
            raise ValidationError("cannot embed empty text")
        return self._post({"kind": "text", "payload": text})

    def embed_image(self, image: ImageBuffer) -> EmbeddingVector:
        from spice import wire

        return self._post({"kind": "image", "payload": wire.image_to_b64(image)})


def resolve_denoise_backend(spec: str):
    """'mock' or an http(s) URL."""
    if spec == "mock":
        return MockDenoiseBackend()
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpDenoiseBackend(spec)
    raise ValidationError(f"unknown backend {spec!r}; expected 'mock' or an http(s) URL")


def resolve_embedder(spec: str):
    if spec == "mock":
        return MockEmbedder()
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpEmbedder(spec)
    raise ValidationError(f"unknown embedder {spec!r}; expected 'mock' or an http(s) URL")
