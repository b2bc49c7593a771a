import numpy as np
import pytest
from fastapi.testclient import TestClient

from spice import wire
from spice.backends import (
    ContinuationState,
    DenoiseRequest,
    HttpDenoiseBackend,
    HttpEmbedder,
    MockDenoiseBackend,
    MockEmbedder,
    STAGE_BASE,
    STAGE_CANNY,
    mock_denoise_field,
    resolve_denoise_backend,
)
from spice.buffers import SoftMask
from spice.errors import BackendUnavailable, ValidationError
from spice.hints import EdgeMap

import oracles
from conftest import make_image, solid_image


def full_soft(w, h, value=1.0):
    return SoftMask(np.full((h, w), value))


def base_request(crop, soft=None, stage=STAGE_BASE, edge=None, strength=0.9,
                 stage_steps=25, total_steps=30, seed=0, continuation=None):
    return DenoiseRequest(
        crop=crop,
        prompt="test",
        soft_mask=soft or full_soft(crop.width, crop.height),
        edge_map=edge,
        denoising_strength=strength,
        stage_steps=stage_steps,
        total_steps=total_steps,
        stage=stage,
        seed=seed,
        continuation=continuation,
    )


class TestRequestValidation:
    def test_canny_requires_edge_map(self, rng):
        crop = make_image(8, 8, rng)
        with pytest.raises(ValidationError):
            base_request(crop, stage=STAGE_CANNY, edge=None, stage_steps=5)

    def test_base_rejects_edge_map(self, rng):
        crop = make_image(8, 8, rng)
        edge = EdgeMap(np.zeros((8, 8), dtype=bool))
        with pytest.raises(ValidationError):
            base_request(crop, stage=STAGE_BASE, edge=edge)

    def test_dims_must_match(self, rng):
        crop = make_image(8, 8, rng)
        with pytest.raises(ValidationError):
            base_request(crop, soft=full_soft(9, 8))

    def test_stage_steps_bounds(self, rng):
        crop = make_image(8, 8, rng)
        with pytest.raises(ValidationError):
            base_request(crop, stage_steps=0)
        with pytest.raises(ValidationError):
            base_request(crop, stage_steps=31, total_steps=30)


class TestMockDenoise:
    def test_strength_zero_is_identity(self, rng):
        crop = make_image(12, 12, rng)
        resp = MockDenoiseBackend().denoise(base_request(crop, strength=0.0))
        assert np.array_equal(resp.result.pixels, crop.pixels)

    def test_full_strength_full_mask_is_pure_noise(self, rng):
        crop = make_image(6, 7, rng)
        resp = MockDenoiseBackend().denoise(
            base_request(crop, strength=1.0, stage_steps=30, total_steps=30, seed=42)
        )
        expected = np.empty((7, 6, 3), dtype=np.uint8)
        for y in range(7):
            for x in range(6):
                for c in range(3):
                    expected[y, x, c] = oracles.quantize_scalar(
                        oracles.mock_noise(42, 1, x, y, c)
                    )
        assert np.array_equal(resp.result.pixels, expected)

    def test_bit_exact_repeatability(self, rng):
        crop = make_image(16, 16, rng)
        req = base_request(crop, seed=987654321)
        a = MockDenoiseBackend().denoise(req)
        b = MockDenoiseBackend().denoise(req)
        assert np.array_equal(a.result.pixels, b.result.pixels)
        assert a.continuation.digest == b.continuation.digest

    def test_zero_mask_pixels_keep_start_bytes(self, rng):
        crop = make_image(16, 16, rng)
        values = np.round(rng.random((16, 16)) * 255) / 255
        values[::2, :] = 0.0
        resp = MockDenoiseBackend().denoise(base_request(crop, soft=SoftMask(values)))
        zero = values == 0.0
        assert np.array_equal(resp.result.pixels[zero], crop.pixels[zero])

    def test_edge_pinning_on_canny_stage(self, rng):
        crop = make_image(16, 16, rng)
        bits = np.zeros((16, 16), dtype=bool)
        bits[4, :] = True
        resp = MockDenoiseBackend().denoise(
            base_request(crop, stage=STAGE_CANNY, edge=EdgeMap(bits), stage_steps=5)
        )
        assert np.array_equal(resp.result.pixels[4], crop.pixels[4])
        assert not np.array_equal(resp.result.pixels[5], crop.pixels[5])

    def test_strength_monotonicity_pre_quantization(self, rng):
        crop = make_image(10, 10, rng)
        start = crop.to_float()
        previous = None
        for strength in np.linspace(0.0, 1.0, 11):
            field = mock_denoise_field(base_request(crop, strength=float(strength)))
            deviation = np.abs(field - start)
            if previous is not None:
                assert (deviation >= previous - 1e-15).all()
            previous = deviation

    def test_two_stage_matches_scalar_oracle(self):
        # constant crop, full mask, one pinned edge pixel, reference defaults
        crop = solid_image(8, 8, (128, 128, 128))
        edge_bits = np.zeros((8, 8), dtype=bool)
        edge_bits[3, 4] = True
        backend = MockDenoiseBackend()
        stage1 = backend.denoise(
            base_request(crop, stage=STAGE_CANNY, edge=EdgeMap(edge_bits),
                         stage_steps=5, total_steps=30, seed=0)
        )
        stage2 = backend.denoise(
            base_request(crop, stage=STAGE_BASE, stage_steps=25, total_steps=30,
                         seed=0, continuation=stage1.continuation)
        )
        start = 128 / 255.0
        for y in range(8):
            for x in range(8):
                for c in range(3):
                    expected = oracles.two_stage_value(
                        0, start, 0.9, 5, 25, x, y, c, edge=edge_bits[y, x]
                    )
                    got = stage2.result.pixels[y, x, c] / 255.0
                    assert abs(got - expected) <= 1.0 / 255.0 + 1e-12

    def test_continuation_digest_matches_image(self, rng):
        crop = make_image(8, 8, rng)
        resp = MockDenoiseBackend().denoise(base_request(crop))
        resp.continuation.verify()
        assert resp.continuation.digest == resp.result.digest()


class TestEmbedders:
    def test_same_text_same_vector(self):
        e = MockEmbedder()
        a = e.embed_text("a red apple")
        b = e.embed_text("a red apple")
        assert np.array_equal(a.values, b.values)

    def test_unit_norm(self, rng):
        e = MockEmbedder()
        assert abs(np.linalg.norm(e.embed_text("hello").values) - 1.0) <= 1e-6
        assert abs(np.linalg.norm(e.embed_image(make_image(9, 9, rng)).values) - 1.0) <= 1e-6

    def test_matches_hash_oracle(self):
        e = MockEmbedder()
        got = e.embed_text("two distinct texts")
        expected = oracles.mock_embedding(oracles.text_hash("two distinct texts"))
        assert np.allclose(got.values, expected, atol=1e-15)

    def test_distinct_texts_not_parallel(self):
        e = MockEmbedder()
        a = e.embed_text("an apple")
        b = e.embed_text("an orange")
        assert float(np.dot(a.values, b.values)) < 1.0 - 1e-6

    def test_empty_text_rejected(self):
        with pytest.raises(ValidationError):
            MockEmbedder().embed_text("")

    def test_image_embedding_matches_oracle(self, rng):
        img = make_image(5, 4, rng)
        got = MockEmbedder().embed_image(img)
        expected = oracles.mock_embedding(oracles.image_hash(img.pixels))
        assert np.allclose(got.values, expected, atol=1e-15)


class TestWireProtocol:
    def setup_method(self):
        self.client = TestClient(wire.build_backend_service())

    def backend(self):
        return HttpDenoiseBackend("http://service", client=self.client)

    def test_round_trip_request_codec(self, rng):
        crop = make_image(10, 8, rng)
        edge = EdgeMap(rng.random((8, 10)) < 0.2)
        soft = SoftMask(np.round(rng.random((8, 10)) * 255) / 255)
        req = base_request(crop, soft=soft, stage=STAGE_CANNY, edge=edge, stage_steps=5)
        again = wire.denoise_request_from_json(wire.denoise_request_to_json(req))
        assert again.crop == req.crop
        assert again.soft_mask == req.soft_mask
        assert again.edge_map == req.edge_map
        assert again.denoising_strength == req.denoising_strength
        assert again.seed == req.seed

    def test_http_equals_local_mock(self, rng):
        local = MockDenoiseBackend()
        remote = self.backend()
        for trial in range(10):
            crop = make_image(int(rng.integers(4, 20)), int(rng.integers(4, 20)), rng)
            stage = STAGE_CANNY if trial % 2 == 0 else STAGE_BASE
            edge = EdgeMap(rng.random((crop.height, crop.width)) < 0.15) if stage == STAGE_CANNY else None
            soft = SoftMask(np.round(rng.random((crop.height, crop.width)) * 255) / 255)
            continuation = None
            if trial % 3 == 0 and stage == STAGE_BASE:
                continuation = ContinuationState.from_image(
                    make_image(crop.width, crop.height, rng)
                )
            req = base_request(
                crop, soft=soft, stage=stage, edge=edge,
                stage_steps=5 if stage == STAGE_CANNY else 25,
                seed=int(rng.integers(0, 2**63)), continuation=continuation,
            )
            a = local.denoise(req)
            b = remote.denoise(req)
            assert np.array_equal(a.result.pixels, b.result.pixels)
            assert a.continuation.digest == b.continuation.digest

    def test_http_embedder_equals_local(self, rng):
        local = MockEmbedder()
        remote = HttpEmbedder("http://service", client=self.client)
        assert np.array_equal(
            local.embed_text("a cat").values, remote.embed_text("a cat").values
        )
        img = make_image(7, 7, rng)
        assert np.array_equal(local.embed_image(img).values, remote.embed_image(img).values)

    def test_unreachable_server_raises_retryable(self, rng):
        backend = HttpDenoiseBackend("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(BackendUnavailable) as excinfo:
            backend.denoise(base_request(make_image(4, 4, rng)))
        assert excinfo.value.retryable

    def test_http_error_status_raises(self, rng):
        backend = self.backend()
        # malformed request (bad stage) produces a 400 from the service
        crop = make_image(4, 4, rng)
        req = base_request(crop)
        payload = wire.denoise_request_to_json(req)
        payload["stage"] = "unknown"
        resp = self.client.post("http://service/v1/denoise", json=payload)
        assert resp.status_code == 400

    def test_health_endpoint(self):
        resp = self.client.get("http://service/v1/health")
        assert resp.status_code == 200
        assert resp.json()["status"] == "ok"

    def test_resolver(self):
        assert isinstance(resolve_denoise_backend("mock"), MockDenoiseBackend)
        assert isinstance(resolve_denoise_backend("http://x"), HttpDenoiseBackend)
        with pytest.raises(ValidationError):
            resolve_denoise_backend("carrier-pigeon")
