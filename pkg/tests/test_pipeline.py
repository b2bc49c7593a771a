import numpy as np
import pytest

from spice import maskops
from spice.backends import MockDenoiseBackend
from spice.buffers import ContextMask, Resolution
from spice.config import AblationFlags, EditConfig
from spice.errors import BackendUnavailable, CancelledError, MaskError, ValidationError
from spice.hints import HintKind, HintLayer
from spice.pipeline import run_edit_step, run_sweep, validate_schedule

import oracles
from conftest import blob_mask, make_image, rgba_patch


def source_soft_zero(image, mask, config):
    """Recompute the full-image set of pixels whose source-side soft mask is
    exactly zero (everything outside the crop, plus in-crop zeros)."""
    analysis = maskops.classify_context_dots(mask, config.dot_area_max)
    include = not config.ablation.disable_context_dots
    bits = analysis.context_bits() if include else analysis.edit_mask.bits
    tight = maskops.tight_bbox(bits)
    box, _ = maskops.extend_bbox(
        tight, config.target_resolution, (image.width, image.height)
    )
    analysis.context_bbox = tight
    analysis.extended_bbox = box
    _, soft_source = maskops.make_soft_mask(
        analysis,
        config.target_resolution,
        config.blur_fraction,
        disable_blur=config.ablation.disable_blur,
        include_dots=include,
    )
    zero = np.ones((image.height, image.width), dtype=bool)
    zero[box.y0 : box.y1, box.x0 : box.x1] = soft_source.values == 0.0
    return zero


def small_config(**kwargs) -> EditConfig:
    defaults = dict(prompt="scenario", target_resolution=Resolution(64, 64))
    defaults.update(kwargs)
    return EditConfig(**defaults)


def scenario(rng, w=96, h=80):
    image = make_image(w, h, rng)
    mask = blob_mask(w, h, 30, 25, 60, 55, dots=[(4, 4, 3), (w - 7, h - 7, 3)])
    patch = rgba_patch(w, h, (34, 29, 56, 51), (200, 40, 40))
    hints = [HintLayer(HintKind.COLOR_PATCH, patch, 0.8)]
    return image, mask, hints


class TestValidateSchedule:
    def test_reference_split(self):
        assert validate_schedule(5, 25).total == 30

    def test_pure_base_is_valid(self):
        schedule = validate_schedule(0, 30)
        assert schedule.canny_steps == 0 and schedule.total == 30

    def test_pure_canny_is_valid(self):
        assert validate_schedule(7, 0).total == 7

    def test_zero_total_rejected(self):
        with pytest.raises(ValidationError):
            validate_schedule(0, 0)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            validate_schedule(-1, 5)


class TestRunEditStep:
    def test_strength_zero_full_mask_passes_hints_through(self, rng):
        image = make_image(64, 64, rng)
        mask = blob_mask(64, 64, 0, 0, 64, 64)
        patch = rgba_patch(64, 64, (20, 20, 44, 44), (255, 255, 255))
        hints = [HintLayer(HintKind.COLOR_PATCH, patch, 0.8)]
        config = small_config(denoising_strength=0.0)
        step = run_edit_step(image, mask, hints, config, MockDenoiseBackend())
        # the denoiser is the identity at strength 0 and the working canvas
        # equals the crop, so the result is exactly the hinted image
        assert np.array_equal(step.result.pixels, step.inputs.hinted.pixels)
        over_black = image.pixels[25, 25, 0]
        expected = oracles.quantize_scalar(0.8 + 0.2 * over_black / 255.0)
        assert step.result.pixels[25, 25, 0] == expected

    def test_strength_zero_preserves_flat_patch_through_resize_round_trip(self, rng):
        image, mask, _ = scenario(rng)
        patch = rgba_patch(96, 80, (34, 29, 56, 51), (10, 220, 10))
        hints = [HintLayer(HintKind.COLOR_PATCH, patch, 1.0)]
        config = small_config(denoising_strength=0.0)
        step = run_edit_step(image, mask, hints, config, MockDenoiseBackend())
        zero = source_soft_zero(image, mask, config)
        assert np.array_equal(step.result.pixels[zero], image.pixels[zero])
        # deep inside both mask and flat patch the round trip is exact to 1 level
        inner = step.result.pixels[40:50, 40:50].astype(int)
        assert np.abs(inner - np.array([10, 220, 10])).max() <= 1

    def test_two_stage_matches_scalar_oracle_full_canvas(self, rng):
        from spice.hints import canny_edges

        image = make_image(64, 64, rng)
        mask = blob_mask(64, 64, 0, 0, 64, 64)
        config = small_config()  # strength 0.9, 5 canny + 25 base, seed 0
        step = run_edit_step(image, mask, [], config, MockDenoiseBackend())
        edges = canny_edges(image).bits
        start = image.to_float()
        for y in range(0, 64, 7):
            for x in range(0, 64, 5):
                for c in range(3):
                    expected = oracles.two_stage_value(
                        0, start[y, x, c], 0.9, 5, 25, x, y, c, edge=edges[y, x]
                    )
                    got = step.result.pixels[y, x, c] / 255.0
                    assert abs(got - expected) <= 1.0 / 255.0 + 1e-12

    def test_outside_mask_preserved_on_random_scenarios(self, rng):
        for _ in range(10):
            w = int(rng.integers(48, 120))
            h = int(rng.integers(48, 120))
            image = make_image(w, h, rng)
            x0 = int(rng.integers(0, w - 12))
            y0 = int(rng.integers(0, h - 12))
            mask = blob_mask(w, h, x0, y0, x0 + 12, y0 + 12, dots=[(2, 2, 2)])
            config = small_config(
                denoising_strength=float(rng.uniform(0, 1)),
                seed=int(rng.integers(0, 2**63)),
            )
            step = run_edit_step(image, mask, [], config, MockDenoiseBackend())
            zero = source_soft_zero(image, mask, config)
            assert np.array_equal(step.result.pixels[zero], image.pixels[zero])

    def test_seed_reproducibility(self, rng):
        image, mask, hints = scenario(rng)
        config = small_config(seed=123456789)
        backend = MockDenoiseBackend()
        a = run_edit_step(image, mask, hints, config, backend)
        b = run_edit_step(image, mask, hints, config, backend)
        assert np.array_equal(a.result.pixels, b.result.pixels)

    def test_different_seed_changes_masked_pixels(self, rng):
        image, mask, hints = scenario(rng)
        backend = MockDenoiseBackend()
        a = run_edit_step(image, mask, hints, small_config(seed=1), backend)
        b = run_edit_step(image, mask, hints, small_config(seed=2), backend)
        assert not np.array_equal(a.result.pixels, b.result.pixels)

    def test_inconsistent_ablation_rejected(self, rng):
        image, mask, hints = scenario(rng)
        config = small_config(ablation=AblationFlags(disable_canny_stage=True))
        with pytest.raises(ValidationError, match="inconsistent ablation"):
            run_edit_step(image, mask, hints, config, MockDenoiseBackend())

    def test_each_ablation_changes_output(self, rng):
        image, mask, hints = scenario(rng)
        backend = MockDenoiseBackend()
        baseline = run_edit_step(image, mask, hints, small_config(), backend)
        variants = {
            "disable_context_dots": small_config(
                ablation=AblationFlags(disable_context_dots=True)
            ),
            "disable_blur": small_config(ablation=AblationFlags(disable_blur=True)),
            "disable_hints": small_config(ablation=AblationFlags(disable_hints=True)),
            "disable_canny_stage": small_config(
                canny_steps=0,
                ablation=AblationFlags(disable_canny_stage=True),
            ),
        }
        for name, config in variants.items():
            step = run_edit_step(image, mask, hints, config, backend)
            assert not np.array_equal(step.result.pixels, baseline.result.pixels), name

    def test_empty_mask_rejected(self, rng):
        image = make_image(32, 32, rng)
        mask = ContextMask(np.zeros((32, 32), dtype=bool))
        with pytest.raises(MaskError):
            run_edit_step(image, mask, [], small_config(), MockDenoiseBackend())

    def test_mask_dimension_mismatch_rejected(self, rng):
        image = make_image(32, 32, rng)
        mask = blob_mask(30, 32, 5, 5, 20, 20)
        with pytest.raises(ValidationError):
            run_edit_step(image, mask, [], small_config(), MockDenoiseBackend())

    def test_backend_failure_propagates(self, rng):
        class FailingBackend:
            backend_id = "failing"

            def denoise(self, request):
                raise BackendUnavailable("nope")

        image, mask, hints = scenario(rng)
        with pytest.raises(BackendUnavailable):
            run_edit_step(image, mask, hints, small_config(), FailingBackend())

    def test_cancellation(self, rng):
        image, mask, hints = scenario(rng)
        with pytest.raises(CancelledError):
            run_edit_step(
                image, mask, hints, small_config(), MockDenoiseBackend(),
                cancel_check=lambda: True,
            )

    def test_provenance_recorded(self, rng):
        image, mask, hints = scenario(rng)
        step = run_edit_step(image, mask, hints, small_config(), MockDenoiseBackend())
        assert step.provenance.backend_id == "mock"
        assert len(step.provenance.continuation_digests) == 2
        assert step.provenance.duration_s > 0

    def test_disjoint_masks_compose(self, rng):
        image = make_image(120, 120, rng)
        current = image
        union = np.zeros((120, 120), dtype=bool)
        for i in range(4):
            x0 = (i % 2) * 64 + 8
            y0 = (i // 2) * 64 + 8
            mask = blob_mask(120, 120, x0, y0, x0 + 18, y0 + 18)
            config = small_config(seed=i)
            step = run_edit_step(current, mask, [], config, MockDenoiseBackend())
            union |= ~source_soft_zero(current, mask, config)
            current = step.result
        assert np.array_equal(current.pixels[~union], image.pixels[~union])


class TestRunSweep:
    def test_strength_sweep_monotone_deviation(self, rng):
        image, mask, hints = scenario(rng)
        values = [0.1, 0.3, 0.5, 0.7, 0.9]
        result = run_sweep(
            image, mask, hints, small_config(), MockDenoiseBackend(),
            "denoising_strength", values,
        )
        assert [c.status for c in result.cells] == ["ok"] * 5
        hinted = result.cells[0].step.inputs.hinted.pixels.astype(int)
        deviations = [
            np.abs(c.step.result.pixels.astype(int) - hinted).sum() for c in result.cells
        ]
        assert deviations == sorted(deviations)
        assert result.contact_sheet is not None

    def test_canny_steps_sweep(self, rng):
        image, mask, hints = scenario(rng)
        result = run_sweep(
            image, mask, hints, small_config(), MockDenoiseBackend(),
            "canny_steps", [5, 10, 15, 20, 25],
        )
        assert len(result.cells) == 5
        for cell in result.cells:
            assert cell.status == "ok"
            assert cell.step.config.canny_steps + cell.step.config.base_steps == 30

    def test_context_scale_sweep(self, rng):
        image, mask, hints = scenario(rng)
        result = run_sweep(
            image, mask, hints, small_config(), MockDenoiseBackend(),
            "context_scale", [0.5, 1.0, 2.0],
        )
        assert [c.status for c in result.cells] == ["ok"] * 3
        widths = [c.crop_box.width for c in result.cells]
        assert widths == sorted(widths)

    def test_single_value_rejected(self, rng):
        image, mask, hints = scenario(rng)
        with pytest.raises(ValidationError):
            run_sweep(image, mask, hints, small_config(), MockDenoiseBackend(),
                      "denoising_strength", [0.5])

    def test_unknown_axis_rejected(self, rng):
        image, mask, hints = scenario(rng)
        with pytest.raises(ValidationError):
            run_sweep(image, mask, hints, small_config(), MockDenoiseBackend(),
                      "prompt_length", [1, 2])

    def test_failed_cell_becomes_placeholder(self, rng):
        image, mask, hints = scenario(rng)

        class FlakyBackend:
            backend_id = "flaky"

            def __init__(self):
                self.mock = MockDenoiseBackend()

            def denoise(self, request):
                if request.denoising_strength > 0.75:
                    raise BackendUnavailable("simulated fault")
                return self.mock.denoise(request)

        result = run_sweep(image, mask, hints, small_config(), FlakyBackend(),
                           "denoising_strength", [0.2, 0.9])
        assert [c.status for c in result.cells] == ["ok", "error"]
        assert "simulated fault" in result.cells[1].error
        assert result.contact_sheet is not None
        meta = result.metadata()
        assert meta["cells"][1]["status"] == "error"

    def test_all_cells_failing_is_an_error(self, rng):
        image, mask, hints = scenario(rng)

        class DeadBackend:
            backend_id = "dead"

            def denoise(self, request):
                raise BackendUnavailable("down")

        with pytest.raises(ValidationError):
            run_sweep(image, mask, hints, small_config(), DeadBackend(),
                      "denoising_strength", [0.2, 0.4])

    def test_parallel_jobs_match_serial(self, rng):
        image, mask, hints = scenario(rng)
        serial = run_sweep(image, mask, hints, small_config(), MockDenoiseBackend(),
                           "denoising_strength", [0.2, 0.5, 0.8], jobs=1)
        parallel = run_sweep(image, mask, hints, small_config(), MockDenoiseBackend(),
                             "denoising_strength", [0.2, 0.5, 0.8], jobs=3)
        for a, b in zip(serial.cells, parallel.cells):
            assert np.array_equal(a.step.result.pixels, b.step.result.pixels)
        assert np.array_equal(serial.contact_sheet.pixels, parallel.contact_sheet.pixels)
