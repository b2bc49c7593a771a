"""Command-line surface: single edit steps, sweeps, measurement, metrics, serving.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 backend error.
"""

from __future__ import annotations

import json
import os
import sys

import click

from spice import imageops, metrics, pipeline
from spice.backends import resolve_denoise_backend, resolve_embedder
from spice.buffers import BinaryMask, ContextMask, Resolution
from spice.config import ABLATION_FLAGS, AblationFlags, EditConfig
from spice.errors import BackendError, CodecError, SpiceError, ValidationError
from spice.hints import HintKind, HintLayer

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BACKEND = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_file(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read {path}: {exc}")


def _load_image(path: str):
    try:
        return imageops.decode_png(_read_file(path))
    except CodecError as exc:
        _fail(EXIT_IO, f"{path}: {exc}")


def _load_mask(path: str) -> ContextMask:
    try:
        return ContextMask(imageops.decode_mask_png(_read_file(path)))
    except (CodecError, ValidationError) as exc:
        _fail(EXIT_IO, f"{path}: {exc}")


def _parse_resolution(value: str) -> Resolution:
    try:
        w, h = value.lower().split("x")
        return Resolution(int(w), int(h))
    except (ValueError, ValidationError) as exc:
        raise click.UsageError(f"bad --resolution {value!r}: {exc}")


def _build_config(prompt, strength, canny_steps, base_steps, seed, resolution, opacity,
                  blur_fraction, dot_area_max, ablate) -> EditConfig:
    try:
        return EditConfig(
            prompt=prompt,
            denoising_strength=strength,
            canny_steps=canny_steps,
            base_steps=base_steps,
            seed=seed,
            target_resolution=_parse_resolution(resolution),
            patch_opacity=opacity,
            blur_fraction=blur_fraction,
            dot_area_max=dot_area_max,
            ablation=AblationFlags.from_names(ablate),
        )
    except ValidationError as exc:
        raise click.UsageError(str(exc))


def _load_hints(hint_paths, paste_paths, config: EditConfig) -> list[HintLayer]:
    layers = []
    for path in hint_paths:
        layers.append(
            HintLayer(
                kind=HintKind.COLOR_PATCH,
                raster=_ensure_rgba(_load_image(path), path),
                opacity=config.patch_opacity,
            )
        )
    for path in paste_paths:
        layers.append(
            HintLayer(
                kind=HintKind.REFERENCE_PASTE,
                raster=_ensure_rgba(_load_image(path), path),
                opacity=1.0,
            )
        )
    return layers


def _ensure_rgba(image, path):
    if image.channels == 4:
        return image
    _fail(EXIT_IO, f"{path}: hint layers must be RGBA PNGs (alpha marks the painted area)")


_EDIT_OPTIONS = [
    click.option("--image", "image_path", required=True, help="Input image PNG."),
    click.option("--mask", "mask_path", required=True,
                 help="Mask PNG (grayscale, foreground >= 128), context dots included."),
    click.option("--hint", "hint_paths", multiple=True,
                 help="RGBA color-patch PNG, applied at the patch opacity (repeatable)."),
    click.option("--paste", "paste_paths", multiple=True,
                 help="RGBA reference-paste PNG, applied at full opacity (repeatable)."),
    click.option("--prompt", default="", help="Description prompt (what the region should show)."),
    click.option("--strength", type=float, default=0.9, show_default=True,
                 help="Denoising strength in [0,1]."),
    click.option("--canny-steps", type=int, default=5, show_default=True),
    click.option("--base-steps", type=int, default=25, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--resolution", default="1024x1024", show_default=True,
                 help="Working canvas WxH (multiples of 8, at least 64)."),
    click.option("--opacity", type=float, default=0.8, show_default=True,
                 help="Color patch opacity."),
    click.option("--blur-fraction", type=float, default=0.02, show_default=True,
                 help="Soft-mask sigma as a fraction of the working canvas's short side."),
    click.option("--dot-area-max", type=int, default=81, show_default=True,
                 help="Components up to this many pixels are context dots."),
    click.option("--ablate", "ablate", multiple=True, type=click.Choice(ABLATION_FLAGS),
                 help="Disable a workflow component (repeatable)."),
    click.option("--backend", "backend_spec", default="mock", show_default=True,
                 envvar="SPICE_BACKEND_URL", help="'mock' or a denoise service URL."),
]


def _with_edit_options(fn):
    for option in reversed(_EDIT_OPTIONS):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Iterative image editing: masks with context dots, color/edge hints,
    two-stage denoising, strict outside-mask preservation."""


@main.command()
@_with_edit_options
@click.option("--out", "out_dir", required=True, help="Output directory.")
def edit(image_path, mask_path, hint_paths, paste_paths, prompt, strength, canny_steps,
         base_steps, seed, resolution, opacity, blur_fraction, dot_area_max, ablate,
         backend_spec, out_dir):
    """Run one edit step and write result.png plus step metadata."""
    config = _build_config(prompt, strength, canny_steps, base_steps, seed, resolution,
                           opacity, blur_fraction, dot_area_max, ablate)
    image = _load_image(image_path)
    mask = _load_mask(mask_path)
    layers = _load_hints(hint_paths, paste_paths, config)
    backend = _resolve_backend(backend_spec)
    try:
        step = pipeline.run_edit_step(image, mask, layers, config, backend)
    except BackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    except SpiceError as exc:
        raise click.UsageError(str(exc))
    _write_step_outputs(step, out_dir)
    click.echo(f"wrote {os.path.join(out_dir, 'result.png')}")


def _resolve_backend(spec: str):
    try:
        return resolve_denoise_backend(spec)
    except ValidationError as exc:
        raise click.UsageError(str(exc))


def _write_step_outputs(step, out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "result.png"), "wb") as f:
            f.write(imageops.encode_png(step.result))
        with open(os.path.join(out_dir, "step.json"), "w", encoding="utf-8") as f:
            json.dump(
                {
                    "config": step.config.to_dict(),
                    "provenance": {
                        "backend_id": step.provenance.backend_id,
                        "duration_s": step.provenance.duration_s,
                        "continuation_digests": list(step.provenance.continuation_digests),
                    },
                },
                f,
                indent=2,
            )
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write outputs: {exc}")


@main.command()
@_with_edit_options
@click.option("--axis", required=True,
              type=click.Choice(["strength", "canny-steps", "context-scale"]))
@click.option("--values", required=True, help="Comma-separated values (at least two).")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", required=True, help="Output directory.")
def sweep(image_path, mask_path, hint_paths, paste_paths, prompt, strength, canny_steps,
          base_steps, seed, resolution, opacity, blur_fraction, dot_area_max, ablate,
          backend_spec, axis, values, jobs, out_dir):
    """Run one step per value and write per-cell PNGs, a contact sheet, and a
    JSON sidecar."""
    config = _build_config(prompt, strength, canny_steps, base_steps, seed, resolution,
                           opacity, blur_fraction, dot_area_max, ablate)
    try:
        value_list = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --values: {exc}")
    axis_name = {"strength": "denoising_strength", "canny-steps": "canny_steps",
                 "context-scale": "context_scale"}[axis]
    image = _load_image(image_path)
    mask = _load_mask(mask_path)
    layers = _load_hints(hint_paths, paste_paths, config)
    backend = _resolve_backend(backend_spec)
    try:
        result = pipeline.run_sweep(image, mask, layers, config, backend,
                                    axis_name, value_list, jobs=jobs)
    except BackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    except SpiceError as exc:
        raise click.UsageError(str(exc))
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "contact_sheet.png"), "wb") as f:
            f.write(imageops.encode_png(result.contact_sheet))
        with open(os.path.join(out_dir, "sweep.json"), "w", encoding="utf-8") as f:
            json.dump(result.metadata(), f, indent=2)
        for i, cell in enumerate(result.cells):
            if cell.status == "ok":
                with open(os.path.join(out_dir, f"cell_{i:02d}.png"), "wb") as f:
                    f.write(imageops.encode_png(cell.step.result))
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write outputs: {exc}")
    failed = [c for c in result.cells if c.status != "ok"]
    click.echo(f"sweep complete: {len(result.cells) - len(failed)} ok, {len(failed)} failed")


@main.command()
@click.option("--seg", "seg_path", required=True, help="Segmentation mask PNG.")
@click.option("--image", "image_path", required=True, help="Edited image PNG.")
@click.option("--spec", "spec_path", required=True,
              help="JSON with specified width/height/center_x/center_y/rotation/hue/aspect_ratio.")
@click.option("--out", "out_path", required=True, help="Report JSON path.")
def measure(seg_path, image_path, spec_path, out_path):
    """Measure object properties against a specification and report
    percentage errors."""
    image = _load_image(image_path)
    try:
        bits = imageops.decode_mask_png(_read_file(seg_path))
        seg = BinaryMask(bits)
    except (CodecError, ValidationError) as exc:
        _fail(EXIT_IO, f"{seg_path}: {exc}")
    try:
        spec = metrics.PropertySpec.from_dict(json.loads(_read_file(spec_path)))
    except (json.JSONDecodeError, ValidationError, ValueError) as exc:
        raise click.UsageError(f"bad spec file: {exc}")
    if (seg.height, seg.width) != (image.height, image.width):
        raise click.UsageError("segmentation mask and image dimensions differ")
    try:
        measured = metrics.measure_object(seg, image)
        errors = metrics.percentage_errors(measured, spec)
    except ValidationError as exc:
        raise click.UsageError(str(exc))
    except SpiceError as exc:
        _fail(EXIT_IO, str(exc))
    report = {
        "measured": {
            "width": measured.width,
            "height": measured.height,
            "center_x": measured.center_x,
            "center_y": measured.center_y,
            "rotation": measured.rotation,
            "rotation_degenerate": measured.rotation_degenerate,
            "hue": measured.hue,
            "hue_degenerate": measured.hue_degenerate,
            "aspect_ratio": measured.aspect_ratio,
        },
        "errors": errors.to_dict(),
    }
    try:
        with open(out_path, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {out_path}: {exc}")
    click.echo(json.dumps(report["errors"], indent=2))


@main.command("clip-metrics")
@click.option("--cases", "cases_dir", required=True, help="Directory of case subdirectories.")
@click.option("--embedder", "embedder_spec", default="mock", show_default=True,
              help="'mock' or an embedding service URL.")
@click.option("--out", "out_path", required=True, help="Report JSON path.")
@click.option("--csv", "csv_path", default=None, help="Optional per-case CSV path.")
def clip_metrics(cases_dir, embedder_spec, out_path, csv_path):
    """Score a directory of editing cases with directional and output
    similarities."""
    try:
        embedder = resolve_embedder(embedder_spec)
    except ValidationError as exc:
        raise click.UsageError(str(exc))
    try:
        report = metrics.evaluate_cases(cases_dir, embedder)
    except BackendError as exc:
        _fail(EXIT_BACKEND, str(exc))
    except ValidationError as exc:
        _fail(EXIT_IO, str(exc))
    try:
        metrics.write_report(report, out_path, csv_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write report: {exc}")
    agg = report["aggregates"]
    for name in ("clip_dir", "clip_out"):
        a = agg[name]
        if a["mean"] is None:
            click.echo(f"{name}: no defined cases")
        else:
            click.echo(f"{name}: {a['mean']:.6f} +/- {a['sd']:.6f} (n={a['n']})")
    if report["undefined_count"]:
        click.echo(f"undefined clip_dir cases excluded: {report['undefined_count']}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8750, show_default=True)
@click.option("--backend-url", default=None, envvar="SPICE_BACKEND_URL",
              help="Denoise service URL; omit for the built-in mock.")
@click.option("--embedder-url", default=None, envvar="SPICE_EMBEDDER_URL")
@click.option("--project-root", default="./spice-projects", show_default=True)
@click.option("--parallelism", type=int, default=4, show_default=True)
def serve(host, port, backend_url, embedder_url, project_root, parallelism):
    """Serve the session API until interrupted."""
    import uvicorn

    from spice.server import create_app

    backend = resolve_denoise_backend(backend_url) if backend_url else None
    embedder = resolve_embedder(embedder_url) if embedder_url else None
    app = create_app(project_root, backend=backend, embedder=embedder,
                     max_parallel_steps=parallelism)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        _fail(EXIT_IO, f"cannot bind {host}:{port}: {exc}")


if __name__ == "__main__":
    main()
