"""Edit-step configuration and its defaults.

Defaults follow the reference workflow setup: denoising strength 0.9, 5 Canny
steps + 25 base steps, seed 0, color-patch opacity 0.8, 1024x1024 working
canvas.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

from spice.buffers import Resolution
from spice.errors import ValidationError

MAX_SEED = 2**64 - 1

DEFAULT_STRENGTH = 0.9
DEFAULT_CANNY_STEPS = 5
DEFAULT_BASE_STEPS = 25
DEFAULT_SEED = 0
DEFAULT_PATCH_OPACITY = 0.8
DEFAULT_BLUR_FRACTION = 0.02
DEFAULT_DOT_AREA_MAX = 81
DEFAULT_RESOLUTION = (1024, 1024)

ABLATION_FLAGS = (
    "disable_context_dots",
    "disable_blur",
    "disable_hints",
    "disable_canny_stage",
)


@dataclass(frozen=True)
class AblationFlags:
    disable_context_dots: bool = False
    disable_blur: bool = False
    disable_hints: bool = False
    disable_canny_stage: bool = False

    @classmethod
    def from_names(cls, names) -> "AblationFlags":
        unknown = set(names) - set(ABLATION_FLAGS)
        if unknown:
            raise ValidationError(f"unknown ablation flags: {sorted(unknown)}")
        return cls(**{name: True for name in names})

    def enabled(self) -> list[str]:
        return [name for name in ABLATION_FLAGS if getattr(self, name)]


@dataclass(frozen=True)
class EditConfig:
    prompt: str = ""
    denoising_strength: float = DEFAULT_STRENGTH
    canny_steps: int = DEFAULT_CANNY_STEPS
    base_steps: int = DEFAULT_BASE_STEPS
    seed: int = DEFAULT_SEED
    target_resolution: Resolution = field(
        default_factory=lambda: Resolution(*DEFAULT_RESOLUTION)
    )
    patch_opacity: float = DEFAULT_PATCH_OPACITY
    blur_fraction: float = DEFAULT_BLUR_FRACTION
    dot_area_max: int = DEFAULT_DOT_AREA_MAX
    ablation: AblationFlags = field(default_factory=AblationFlags)

    def __post_init__(self):
        if not 0.0 <= self.denoising_strength <= 1.0:
            raise ValidationError(
                f"denoising_strength must lie in [0,1], got {self.denoising_strength}"
            )
        if self.canny_steps < 0 or self.base_steps < 0:
            raise ValidationError("step counts must be non-negative")
        if self.canny_steps + self.base_steps < 1:
            raise ValidationError("canny_steps + base_steps must be at least 1")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not 0.0 <= self.patch_opacity <= 1.0:
            raise ValidationError(f"patch_opacity must lie in [0,1], got {self.patch_opacity}")
        if self.blur_fraction <= 0.0:
            raise ValidationError(f"blur_fraction must be positive, got {self.blur_fraction}")
        if self.dot_area_max < 0:
            raise ValidationError(f"dot_area_max must be non-negative, got {self.dot_area_max}")

    def with_(self, **kwargs) -> "EditConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["target_resolution"] = {
            "width": self.target_resolution.width,
            "height": self.target_resolution.height,
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EditConfig":
        d = dict(d)
        res = d.pop("target_resolution", None)
        ablation = d.pop("ablation", None)
        kwargs = {}
        if res is not None:
            kwargs["target_resolution"] = Resolution(int(res["width"]), int(res["height"]))
        if ablation is not None:
            kwargs["ablation"] = AblationFlags(**{k: bool(v) for k, v in ablation.items()})
        allowed = {
            "prompt",
            "denoising_strength",
            "canny_steps",
            "base_steps",
            "seed",
            "patch_opacity",
            "blur_fraction",
            "dot_area_max",
        }
        unknown = set(d) - allowed
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        kwargs.update(d)
        return cls(**kwargs)
