"""Shipped hyperparameter presets.

The preset table pairs editing tasks with qualitative levels (low / moderate /
high) for denoising strength and Canny steps; the levels map to the concrete
values in presets.json, which the UI and API expose as starting points.
"""

from __future__ import annotations

import importlib.resources
import json


def load_presets() -> dict:
    with importlib.resources.files("spice").joinpath("presets.json").open(
        "r", encoding="utf-8"
    ) as f:
        return json.load(f)


def concrete_presets() -> list[dict]:
    """Presets with their levels resolved to numeric hyperparameters."""
    data = load_presets()
    levels = data["levels"]
    total = data["total_steps"]
    out = []
    for preset in data["presets"]:
        canny = levels["canny_steps"][preset["canny"]]
        out.append(
            {
                "name": preset["name"],
                "context_hint": preset["context_hint"],
                "note": preset["note"],
                "denoising_strength": levels["denoising_strength"][preset["denoising"]],
                "canny_steps": canny,
                "base_steps": total - canny,
                "levels": {"denoising": preset["denoising"], "canny": preset["canny"]},
            }
        )
    return out
