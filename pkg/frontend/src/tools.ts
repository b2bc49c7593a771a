/** Tool state and hyperparameter validation (mirrors the server's ranges). */

import type { Rgb } from "./raster.js";

export type Tool = "mask_brush" | "context_dot" | "color_patch" | "reference_paste" | "eraser";

export interface CanvasLayerState {
  tool: Tool;
  brushRadius: number;
  patchColor: Rgb;
  patchOpacity: number;
}

export const defaultLayerState: CanvasLayerState = {
  tool: "mask_brush",
  brushRadius: 8,
  patchColor: [220, 60, 60],
  patchOpacity: 0.8,
};

export interface AblationFlags {
  disable_context_dots: boolean;
  disable_blur: boolean;
  disable_hints: boolean;
  disable_canny_stage: boolean;
}

export interface Hyperparameters {
  prompt: string;
  strength: number;
  cannySteps: number;
  baseSteps: number;
  seed: number;
  resolutionWidth: number;
  resolutionHeight: number;
  patchOpacity: number;
  ablation: AblationFlags;
}

export const defaultHyperparameters: Hyperparameters = {
  prompt: "",
  strength: 0.9,
  cannySteps: 5,
  baseSteps: 25,
  seed: 0,
  resolutionWidth: 1024,
  resolutionHeight: 1024,
  patchOpacity: 0.8,
  ablation: {
    disable_context_dots: false,
    disable_blur: false,
    disable_hints: false,
    disable_canny_stage: false,
  },
};

/** Field-level validation errors, empty when the values are submittable. */
export function validateHyperparameters(h: Hyperparameters): Partial<Record<string, string>> {
  const errors: Partial<Record<string, string>> = {};
  if (!(h.strength >= 0 && h.strength <= 1)) errors.strength = "strength must lie in [0, 1]";
  if (!Number.isInteger(h.cannySteps) || h.cannySteps < 0) errors.cannySteps = "canny steps must be a non-negative integer";
  if (!Number.isInteger(h.baseSteps) || h.baseSteps < 0) errors.baseSteps = "base steps must be a non-negative integer";
  if (h.cannySteps + h.baseSteps < 1) errors.baseSteps = "at least one denoising step is required";
  if (h.ablation.disable_canny_stage && h.cannySteps > 0) {
    errors.cannySteps = "canny stage is disabled; set canny steps to 0";
  }
  if (!Number.isInteger(h.seed) || h.seed < 0) errors.seed = "seed must be a non-negative integer";
  for (const [key, value] of [
    ["resolutionWidth", h.resolutionWidth],
    ["resolutionHeight", h.resolutionHeight],
  ] as const) {
    if (!Number.isInteger(value) || value < 64 || value % 8 !== 0) {
      errors[key] = "resolution sides are multiples of 8, at least 64";
    }
  }
  if (!(h.patchOpacity >= 0 && h.patchOpacity <= 1)) errors.patchOpacity = "opacity must lie in [0, 1]";
  return errors;
}

/** The step config JSON the server expects. */
export function toConfigPayload(h: Hyperparameters): Record<string, unknown> {
  return {
    prompt: h.prompt,
    denoising_strength: h.strength,
    canny_steps: h.cannySteps,
    base_steps: h.baseSteps,
    seed: h.seed,
    target_resolution: { width: h.resolutionWidth, height: h.resolutionHeight },
    patch_opacity: h.patchOpacity,
    ablation: h.ablation,
  };
}

export interface Preset {
  name: string;
  context_hint: string;
  note: string;
  denoising_strength: number;
  canny_steps: number;
  base_steps: number;
  levels: { denoising: string; canny: string };
}

export function applyPreset(h: Hyperparameters, preset: Preset): Hyperparameters {
  return {
    ...h,
    strength: preset.denoising_strength,
    cannySteps: preset.canny_steps,
    baseSteps: preset.base_steps,
  };
}
