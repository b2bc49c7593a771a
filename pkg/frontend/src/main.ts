/** Browser UI: sketch masks and hints over the active image, tune the
 * hyperparameters, run steps against the session server, inspect
 * before/after, and move through history. */

import { ApiError, SpiceClient, type HintUpload } from "./api.js";
import { CONTEXT_DOT_RADIUS, HintRaster, MaskRaster, type Rgb } from "./raster.js";
import {
  compareUrl,
  initialState,
  timeline,
  withBusy,
  withError,
  withSession,
  type AppState,
} from "./state.js";
import {
  applyPreset,
  defaultHyperparameters,
  defaultLayerState,
  toConfigPayload,
  validateHyperparameters,
  type CanvasLayerState,
  type Hyperparameters,
  type Preset,
} from "./tools.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const client = new SpiceClient(
  new URLSearchParams(location.search).get("server") ?? "http://127.0.0.1:8750",
);

let state: AppState = initialState;
let layer: CanvasLayerState = { ...defaultLayerState };
let params: Hyperparameters = { ...defaultHyperparameters };
let mask: MaskRaster | null = null;
let patches: HintRaster | null = null;
let pastes: HintRaster | null = null;
let dotMarks: { x: number; y: number }[] = [];
let cloneSource: { x: number; y: number } | null = null;
let activePixels: ImageData | null = null;

const maskCanvas = $("mask-canvas") as unknown as HTMLCanvasElement;
const hintCanvas = $("hint-canvas") as unknown as HTMLCanvasElement;
const beforeImg = $("before-img") as unknown as HTMLImageElement;
const afterImg = $("after-img") as unknown as HTMLImageElement;

function setState(next: AppState): void {
  state = next;
  renderChrome();
}

function renderChrome(): void {
  $("status").textContent = state.busy ? "running…" : state.error ? `error: ${state.error}` : "ready";
  ($("run") as HTMLButtonElement).disabled = state.busy || !state.session;
  ($("sweep") as HTMLButtonElement).disabled = state.busy || !state.session;
  ($("cancel") as HTMLButtonElement).hidden = !state.busy;
  const retry = $("retry") as HTMLButtonElement;
  retry.hidden = !(state.error && state.errorRetryable);
  renderTimeline();
  renderImages();
}

function renderTimeline(): void {
  const strip = $("timeline");
  strip.replaceChildren();
  if (!state.session) return;
  for (const entry of timeline(state.session)) {
    const button = document.createElement("button");
    button.className = entry.active ? "timeline-entry active" : "timeline-entry";
    button.title = entry.label;
    const img = document.createElement("img");
    img.src = client.imageUrl(entry.thumbnailUrl);
    img.alt = entry.label;
    button.append(img, document.createTextNode(entry.label));
    button.addEventListener("click", () => void revertTo(entry.index));
    strip.append(button);
  }
}

function renderImages(): void {
  const session = state.session;
  if (!session) return;
  afterImg.src = client.imageUrl(session.active_url) + `#c${session.cursor}`;
  const before = compareUrl(state);
  if (before) beforeImg.src = client.imageUrl(before);
  afterImg.onload = () => {
    captureActivePixels();
  };
}

function captureActivePixels(): void {
  if (!state.session) return;
  const probe = document.createElement("canvas");
  probe.width = state.session.width;
  probe.height = state.session.height;
  const ctx = probe.getContext("2d");
  if (!ctx) return;
  ctx.drawImage(afterImg, 0, 0);
  try {
    activePixels = ctx.getImageData(0, 0, probe.width, probe.height);
  } catch {
    activePixels = null; // cross-origin without CORS; clone stamp disabled
  }
}

function renderOverlays(): void {
  if (!mask || !patches || !pastes) return;
  const mctx = maskCanvas.getContext("2d")!;
  const image = mctx.createImageData(mask.width, mask.height);
  for (let i = 0; i < mask.bits.length; i++) {
    if (mask.bits[i]) {
      image.data[i * 4] = 64;
      image.data[i * 4 + 1] = 160;
      image.data[i * 4 + 2] = 255;
      image.data[i * 4 + 3] = 110;
    }
  }
  mctx.putImageData(image, 0, 0);
  // context dots get a distinct overlay color even though they live in the
  // same mask channel
  mctx.fillStyle = "rgba(255, 200, 40, 0.95)";
  for (const dot of dotMarks) {
    mctx.beginPath();
    mctx.arc(dot.x, dot.y, CONTEXT_DOT_RADIUS + 1.5, 0, Math.PI * 2);
    mctx.fill();
  }
  const hctx = hintCanvas.getContext("2d")!;
  hctx.clearRect(0, 0, hintCanvas.width, hintCanvas.height);
  const paste = new ImageData(new Uint8ClampedArray(pastes.data), pastes.width, pastes.height);
  const patch = new ImageData(new Uint8ClampedArray(patches.data), patches.width, patches.height);
  const tmp = document.createElement("canvas");
  tmp.width = hintCanvas.width;
  tmp.height = hintCanvas.height;
  const tctx = tmp.getContext("2d")!;
  tctx.putImageData(paste, 0, 0);
  hctx.drawImage(tmp, 0, 0);
  tctx.putImageData(patch, 0, 0);
  hctx.globalAlpha = layer.patchOpacity;
  hctx.drawImage(tmp, 0, 0);
  hctx.globalAlpha = 1;
}

function resetRasters(width: number, height: number): void {
  mask = new MaskRaster(width, height);
  patches = new HintRaster(width, height);
  pastes = new HintRaster(width, height);
  dotMarks = [];
  cloneSource = null;
  for (const canvas of [maskCanvas, hintCanvas]) {
    canvas.width = width;
    canvas.height = height;
  }
  renderOverlays();
}

function canvasPoint(event: PointerEvent): { x: number; y: number } {
  const rect = maskCanvas.getBoundingClientRect();
  return {
    x: ((event.clientX - rect.left) / rect.width) * maskCanvas.width,
    y: ((event.clientY - rect.top) / rect.height) * maskCanvas.height,
  };
}

let stroking = false;
let last: { x: number; y: number } | null = null;

function applyTool(from: { x: number; y: number }, to: { x: number; y: number }): void {
  if (!mask || !patches || !pastes) return;
  switch (layer.tool) {
    case "mask_brush":
      mask.stroke(from.x, from.y, to.x, to.y, layer.brushRadius, 1);
      break;
    case "eraser":
      mask.stroke(from.x, from.y, to.x, to.y, layer.brushRadius, 0);
      patches.erase(to.x, to.y, layer.brushRadius);
      pastes.erase(to.x, to.y, layer.brushRadius);
      dotMarks = dotMarks.filter((d) => Math.hypot(d.x - to.x, d.y - to.y) > layer.brushRadius);
      break;
    case "context_dot":
      mask.stampDisk(to.x, to.y, CONTEXT_DOT_RADIUS, 1);
      dotMarks.push({ x: to.x, y: to.y });
      break;
    case "color_patch":
      patches.paintStroke(from.x, from.y, to.x, to.y, layer.brushRadius, layer.patchColor);
      break;
    case "reference_paste": {
      if (!cloneSource) break;
      if (!activePixels) break;
      const half = layer.brushRadius;
      pastes.pasteRect(
        new Uint8Array(activePixels.data.buffer),
        activePixels.width,
        Math.max(0, Math.round(cloneSource.x - half)),
        Math.max(0, Math.round(cloneSource.y - half)),
        Math.round(half * 2),
        Math.round(half * 2),
        Math.round(to.x - half),
        Math.round(to.y - half),
      );
      break;
    }
  }
  renderOverlays();
}

maskCanvas.addEventListener("pointerdown", (event) => {
  if (!state.session) return;
  const point = canvasPoint(event);
  if (layer.tool === "reference_paste" && event.altKey) {
    cloneSource = point;
    return;
  }
  stroking = true;
  last = point;
  applyTool(point, point);
  maskCanvas.setPointerCapture(event.pointerId);
});
maskCanvas.addEventListener("pointermove", (event) => {
  if (!stroking || !last) return;
  const point = canvasPoint(event);
  if (layer.tool !== "context_dot") applyTool(last, point);
  last = point;
});
maskCanvas.addEventListener("pointerup", () => {
  stroking = false;
  last = null;
});

function collectHints(): HintUpload[] {
  const uploads: HintUpload[] = [];
  if (patches?.hasSupport()) {
    uploads.push({ png: patches.toPng(), kind: "color_patch", opacity: params.patchOpacity });
  }
  if (pastes?.hasSupport()) {
    uploads.push({ png: pastes.toPng(), kind: "reference_paste", opacity: 1.0 });
  }
  return uploads;
}

async function refreshSession(id: string): Promise<void> {
  setState(withSession(state, await client.getSession(id)));
}

async function runStep(): Promise<void> {
  if (!state.session || !mask) return;
  if (mask.isEmpty()) {
    setState(withError(state, "no edit region: paint a mask first", false));
    return;
  }
  const errors = validateHyperparameters(params);
  if (Object.keys(errors).length) {
    setState(withError(state, Object.values(errors).join("; "), false));
    return;
  }
  setState(withBusy(state));
  try {
    await client.runStep(state.session.id, mask.toPng(), collectHints(), toConfigPayload(params));
    await refreshSession(state.session.id);
    resetRasters(state.session!.width, state.session!.height);
    setState({ ...state, compareTo: state.session!.cursor - 1 });
  } catch (error) {
    setState(withError(state, describe(error), error instanceof ApiError && error.retryable));
  }
}

async function runSweep(): Promise<void> {
  if (!state.session || !mask) return;
  const axis = ($("sweep-axis") as HTMLSelectElement).value;
  const values = ($("sweep-values") as HTMLInputElement).value
    .split(",")
    .map((v) => Number(v.trim()))
    .filter((v) => Number.isFinite(v));
  if (values.length < 2) {
    setState(withError(state, "a sweep needs at least two comma-separated values", false));
    return;
  }
  setState(withBusy(state));
  try {
    const sweep = await client.runSweep(
      state.session.id, mask.toPng(), collectHints(), toConfigPayload(params), axis, values,
    );
    const grid = $("sweep-grid");
    grid.replaceChildren();
    for (const cell of sweep.cells) {
      const tile = document.createElement("figure");
      tile.className = `sweep-cell ${cell.status}`;
      if (cell.image_url) {
        const img = document.createElement("img");
        img.src = client.imageUrl(cell.image_url);
        tile.append(img);
      }
      const caption = document.createElement("figcaption");
      caption.textContent = cell.status === "ok" ? String(cell.value) : `${cell.value}: ${cell.error}`;
      tile.append(caption);
      grid.append(tile);
    }
    await refreshSession(state.session.id);
  } catch (error) {
    setState(withError(state, describe(error), error instanceof ApiError && error.retryable));
  }
}

async function revertTo(index: number): Promise<void> {
  if (!state.session || state.busy) return;
  try {
    await client.revert(state.session.id, index);
    await refreshSession(state.session.id);
  } catch (error) {
    setState(withError(state, describe(error), false));
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}

function bindPanel(): void {
  const bindNumber = (id: string, apply: (v: number) => void) => {
    const input = $(id) as HTMLInputElement;
    input.addEventListener("input", () => {
      apply(Number(input.value));
      const errors = validateHyperparameters(params);
      const key = id.replace(/-([a-z])/g, (_, c: string) => c.toUpperCase());
      input.classList.toggle("invalid", key in errors);
      $("panel-error").textContent = Object.values(errors).join("; ");
      if (id === "strength") $("strength-value").textContent = input.value;
    });
  };
  bindNumber("strength", (v) => (params = { ...params, strength: v }));
  bindNumber("canny-steps", (v) => (params = { ...params, cannySteps: v }));
  bindNumber("base-steps", (v) => (params = { ...params, baseSteps: v }));
  bindNumber("seed", (v) => (params = { ...params, seed: v }));
  bindNumber("resolution-width", (v) => (params = { ...params, resolutionWidth: v }));
  bindNumber("resolution-height", (v) => (params = { ...params, resolutionHeight: v }));
  bindNumber("patch-opacity", (v) => {
    params = { ...params, patchOpacity: v };
    layer = { ...layer, patchOpacity: v };
    renderOverlays();
  });
  ($("prompt") as HTMLTextAreaElement).addEventListener("input", (event) => {
    params = { ...params, prompt: (event.target as HTMLTextAreaElement).value };
  });
  for (const flag of [
    "disable_context_dots", "disable_blur", "disable_hints", "disable_canny_stage",
  ] as const) {
    ($(`ablate-${flag}`) as HTMLInputElement).addEventListener("change", (event) => {
      params = {
        ...params,
        ablation: { ...params.ablation, [flag]: (event.target as HTMLInputElement).checked },
      };
    });
  }
  const brush = $("brush-radius") as HTMLInputElement;
  brush.addEventListener("input", () => (layer = { ...layer, brushRadius: Number(brush.value) }));
  const color = $("patch-color") as HTMLInputElement;
  color.addEventListener("input", () => {
    const rgb = color.value.match(/^#(..)(..)(..)$/);
    if (rgb) {
      layer = { ...layer, patchColor: [1, 2, 3].map((i) => parseInt(rgb[i], 16)) as Rgb };
    }
  });
  for (const tool of ["mask_brush", "context_dot", "color_patch", "reference_paste", "eraser"] as const) {
    ($(`tool-${tool}`) as HTMLInputElement).addEventListener("change", () => {
      layer = { ...layer, tool };
    });
  }
  const slider = $("compare-slider") as HTMLInputElement;
  slider.addEventListener("input", () => {
    afterImg.style.clipPath = `inset(0 0 0 ${slider.value}%)`;
  });
}

async function loadPresets(): Promise<void> {
  try {
    const presets = await client.presets();
    const menu = $("preset-menu") as HTMLSelectElement;
    for (const preset of presets) {
      const option = document.createElement("option");
      option.value = preset.name;
      option.textContent = `${preset.name} (context: ${preset.context_hint}, ${preset.levels.denoising}/${preset.levels.canny})`;
      menu.append(option);
    }
    menu.addEventListener("change", () => {
      const preset = presets.find((p: Preset) => p.name === menu.value);
      if (!preset) return;
      params = applyPreset(params, preset);
      ($("strength") as HTMLInputElement).value = String(params.strength);
      $("strength-value").textContent = String(params.strength);
      ($("canny-steps") as HTMLInputElement).value = String(params.cannySteps);
      ($("base-steps") as HTMLInputElement).value = String(params.baseSteps);
      $("preset-note").textContent = preset.note;
    });
  } catch {
    $("preset-note").textContent = "presets unavailable (server offline?)";
  }
}

function bindUpload(): void {
  const input = $("upload") as HTMLInputElement;
  input.addEventListener("change", async () => {
    const file = input.files?.[0];
    if (!file) return;
    setState(withBusy(state));
    try {
      const bytes = new Uint8Array(await file.arrayBuffer());
      const id = await client.createSession(bytes);
      await refreshSession(id);
      resetRasters(state.session!.width, state.session!.height);
    } catch (error) {
      setState(withError(state, describe(error), error instanceof ApiError && error.retryable));
    }
  });
}

$("run").addEventListener("click", () => void runStep());
$("retry").addEventListener("click", () => void runStep());
$("sweep").addEventListener("click", () => void runSweep());
$("cancel").addEventListener("click", () => {
  if (state.session) void client.cancel(state.session.id);
});

bindPanel();
bindUpload();
void loadPresets();
renderChrome();
