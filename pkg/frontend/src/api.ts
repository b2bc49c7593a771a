/**
 * Client for the session server. The server is the single source of truth:
 * every mutation returns or is followed by a fresh session fetch, and the UI
 * renders only what these calls return.
 */

export interface StepSummary {
  index: number;
  config: Record<string, unknown>;
  result_url: string;
  mask_url: string;
  hint_url: string;
  thumbnail_url: string;
}

export interface SessionView {
  id: string;
  width: number;
  height: number;
  cursor: number;
  base_url: string;
  active_url: string;
  steps: StepSummary[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  retryable: boolean;
}

export class ApiError extends Error {
  readonly code: string;
  readonly retryable: boolean;

  constructor(body: ApiErrorBody, status: number) {
    super(body.message || `HTTP ${status}`);
    this.code = body.code || "internal";
    this.retryable = Boolean(body.retryable);
  }
}

async function fail(resp: Response): Promise<never> {
  let body: ApiErrorBody = { code: "internal", message: `HTTP ${resp.status}`, retryable: false };
  try {
    body = (await resp.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(body, resp.status);
}

export interface HintUpload {
  png: Uint8Array;
  kind: "color_patch" | "reference_paste";
  opacity: number;
}

export class SpiceClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<{ status: string; backend_id: string }> {
    const resp = await fetch(this.url("/v1/health"));
    if (!resp.ok) return fail(resp);
    return resp.json();
  }

  async createSession(imagePng: Uint8Array): Promise<string> {
    const form = new FormData();
    form.append("image", new Blob([imagePng as BlobPart], { type: "image/png" }), "base.png");
    const resp = await fetch(this.url("/v1/sessions"), { method: "POST", body: form });
    if (!resp.ok) return fail(resp);
    return (await resp.json()).session_id as string;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    const resp = await fetch(this.url(`/v1/sessions/${sessionId}`));
    if (!resp.ok) return fail(resp);
    return resp.json();
  }

  async runStep(
    sessionId: string,
    maskPng: Uint8Array,
    hints: HintUpload[],
    config: Record<string, unknown>,
  ): Promise<StepSummary> {
    const form = new FormData();
    form.append("mask", new Blob([maskPng as BlobPart], { type: "image/png" }), "mask.png");
    for (const [i, hint] of hints.entries()) {
      form.append("hints", new Blob([hint.png as BlobPart], { type: "image/png" }), `hint${i}.png`);
    }
    form.append("hints_meta", JSON.stringify(hints.map((h) => ({ kind: h.kind, opacity: h.opacity }))));
    form.append("config", JSON.stringify(config));
    const resp = await fetch(this.url(`/v1/sessions/${sessionId}/steps`), { method: "POST", body: form });
    if (!resp.ok) return fail(resp);
    return resp.json();
  }

  async revert(sessionId: string, toStep: number): Promise<number> {
    const resp = await fetch(this.url(`/v1/sessions/${sessionId}/revert`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ to_step: toStep }),
    });
    if (!resp.ok) return fail(resp);
    return (await resp.json()).cursor as number;
  }

  async cancel(sessionId: string): Promise<void> {
    const resp = await fetch(this.url(`/v1/sessions/${sessionId}/cancel`), { method: "POST" });
    if (!resp.ok) return fail(resp);
  }

  async runSweep(
    sessionId: string,
    maskPng: Uint8Array,
    hints: HintUpload[],
    config: Record<string, unknown>,
    axis: string,
    values: number[],
  ): Promise<{ axis: string; cells: { value: number; status: string; image_url?: string; error?: string }[]; contact_sheet_url: string }> {
    const form = new FormData();
    form.append("mask", new Blob([maskPng as BlobPart], { type: "image/png" }), "mask.png");
    for (const [i, hint] of hints.entries()) {
      form.append("hints", new Blob([hint.png as BlobPart], { type: "image/png" }), `hint${i}.png`);
    }
    form.append("hints_meta", JSON.stringify(hints.map((h) => ({ kind: h.kind, opacity: h.opacity }))));
    form.append("config", JSON.stringify(config));
    form.append("axis", axis);
    form.append("values", values.join(","));
    const resp = await fetch(this.url(`/v1/sessions/${sessionId}/sweeps`), { method: "POST", body: form });
    if (!resp.ok) return fail(resp);
    return resp.json();
  }

  async presets(): Promise<import("./tools.js").Preset[]> {
    const resp = await fetch(this.url("/v1/presets"));
    if (!resp.ok) return fail(resp);
    return (await resp.json()).presets;
  }

  imageUrl(path: string): string {
    return this.url(path);
  }
}
