/**
 * UI state transitions. Session history is never mutated locally: every
 * reducer that touches it only installs a fresh server snapshot, so the
 * timeline always shows exactly what the server committed (including the
 * truncate-and-append behavior of editing after a revert).
 */

import type { SessionView } from "./api.js";

export interface AppState {
  session: SessionView | null;
  busy: boolean;
  error: string | null;
  errorRetryable: boolean;
  /** step index the before/after slider compares against (-1 = base). */
  compareTo: number;
}

export const initialState: AppState = {
  session: null,
  busy: false,
  error: null,
  errorRetryable: false,
  compareTo: -1,
};

export function withSession(state: AppState, view: SessionView): AppState {
  return {
    ...state,
    session: view,
    busy: false,
    error: null,
    errorRetryable: false,
    compareTo: Math.min(state.compareTo, view.cursor),
  };
}

export function withBusy(state: AppState): AppState {
  return { ...state, busy: true, error: null, errorRetryable: false };
}

export function withError(state: AppState, message: string, retryable: boolean): AppState {
  return { ...state, busy: false, error: message, errorRetryable: retryable };
}

/** URL of the image the view compares the active result against. */
export function compareUrl(state: AppState): string | null {
  const session = state.session;
  if (!session) return null;
  if (state.compareTo < 0) return session.base_url;
  const step = session.steps[state.compareTo];
  return step ? step.result_url : session.base_url;
}

export interface TimelineEntry {
  index: number;
  label: string;
  active: boolean;
  thumbnailUrl: string;
}

/** History strip straight from the server snapshot; the entry at the cursor
 * is the active one, entries after it are the revert-abandoned branch that
 * the next run will truncate. */
export function timeline(view: SessionView): TimelineEntry[] {
  const entries: TimelineEntry[] = [
    { index: -1, label: "base", active: view.cursor === -1, thumbnailUrl: view.base_url },
  ];
  for (const step of view.steps) {
    entries.push({
      index: step.index,
      label: `step ${step.index}`,
      active: step.index === view.cursor,
      thumbnailUrl: step.thumbnail_url,
    });
  }
  return entries;
}
