import { describe, expect, it } from "vitest";

import type { SessionView } from "../src/api.js";
import {
  compareUrl,
  initialState,
  timeline,
  withBusy,
  withError,
  withSession,
} from "../src/state.js";

function view(cursor: number, stepCount: number): SessionView {
  return {
    id: "s1",
    width: 96,
    height: 80,
    cursor,
    base_url: "/v1/sessions/s1/base.png",
    active_url: cursor < 0 ? "/v1/sessions/s1/base.png" : `/v1/sessions/s1/steps/${cursor}/result.png`,
    steps: Array.from({ length: stepCount }, (_, i) => ({
      index: i,
      config: {},
      result_url: `/v1/sessions/s1/steps/${i}/result.png`,
      mask_url: `/v1/sessions/s1/steps/${i}/mask.png`,
      hint_url: `/v1/sessions/s1/steps/${i}/hint.png`,
      thumbnail_url: `/v1/sessions/s1/steps/${i}/result.png`,
    })),
  };
}

describe("state transitions", () => {
  it("installing a session clears busy and error", () => {
    const busy = withBusy(withError(initialState, "boom", true));
    const next = withSession(busy, view(0, 1));
    expect(next.busy).toBe(false);
    expect(next.error).toBeNull();
    expect(next.session?.cursor).toBe(0);
  });

  it("errors keep the previous session and record retryability", () => {
    const withS = withSession(initialState, view(1, 2));
    const errored = withError(withS, "backend down", true);
    expect(errored.session?.steps.length).toBe(2);
    expect(errored.errorRetryable).toBe(true);
  });

  it("the compare target never points past the cursor", () => {
    const ahead = { ...withSession(initialState, view(2, 3)), compareTo: 2 };
    const reverted = withSession(ahead, view(0, 3));
    expect(reverted.compareTo).toBe(0);
  });
});

describe("timeline rendering", () => {
  it("always renders from the server snapshot, base first", () => {
    const entries = timeline(view(1, 3));
    expect(entries.map((e) => e.index)).toEqual([-1, 0, 1, 2]);
    expect(entries.map((e) => e.active)).toEqual([false, false, true, false]);
  });

  it("a post-revert snapshot with truncated steps renders the shorter chain", () => {
    // the server truncates abandoned steps on the next commit; the UI simply
    // mirrors whatever snapshot it gets
    const before = timeline(view(0, 3));
    expect(before).toHaveLength(4);
    const afterCommit = timeline(view(1, 2));
    expect(afterCommit.map((e) => e.index)).toEqual([-1, 0, 1]);
    expect(afterCommit[2].active).toBe(true);
  });
});

describe("compare url", () => {
  it("defaults to the base image", () => {
    const s = withSession(initialState, view(0, 1));
    expect(compareUrl(s)).toBe("/v1/sessions/s1/base.png");
  });

  it("points at the chosen earlier step", () => {
    const s = { ...withSession(initialState, view(2, 3)), compareTo: 1 };
    expect(compareUrl(s)).toBe("/v1/sessions/s1/steps/1/result.png");
  });
});
