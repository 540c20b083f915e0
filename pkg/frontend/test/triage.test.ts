import { describe, expect, it } from "vitest";

import { applyKey, newSession, progress, QARef } from "../src/triage.js";

const queue: QARef[] = [
  { record_id: "r1", qa_index: 0 },
  { record_id: "r1", qa_index: 1 },
  { record_id: "r2", qa_index: 0 },
];

describe("keyboard triage", () => {
  it("accept records a positive decision and advances", () => {
    const { state, decision } = applyKey(newSession(queue), "a");
    expect(decision).toEqual({ record_id: "r1", qa_index: 0, answerable: true, correct: true });
    expect(state.cursor).toBe(1);
    expect(progress(state)).toEqual({ reviewed: 1, total: 3 });
  });

  it("reject keys map to answerability/correctness flags", () => {
    const unanswerable = applyKey(newSession(queue), "x").decision;
    expect(unanswerable).toMatchObject({ answerable: false, correct: false });
    const incorrect = applyKey(newSession(queue), "c").decision;
    expect(incorrect).toMatchObject({ answerable: true, correct: false });
  });

  it("skip advances without recording", () => {
    const { state, decision } = applyKey(newSession(queue), "s");
    expect(decision).toBeUndefined();
    expect(state.cursor).toBe(1);
    expect(progress(state).reviewed).toBe(0);
  });

  it("unknown keys are ignored", () => {
    const start = newSession(queue);
    const { state, decision } = applyKey(start, "q");
    expect(decision).toBeUndefined();
    expect(state.cursor).toBe(start.cursor);
  });

  it("accepting the last QA completes the session", () => {
    let state = newSession(queue);
    for (let i = 0; i < queue.length; i++) {
      state = applyKey(state, "a").state;
    }
    expect(state.complete).toBe(true);
    expect(progress(state)).toEqual({ reviewed: 3, total: 3 });
  });

  it("resuming skips already reviewed QAs", () => {
    const state = newSession(queue, [queue[0]]);
    expect(state.cursor).toBe(1);
    expect(progress(state).reviewed).toBe(1);
  });

  it("skipped QAs stay unreviewed to the end", () => {
    let state = newSession(queue);
    state = applyKey(state, "s").state;
    state = applyKey(state, "a").state;
    state = applyKey(state, "a").state;
    expect(state.complete).toBe(true);
    expect(progress(state).reviewed).toBe(2);
  });
});
