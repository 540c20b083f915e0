import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { AddressInfo } from "node:net";
import type { Server } from "node:http";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { createApp } from "../src/server.js";
import { foldDecisions, loadDecisions, computeTallies } from "../src/decisions.js";
import { CandidateRecord, ReviewDecision, Tallies } from "../src/types.js";

// 1x1 white PNG
const PNG = Buffer.from(
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg==",
  "base64",
);

function fixtureCorpus(dir: string, nRecords = 10, nQas = 3): string {
  const imagesDir = path.join(dir, "images");
  fs.mkdirSync(imagesDir, { recursive: true });
  const lines: string[] = [];
  for (let i = 0; i < nRecords; i++) {
    const id = `rec${String(i).padStart(2, "0")}`;
    const image = `images/${id}.png`;
    fs.writeFileSync(path.join(dir, image), PNG);
    const record: CandidateRecord = {
      record_id: id,
      chart_type: i % 2 ? "bar" : "radar",
      image,
      payload: { title: `chart ${i}`, data: { categories: ["a", "b"], values: [i, i + 1] } },
      qas: Array.from({ length: nQas }, (_, q) => ({
        level: ["literal", "inferential", "reasoning"][q % 3],
        question: `question ${q} about chart ${i}?`,
        answer_long: `answer ${q}.`,
        answer_short: String(q),
      })),
    };
    lines.push(JSON.stringify(record));
  }
  const manifest = path.join(dir, "candidates.jsonl");
  fs.writeFileSync(manifest, lines.join("\n") + "\n");
  return manifest;
}

describe("review service", () => {
  let dir: string;
  let manifest: string;
  let decisionsPath: string;
  let server: Server;
  let base: string;

  beforeEach(async () => {
    dir = fs.mkdtempSync(path.join(os.tmpdir(), "review-"));
    manifest = fixtureCorpus(dir);
    decisionsPath = path.join(dir, "decisions.jsonl");
    const { app } = createApp({
      manifestPath: manifest,
      decisionsPath,
      imagesRoot: dir,
      reviewer: "curator",
    });
    await new Promise<void>((resolve) => {
      server = app.listen(0, resolve);
    });
    base = `http://127.0.0.1:${(server.address() as AddressInfo).port}`;
  });

  afterEach(() => {
    server.close();
  });

  async function getJSON<T>(url: string): Promise<T> {
    const res = await fetch(base + url);
    expect(res.ok).toBe(true);
    return res.json() as Promise<T>;
  }

  async function submit(body: unknown): Promise<Response> {
    return fetch(base + "/api/decisions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  it("pages the record list", async () => {
    const page1 = await getJSON<{ records: unknown[]; total: number }>("/api/records?page=1&page_size=4");
    expect(page1.total).toBe(10);
    expect(page1.records).toHaveLength(4);
    const page3 = await getJSON<{ records: unknown[] }>("/api/records?page=3&page_size=4");
    expect(page3.records).toHaveLength(2);
  });

  it("serves record detail and its image", async () => {
    const detail = await getJSON<CandidateRecord>("/api/records/rec00");
    expect(detail.qas).toHaveLength(3);
    const img = await fetch(`${base}/${detail.image}`);
    expect(img.status).toBe(200);
    const missing = await fetch(`${base}/api/records/ghost`);
    expect(missing.status).toBe(404);
  });

  it("persists a decision durably before acknowledging", async () => {
    const res = await submit({ record_id: "rec01", qa_index: 2, answerable: true, correct: false });
    expect(res.status).toBe(201);
    const onDisk = loadDecisions(decisionsPath);
    expect(onDisk).toHaveLength(1);
    expect(onDisk[0]).toMatchObject({
      record_id: "rec01",
      qa_index: 2,
      answerable: true,
      correct: false,
      reviewer: "curator",
    });
    const detail = await getJSON<{ decisions: ReviewDecision[] }>("/api/records/rec01");
    expect(detail.decisions).toHaveLength(1);
  });

  it("rejects malformed submissions", async () => {
    expect((await submit({ record_id: "ghost", qa_index: 0, answerable: true, correct: true })).status).toBe(400);
    expect((await submit({ record_id: "rec00", qa_index: 99, answerable: true, correct: true })).status).toBe(400);
    expect((await submit({ record_id: "rec00", qa_index: 0, answerable: "yes", correct: true })).status).toBe(400);
  });

  it("scripted full session: export equals fold and matches tallies", async () => {
    const records = await getJSON<{ records: { record_id: string; qa_count: number }[] }>(
      "/api/records?page_size=200",
    );
    let submitted = 0;
    for (const rec of records.records) {
      for (let qa = 0; qa < rec.qa_count; qa++) {
        // reject every 5th QA, mark every 7th unanswerable, accept the rest
        const reject = submitted % 5 === 0;
        const unanswerable = submitted % 7 === 0;
        const res = await submit({
          record_id: rec.record_id,
          qa_index: qa,
          answerable: !unanswerable,
          correct: !reject && !unanswerable,
        });
        expect(res.status).toBe(201);
        submitted += 1;
      }
    }
    expect(submitted).toBe(30);

    const exportRes = await fetch(base + "/api/decisions/export");
    const exported = (await exportRes.text())
      .split("\n")
      .filter(Boolean)
      .map((line) => JSON.parse(line) as ReviewDecision);
    expect(exported).toHaveLength(30); // one row per (record, qa)
    expect(exported).toEqual(foldDecisions(loadDecisions(decisionsPath)));

    const tallies = await getJSON<Tallies>("/api/tallies");
    expect(tallies).toEqual(computeTallies(30, exported));
    expect(tallies.reviewed).toBe(30);
    expect(tallies.remaining).toBe(0);
    const acceptedOnDisk = exported.filter((d) => d.answerable && d.correct).length;
    expect(tallies.accepted).toBe(acceptedOnDisk);
  });

  it("double-submit keeps the last decision as the single exported row", async () => {
    await submit({ record_id: "rec03", qa_index: 1, answerable: true, correct: false });
    await submit({ record_id: "rec03", qa_index: 1, answerable: true, correct: true });
    const exported = (await (await fetch(base + "/api/decisions/export")).text())
      .split("\n")
      .filter(Boolean)
      .map((line) => JSON.parse(line) as ReviewDecision);
    expect(exported).toHaveLength(1);
    expect(exported[0].correct).toBe(true);
    // the raw log keeps both events (append-only)
    expect(loadDecisions(decisionsPath)).toHaveLength(2);
  });

  it("refuses to start on a corrupt decisions file", () => {
    fs.writeFileSync(decisionsPath, "{nope\n");
    expect(() =>
      createApp({ manifestPath: manifest, decisionsPath, imagesRoot: dir }),
    ).toThrowError(/line 1/);
  });

  it("resuming shows prior decisions", async () => {
    await submit({ record_id: "rec05", qa_index: 0, answerable: false, correct: false });
    const { app } = createApp({ manifestPath: manifest, decisionsPath, imagesRoot: dir });
    const resumed = await new Promise<Server>((resolve) => {
      const s = app.listen(0, () => resolve(s));
    });
    try {
      const port = (resumed.address() as AddressInfo).port;
      const res = await fetch(`http://127.0.0.1:${port}/api/records/rec05`);
      const detail = (await res.json()) as { decisions: ReviewDecision[] };
      expect(detail.decisions).toHaveLength(1);
      expect(detail.decisions[0].answerable).toBe(false);
    } finally {
      resumed.close();
    }
  });
});
