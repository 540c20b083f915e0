/** JSON-over-HTTP review service.
 *
 * Serves the candidate corpus (paged list, record detail, images) and
 * records review decisions. A decision is appended and fsynced to the
 * decisions file before the POST is acknowledged, so a crash never loses an
 * acknowledged decision. The service never mutates the corpus manifest or
 * the images.
 */

import path from "node:path";

import express, { Express } from "express";

import { loadCandidates } from "./candidates.js";
import { appendDecision, computeTallies, foldDecisions, loadDecisions } from "./decisions.js";
import { CandidateRecord, ReviewDecision } from "./types.js";

export interface ServerOptions {
  manifestPath: string;
  decisionsPath: string;
  imagesRoot: string;
  reviewer?: string;
  publicDir?: string;
}

export interface ReviewApp {
  app: Express;
  records: CandidateRecord[];
}

export function createApp(options: ServerOptions): ReviewApp {
  const records = loadCandidates(options.manifestPath);
  // Refuse to start on a corrupt decisions file (reports the line number).
  let decisions: ReviewDecision[] = loadDecisions(options.decisionsPath);
  const byId = new Map(records.map((r) => [r.record_id, r]));
  const reviewer = options.reviewer ?? "reviewer-1";
  const totalQas = records.reduce((n, r) => n + r.qas.length, 0);

  const app = express();
  app.use(express.json());

  app.get("/api/records", (req, res) => {
    const page = Math.max(parseInt(String(req.query.page ?? "1"), 10) || 1, 1);
    const pageSize = Math.min(Math.max(parseInt(String(req.query.page_size ?? "20"), 10) || 20, 1), 200);
    const start = (page - 1) * pageSize;
    const slice = records.slice(start, start + pageSize).map((r) => ({
      record_id: r.record_id,
      chart_type: r.chart_type,
      image: r.image,
      qa_count: r.qas.length,
    }));
    res.json({ records: slice, total: records.length, page, page_size: pageSize });
  });

  app.get("/api/records/:id", (req, res) => {
    const record = byId.get(req.params.id);
    if (!record) {
      res.status(404).json({ error: `unknown record ${req.params.id}` });
      return;
    }
    const mine = foldDecisions(decisions).filter((d) => d.record_id === record.record_id);
    res.json({ ...record, decisions: mine });
  });

  app.post("/api/decisions", (req, res) => {
    const body = req.body ?? {};
    const record = byId.get(body.record_id);
    if (!record) {
      res.status(400).json({ error: `unknown record ${body.record_id}` });
      return;
    }
    const qaIndex = Number(body.qa_index);
    if (!Number.isInteger(qaIndex) || qaIndex < 0 || qaIndex >= record.qas.length) {
      res.status(400).json({ error: `qa_index out of range for ${body.record_id}` });
      return;
    }
    if (typeof body.answerable !== "boolean" || typeof body.correct !== "boolean") {
      res.status(400).json({ error: "answerable and correct must be booleans" });
      return;
    }
    const decision: ReviewDecision = {
      record_id: record.record_id,
      qa_index: qaIndex,
      answerable: body.answerable,
      correct: body.correct,
      reviewer: typeof body.reviewer === "string" && body.reviewer ? body.reviewer : reviewer,
      timestamp: new Date().toISOString(),
    };
    appendDecision(options.decisionsPath, decision);
    decisions.push(decision);
    res.status(201).json(decision);
  });

  app.get("/api/decisions/export", (_req, res) => {
    const folded = foldDecisions(decisions);
    res.type("application/x-ndjson");
    res.send(folded.map((d) => JSON.stringify(d)).join("\n") + (folded.length ? "\n" : ""));
  });

  app.get("/api/tallies", (_req, res) => {
    res.json(computeTallies(totalQas, decisions));
  });

  app.use("/images", express.static(path.resolve(options.imagesRoot, "images")));
  const publicDir = options.publicDir ?? path.join(path.dirname(new URL(import.meta.url).pathname), "..", "public");
  app.use("/", express.static(publicDir));

  return { app, records };
}
