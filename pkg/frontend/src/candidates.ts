import fs from "node:fs";

import { CandidateRecord } from "./types.js";

export class CandidatesError extends Error {}

export function loadCandidates(path: string): CandidateRecord[] {
  const text = fs.readFileSync(path, "utf-8");
  const records: CandidateRecord[] = [];
  text.split("\n").forEach((line, i) => {
    if (!line.trim()) return;
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch {
      throw new CandidatesError(`${path}: corrupt candidate at line ${i + 1}`);
    }
    const rec = parsed as CandidateRecord;
    if (typeof rec.record_id !== "string" || !Array.isArray(rec.qas)) {
      throw new CandidatesError(`${path}: invalid candidate at line ${i + 1}`);
    }
    records.push(rec);
  });
  return records;
}
