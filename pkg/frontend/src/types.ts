/** Shared wire types. These mirror the pipeline's file formats exactly:
 * candidates come from `out/review/candidates.jsonl`, and the decisions file
 * this tool appends is what `chartforge run benchmark --decisions` reads. */

export interface CandidateQA {
  level: string;
  question: string;
  answer_long: string;
  answer_short?: string;
}

export interface CandidateRecord {
  record_id: string;
  chart_type: string;
  image: string;
  payload: unknown;
  qas: CandidateQA[];
}

export interface ReviewDecision {
  record_id: string;
  qa_index: number;
  answerable: boolean;
  correct: boolean;
  reviewer: string;
  timestamp: string;
}

export interface Tallies {
  total_qas: number;
  reviewed: number;
  accepted: number;
  rejected: number;
  remaining: number;
}

export function isDecision(value: unknown): value is ReviewDecision {
  if (typeof value !== "object" || value === null) return false;
  const d = value as Record<string, unknown>;
  return (
    typeof d.record_id === "string" &&
    typeof d.qa_index === "number" &&
    Number.isInteger(d.qa_index) &&
    d.qa_index >= 0 &&
    typeof d.answerable === "boolean" &&
    typeof d.correct === "boolean" &&
    typeof d.reviewer === "string"
  );
}
