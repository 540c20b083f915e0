"""Benchmark construction and scoring.

Builds style-variation benchmark records from the filtered corpus gated by
human review decisions (Answerability and Correctness, majority rule), and
scores predictions: relaxed short-answer accuracy per QA level, basic
vs. advanced chart types, and chart-to-table cell matching F1.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from pathlib import Path
from typing import Optional, Protocol, Sequence

from . import chartspec
from .model import (
    BenchmarkRecord,
    ChartData,
    ChartInstance,
    EvalReport,
    QAPair,
    RenderScript,
    ReviewDecision,
    canonical_short_answer,
    parse_numeric,
)

log = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 0.05
AUTO_REVIEWER = "auto"
AUTO_TIMESTAMP = "1970-01-01T00:00:00Z"


class BenchmarkError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Review decisions
# ---------------------------------------------------------------------------

def read_decisions(path: str | Path) -> list[ReviewDecision]:
    decisions = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                decisions.append(ReviewDecision.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise BenchmarkError(f"{path}: bad decision at line {i}: {exc}") from exc
    return decisions


def latest_decisions(decisions: Sequence[ReviewDecision]) -> list[ReviewDecision]:
    """One decision per (record, qa, reviewer): last write wins."""
    by_key: dict[tuple[str, int, str], ReviewDecision] = {}
    for d in decisions:
        by_key[(d.record_id, d.qa_index, d.reviewer)] = d
    return list(by_key.values())


def admitted_map(decisions: Sequence[ReviewDecision]) -> dict[tuple[str, int], bool]:
    """A QA is admitted iff a majority of its reviewers marked it both
    answerable and correct."""
    votes: dict[tuple[str, int], list[bool]] = defaultdict(list)
    for d in latest_decisions(decisions):
        votes[(d.record_id, d.qa_index)].append(d.answerable and d.correct)
    return {key: sum(v) > len(v) / 2 for key, v in votes.items()}


def auto_decisions(
    accepted: Sequence[ChartInstance], data_by_id: dict[str, ChartData]
) -> list[ReviewDecision]:
    """All-yes single-curator decisions, used when no review session has been
    run. Timestamps are fixed so manifests stay byte-reproducible."""
    out = []
    for instance in accepted:
        for idx in range(len(data_by_id[instance.data_id].leveled_qas())):
            out.append(
                ReviewDecision(
                    record_id=instance.id,
                    qa_index=idx,
                    answerable=True,
                    correct=True,
                    reviewer=AUTO_REVIEWER,
                    timestamp=AUTO_TIMESTAMP,
                )
            )
    return out


# ---------------------------------------------------------------------------
# Benchmark construction
# ---------------------------------------------------------------------------

def build_benchmark(
    accepted: Sequence[ChartInstance],
    data_by_id: dict[str, ChartData],
    scripts_by_id: dict[str, RenderScript],
    decisions: Sequence[ReviewDecision],
    *,
    quota_per_type: int = 10_000,
) -> tuple[list[BenchmarkRecord], dict]:
    """Build the benchmark from review-admitted QAs. Records with no admitted
    QA are dropped; payloads keep at least two style variants where the
    corpus provides them. The style group id is the data content hash, so
    identical groups share byte-identical canonical payloads by
    construction."""
    if quota_per_type < 1:
        raise BenchmarkError("quota must be >= 1")
    admitted = admitted_map(decisions)
    for record_id, _idx in admitted:
        if not any(i.id == record_id for i in accepted):
            raise BenchmarkError(f"decision references unknown record {record_id!r}")

    candidates: list[BenchmarkRecord] = []
    for instance in accepted:
        data = data_by_id[instance.data_id]
        leveled = data.leveled_qas()
        kept = tuple(
            qa for idx, qa in enumerate(leveled) if admitted.get((instance.id, idx), False)
        )
        if not kept:
            continue
        script = scripts_by_id[instance.script_id]
        candidates.append(
            BenchmarkRecord(
                id=instance.id,
                image_ref=instance.image_ref or "",
                chart_type=instance.chart_type,
                annotated=script.style.annotated,
                style_group=instance.data_id,
                payload=data.payload,
                qas=kept,
            )
        )

    by_type: dict[str, list[BenchmarkRecord]] = defaultdict(list)
    for rec in candidates:
        by_type[rec.chart_type].append(rec)

    records: list[BenchmarkRecord] = []
    requested_types = sorted({i.chart_type for i in accepted})
    for chart_type in requested_types:
        pool = by_type.get(chart_type, [])
        if not pool:
            log.warning("benchmark: no admitted records for chart type %r, omitting", chart_type)
            continue
        groups: dict[str, list[BenchmarkRecord]] = defaultdict(list)
        for rec in pool:
            groups[rec.style_group].append(rec)
        taken = 0
        for group_id in sorted(groups):
            group = sorted(groups[group_id], key=lambda r: r.id)
            if taken + len(group) <= quota_per_type:
                records.extend(group)
                taken += len(group)
            elif quota_per_type - taken >= 2 or len(group) == 1:
                records.extend(group[: quota_per_type - taken])
                taken = quota_per_type
            if taken >= quota_per_type:
                break

    stats = benchmark_stats(records)
    return records, stats


def benchmark_stats(records: Sequence[BenchmarkRecord]) -> dict:
    """Corpus statistics. Reports the admitted (leveled) QA average and, for
    comparison with corpora counting description/summary QAs too, the same
    average plus the two per-image general QAs every source data file
    carries."""
    if not records:
        return {
            "images": 0,
            "chart_types": 0,
            "avg_qas_per_image": 0.0,
            "avg_qas_incl_description_summary": 0.0,
            "qa_level_counts": {},
            "annotated_fraction": 0.0,
            "style_group_sizes": {},
        }
    level_counts = Counter(qa.level.value for rec in records for qa in rec.qas)
    total_qas = sum(level_counts.values())
    group_sizes = Counter(rec.style_group for rec in records)
    size_hist = Counter(group_sizes.values())
    avg = total_qas / len(records)
    return {
        "images": len(records),
        "chart_types": len({rec.chart_type for rec in records}),
        "avg_qas_per_image": round(avg, 4),
        "avg_qas_incl_description_summary": round(avg + 2.0, 4),
        "qa_level_counts": dict(sorted(level_counts.items())),
        "annotated_fraction": round(sum(1 for r in records if r.annotated) / len(records), 4),
        "style_group_sizes": {str(k): v for k, v in sorted(size_hist.items())},
    }


# ---------------------------------------------------------------------------
# Short-answer scoring
# ---------------------------------------------------------------------------

def score_short_answer(prediction: str, gold: QAPair, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """Relaxed correctness: numeric answers within ``tolerance`` relative
    error (exact match required for a gold of zero), everything else by
    canonicalized string equality. Unparseable predictions are simply
    incorrect."""
    if not gold.answer_short:
        raise BenchmarkError("gold QA lacks a short answer")
    gold_num = parse_numeric(gold.answer_short)
    try:
        pred_text = str(prediction)
    except Exception:
        return False
    if gold_num is not None:
        pred_num = parse_numeric(pred_text)
        if pred_num is None:
            return False
        if gold_num == 0:
            return pred_num == 0
        return abs(pred_num - gold_num) <= tolerance * abs(gold_num)
    return canonical_short_answer(pred_text) == canonical_short_answer(gold.answer_short)


def read_predictions(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise BenchmarkError(f"{path}: bad prediction at line {i}: {exc.msg}") from exc
    return rows


def evaluate(
    predictions: Sequence[dict],
    records: Sequence[BenchmarkRecord],
    *,
    table_predictions: Sequence[dict] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    config_hash: str = "",
) -> EvalReport:
    """Score a predictions list ({record_id, qa_index, answer} rows) against
    the benchmark. Missing predictions count as incorrect and are tallied;
    duplicate keys are an error; prediction order never matters. Optional
    table predictions ({record_id, table} rows) fill the chart-to-table
    precision/recall/F1 fields as means over the predicted records."""
    gold: dict[tuple[str, int], tuple[BenchmarkRecord, QAPair]] = {}
    for rec in records:
        for idx, qa in enumerate(rec.qas):
            gold[(rec.id, idx)] = (rec, qa)

    by_key: dict[tuple[str, int], str] = {}
    for row in predictions:
        key = (str(row["record_id"]), int(row["qa_index"]))
        if key in by_key:
            raise BenchmarkError(f"duplicate prediction for record {key[0]} qa {key[1]}")
        if key not in gold:
            raise BenchmarkError(f"prediction keys unknown (record {key[0]}, qa {key[1]})")
        by_key[key] = str(row.get("answer", ""))

    level_total: Counter[str] = Counter()
    level_correct: Counter[str] = Counter()
    split_total: Counter[str] = Counter()
    split_correct: Counter[str] = Counter()
    missing = 0
    for key, (rec, qa) in gold.items():
        level = qa.level.value
        split = "basic" if rec.chart_type in chartspec.BASIC_CHART_TYPES else "advanced"
        level_total[level] += 1
        split_total[split] += 1
        if key not in by_key:
            missing += 1
            continue
        if score_short_answer(by_key[key], qa, tolerance):
            level_correct[level] += 1
            split_correct[split] += 1

    def ratio(correct: int, total: int) -> float:
        return correct / total if total else 0.0

    record_by_id = {rec.id: rec for rec in records}
    table_scores: list[tuple[float, float, float]] = []
    if table_predictions:
        seen_tables: set[str] = set()
        for row in table_predictions:
            rid = str(row["record_id"])
            if rid in seen_tables:
                raise BenchmarkError(f"duplicate table prediction for record {rid}")
            if rid not in record_by_id:
                raise BenchmarkError(f"table prediction keys unknown record {rid}")
            seen_tables.add(rid)
            rec = record_by_id[rid]
            table_scores.append(
                score_chart_to_table(str(row.get("table", "")), rec.payload, rec.chart_type, tolerance)
            )

    def table_mean(index: int) -> float:
        if not table_scores:
            return 0.0
        return round(sum(s[index] for s in table_scores) / len(table_scores), 6)

    per_level = {
        level: round(ratio(level_correct[level], level_total[level]), 6)
        for level in ("literal", "inferential", "reasoning")
    }
    report = EvalReport(
        per_level_accuracy=per_level,
        basic_accuracy=round(ratio(split_correct["basic"], split_total["basic"]), 6),
        advanced_accuracy=round(ratio(split_correct["advanced"], split_total["advanced"]), 6),
        table_precision=table_mean(0),
        table_recall=table_mean(1),
        table_f1=table_mean(2),
        counts={
            "qas": len(gold),
            "predictions": len(by_key),
            "missing": missing,
            "correct": sum(level_correct.values()),
            "table_predictions": len(table_scores),
        },
        config_hash=config_hash,
    )
    problems = report.validate()
    if problems:
        raise BenchmarkError("; ".join(problems))
    return report


# ---------------------------------------------------------------------------
# Chart-to-table scoring
# ---------------------------------------------------------------------------

def parse_table(text: str) -> list[tuple[str, str, Optional[float]]]:
    """Parse a delimited table (pipe, tab, or comma separated; first row is
    the header, first column the row labels) into (row, col, value)
    triples. Unparseable text yields no triples."""
    rows: list[list[str]] = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line or set(line) <= set("|-: \t+"):
            continue
        if "|" in line:
            cells = [c.strip() for c in line.strip("|").split("|")]
        elif "\t" in line:
            cells = [c.strip() for c in line.split("\t")]
        else:
            cells = [c.strip() for c in line.split(",")]
        if len(cells) >= 2:
            rows.append(cells)
    if len(rows) < 2:
        return []
    header = rows[0][1:]
    triples = []
    for row in rows[1:]:
        label = row[0]
        for col, cell in zip(header, row[1:]):
            triples.append((label, col, parse_numeric(cell)))
    return triples


def gold_cells(payload: dict, chart_type: str) -> list[tuple[str, str, float]]:
    return chartspec.flatten_table(chart_type, payload).cells()


def score_chart_to_table(
    prediction_text: str,
    payload: dict,
    chart_type: str,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[float, float, float]:
    """Cell-level precision/recall/F1 between a predicted table and the gold
    triples flattened from the payload. A cell matches when both labels match
    after canonicalization and the value is within the relative tolerance."""
    gold = gold_cells(payload, chart_type)
    pred = parse_table(prediction_text or "")
    if not pred or not gold:
        return 0.0, 0.0, 0.0
    remaining = list(gold)
    matched = 0
    for row, col, value in pred:
        if value is None:
            continue
        for i, (g_row, g_col, g_val) in enumerate(remaining):
            if canonical_short_answer(row) != canonical_short_answer(g_row):
                continue
            if canonical_short_answer(col) != canonical_short_answer(g_col):
                continue
            if g_val == 0:
                ok = value == 0
            else:
                ok = abs(value - g_val) <= tolerance * abs(g_val)
            if ok:
                matched += 1
                del remaining[i]
                break
    precision = matched / len(pred)
    recall = matched / len(gold)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


# ---------------------------------------------------------------------------
# Long answers (non-canonical helper)
# ---------------------------------------------------------------------------

class LongAnswerJudge(Protocol):
    """Pluggable judge for description/summary answers. Long answers are NOT
    part of the accuracy metric; this hook exists for ad-hoc inspection."""

    def score(self, prediction: str, gold_long: str) -> float:
        ...


class KeywordOverlapJudge:
    """Crude keyword-overlap heuristic (recall of gold content words). Not a
    calibrated metric; clearly non-canonical."""

    def score(self, prediction: str, gold_long: str) -> float:
        def words(text: str) -> set[str]:
            return {w for w in "".join(c if c.isalnum() else " " for c in text.lower()).split() if len(w) > 2}

        gold_words = words(gold_long)
        if not gold_words:
            return 1.0
        return len(gold_words & words(prediction)) / len(gold_words)
