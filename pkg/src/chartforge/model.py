"""Shared domain types, canonical serialization, and id hashing.

Every pipeline stage reads and writes these types; they are immutable value
objects safe to share across workers. Canonical JSON (sorted keys, compact
separators, numbers trimmed to at most 6 significant digits) is used both for
content-hash ids and for training-target serialization so round-trip tests
can compare exact bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional


class ModelError(ValueError):
    """A record violates its type invariants."""


# ---------------------------------------------------------------------------
# Canonical numbers and JSON
# ---------------------------------------------------------------------------

def format_number(value: float | int) -> str:
    """Canonical short form of a number: integers bare, floats trimmed to
    at most 6 significant digits with no exponent notation for integral
    results. Idempotent: format(float(format(x))) == format(x)."""
    if isinstance(value, bool):
        raise ModelError("booleans are not numbers")
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        raise ModelError(f"non-finite number: {value!r}")
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    rounded = float(f"{value:.6g}")
    if rounded == int(rounded) and abs(rounded) < 1e15:
        return str(int(rounded))
    return repr(rounded)


def _canonicalize(value: Any) -> Any:
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, float):
        text = format_number(value)
        return int(text) if re.fullmatch(r"-?\d+", text) else float(text)
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise ModelError(f"non-string key in document: {key!r}")
            out[key] = _canonicalize(item)
        return out
    if isinstance(value, (list, tuple)):
        return [_canonicalize(item) for item in value]
    raise ModelError(f"unsupported value in document: {type(value).__name__}")


def canonical_json(doc: Any) -> str:
    """Deterministic serialization: sorted keys, minimal whitespace, numbers
    via format_number. Used for payload hashing and extraction targets."""
    return json.dumps(_canonicalize(doc), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def dumps_stable(doc: Any) -> str:
    """Stable JSON for manifest lines: sorted keys, compact separators."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_id(kind: str, text: str) -> str:
    """Content-hash id: sha256 over a kind tag plus canonical text, truncated
    to 16 hex chars. Stable across resumes."""
    return hashlib.sha256(f"{kind}:{text}".encode("utf-8")).hexdigest()[:16]


_THOUSANDS = re.compile(r"(?<=\d),(?=\d\d\d\b)")


def parse_numeric(text: str) -> Optional[float]:
    """Parse a short answer as a number, tolerating thousands separators and
    a trailing percent sign. Returns None when not numeric."""
    s = str(text).strip().lower()
    if not s:
        return None
    if s.endswith("%"):
        s = s[:-1].strip()
    s = _THOUSANDS.sub("", s)
    try:
        return float(s)
    except ValueError:
        return None


def canonical_short_answer(text: str) -> str:
    """Normalize a short answer for matching: trim, lowercase, collapse
    whitespace; numeric answers become their canonical number string."""
    s = " ".join(str(text).strip().lower().split())
    value = parse_numeric(s)
    if value is not None:
        return format_number(value)
    return s


# ---------------------------------------------------------------------------
# Key paths
# ---------------------------------------------------------------------------

VALUE_KINDS = ("string", "number", "array", "object")


def kind_of(value: Any) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, str):
        return "string"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, list):
        return "array"
    if isinstance(value, dict):
        return "object"
    return "null" if value is None else type(value).__name__


def resolve_path(doc: Any, path: str) -> tuple[bool, Any]:
    """Walk a dotted key path through nested objects. Arrays are terminal:
    paths never index into them. Returns (found, value)."""
    node = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return False, None
        node = node[part]
    return True, node


@dataclass(frozen=True)
class KeyPath:
    path: str
    kind: str

    def validate(self) -> list[str]:
        problems = []
        if not self.path:
            problems.append("empty key path")
        if self.kind not in VALUE_KINDS:
            problems.append(f"unknown value kind {self.kind!r} at {self.path!r}")
        return problems

    def to_dict(self) -> dict:
        return {"path": self.path, "kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "KeyPath":
        return cls(path=d["path"], kind=d["kind"])


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class QALevel(str, Enum):
    DESCRIPTION = "description"
    SUMMARY = "summary"
    LITERAL = "literal"
    INFERENTIAL = "inferential"
    REASONING = "reasoning"


LEVELED = (QALevel.LITERAL, QALevel.INFERENTIAL, QALevel.REASONING)

# Required QA plan per data file: level -> count.
QA_PLAN = {
    QALevel.DESCRIPTION: 1,
    QALevel.SUMMARY: 1,
    QALevel.LITERAL: 5,
    QALevel.INFERENTIAL: 5,
    QALevel.REASONING: 5,
}
QA_TOTAL = sum(QA_PLAN.values())


class RenderStatus(str, Enum):
    PENDING = "pending"
    OK = "ok"
    EXEC_ERROR = "exec_error"
    TIMEOUT = "timeout"
    BAD_IMAGE = "bad_image"


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


class SampleVariant(str, Enum):
    GENERAL = "general"
    DATA_DRIVEN = "data_driven"
    JSON_ONLY = "json_only"
    PRETRAIN_CAPTION = "pretrain_caption"
    PRETRAIN_JSON = "pretrain_json"


class TurnRole(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"


# ---------------------------------------------------------------------------
# Template and chart-type spec
# ---------------------------------------------------------------------------

# Fixed scaffold every template must provide: general chart information plus
# the raw data section.
TITLE_PATH = "title"
X_AXIS_PATH = "x_axis"
Y_AXIS_PATH = "y_axis"
DATA_SECTION = "data"


@dataclass(frozen=True)
class JsonTemplate:
    exemplar: dict
    required_paths: tuple[KeyPath, ...]
    data_section_path: str = DATA_SECTION

    def validate(self) -> list[str]:
        problems: list[str] = []
        for anchor in (TITLE_PATH, X_AXIS_PATH, Y_AXIS_PATH, self.data_section_path):
            found, _ = resolve_path(self.exemplar, anchor)
            if not found:
                problems.append(f"exemplar missing required section {anchor!r}")
        for kp in self.required_paths:
            problems.extend(kp.validate())
            found, value = resolve_path(self.exemplar, kp.path)
            if not found:
                problems.append(f"required path {kp.path!r} does not resolve in exemplar")
            elif kind_of(value) != kp.kind:
                problems.append(
                    f"required path {kp.path!r} is {kind_of(value)}, declared {kp.kind}"
                )
        return problems

    def to_dict(self) -> dict:
        return {
            "exemplar": self.exemplar,
            "required_paths": [kp.to_dict() for kp in self.required_paths],
            "data_section_path": self.data_section_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JsonTemplate":
        return cls(
            exemplar=d["exemplar"],
            required_paths=tuple(KeyPath.from_dict(p) for p in d["required_paths"]),
            data_section_path=d.get("data_section_path", DATA_SECTION),
        )


def conformance_report(payload: Any, template: JsonTemplate) -> tuple[bool, list[str], list[str]]:
    """Structural conformance of a payload against a template: every required
    path must resolve with its declared kind (array lengths may differ).
    Extra keys are allowed but reported. Returns (ok, missing, extra)."""
    missing: list[str] = []
    for kp in template.required_paths:
        found, value = resolve_path(payload, kp.path)
        if not found:
            missing.append(kp.path)
        elif kind_of(value) != kp.kind:
            missing.append(f"{kp.path} (kind {kind_of(value)} != {kp.kind})")
    extra = sorted(_extra_keys(payload, template.exemplar, ""))
    return (not missing), missing, extra


def _extra_keys(payload: Any, exemplar: Any, prefix: str) -> list[str]:
    if not isinstance(payload, dict) or not isinstance(exemplar, dict):
        return []
    out: list[str] = []
    for key, value in payload.items():
        path = f"{prefix}{key}"
        if key not in exemplar:
            out.append(path)
        else:
            out.extend(_extra_keys(value, exemplar[key], path + "."))
    return out


@dataclass(frozen=True)
class ChartTypeSpec:
    name: str
    template: JsonTemplate
    readme: str

    @property
    def id(self) -> str:
        # manifests key uniqueness on ids; a registry holds one spec per name
        return self.name

    def validate(self) -> list[str]:
        problems: list[str] = []
        if not self.name:
            problems.append("chart type name is empty")
        if not self.readme.strip():
            problems.append("readme is empty")
        problems.extend(self.template.validate())
        for key in self.template.exemplar:
            if key not in self.readme:
                problems.append(f"readme never mentions top-level key {key!r}")
        return problems

    def to_dict(self) -> dict:
        return {"name": self.name, "template": self.template.to_dict(), "readme": self.readme}

    @classmethod
    def from_dict(cls, d: dict) -> "ChartTypeSpec":
        return cls(name=d["name"], template=JsonTemplate.from_dict(d["template"]), readme=d["readme"])


# ---------------------------------------------------------------------------
# QA pairs and chart data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QAPair:
    level: QALevel
    question: str
    answer_long: str
    answer_short: Optional[str] = None

    def validate(self) -> list[str]:
        problems = []
        if not self.question.strip():
            problems.append("empty question")
        if not self.answer_long.strip():
            problems.append("empty long answer")
        if self.level in LEVELED and not (self.answer_short or "").strip():
            problems.append(f"{self.level.value} QA lacks a short answer")
        return problems

    def to_dict(self) -> dict:
        d = {"level": self.level.value, "question": self.question, "answer_long": self.answer_long}
        if self.answer_short is not None:
            d["answer_short"] = self.answer_short
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QAPair":
        return cls(
            level=QALevel(d["level"]),
            question=d["question"],
            answer_long=d["answer_long"],
            answer_short=d.get("answer_short"),
        )


def qa_plan_violations(qas: list[QAPair]) -> list[str]:
    """Check the 1/1/5/5/5 distribution across the five QA levels."""
    problems = []
    if len(qas) != QA_TOTAL:
        problems.append(f"expected {QA_TOTAL} QAs, got {len(qas)}")
    for level, want in QA_PLAN.items():
        got = sum(1 for qa in qas if qa.level is level)
        if got != want:
            problems.append(f"expected {want} {level.value} QAs, got {got}")
    return problems


@dataclass(frozen=True)
class ChartData:
    id: str
    chart_type: str
    topic: str
    payload: dict
    qas: tuple[QAPair, ...]

    @classmethod
    def create(cls, chart_type: str, topic: str, payload: dict, qas: list[QAPair]) -> "ChartData":
        did = content_id("chart_data", f"{chart_type}:{canonical_json(payload)}")
        return cls(id=did, chart_type=chart_type, topic=topic, payload=payload, qas=tuple(qas))

    def leveled_qas(self) -> list[QAPair]:
        return [qa for qa in self.qas if qa.level in LEVELED]

    def validate(self) -> list[str]:
        problems = []
        if not self.id:
            problems.append("empty id")
        if not self.chart_type:
            problems.append("empty chart type")
        problems.extend(qa_plan_violations(list(self.qas)))
        for i, qa in enumerate(self.qas):
            problems.extend(f"qa[{i}]: {p}" for p in qa.validate())
        return problems

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "chart_type": self.chart_type,
            "topic": self.topic,
            "payload": self.payload,
            "qas": [qa.to_dict() for qa in self.qas],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChartData":
        return cls(
            id=d["id"],
            chart_type=d["chart_type"],
            topic=d["topic"],
            payload=d["payload"],
            qas=tuple(QAPair.from_dict(q) for q in d["qas"]),
        )


# ---------------------------------------------------------------------------
# Render scripts and styles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StyleDescriptor:
    color_scheme: str
    legend: str
    grid: str
    font: str
    mark_texture: str
    annotated: bool

    def tokens(self) -> dict[str, str]:
        return {
            "color_scheme": self.color_scheme,
            "legend": self.legend,
            "grid": self.grid,
            "font": self.font,
            "mark_texture": self.mark_texture,
        }

    def validate(self) -> list[str]:
        problems = [f"empty style token {name!r}" for name, tok in self.tokens().items() if not tok]
        if not isinstance(self.annotated, bool):
            problems.append("annotated flag must be an explicit boolean")
        return problems

    def to_dict(self) -> dict:
        d = dict(self.tokens())
        d["annotated"] = self.annotated
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StyleDescriptor":
        return cls(
            color_scheme=d["color_scheme"],
            legend=d["legend"],
            grid=d["grid"],
            font=d["font"],
            mark_texture=d["mark_texture"],
            annotated=d["annotated"],
        )


# The fixed I/O contract of every renderer program: first positional argument
# is the JSON payload path, second is the output image path.
IO_ARG_DATA = "sys.argv[1]"
IO_ARG_OUT = "sys.argv[2]"


@dataclass(frozen=True)
class RenderScript:
    id: str
    chart_type: str
    backend_name: str
    style: StyleDescriptor
    source: str

    @classmethod
    def create(cls, chart_type: str, backend_name: str, style: StyleDescriptor, source: str) -> "RenderScript":
        sid = content_id("render_script", f"{chart_type}:{source}")
        return cls(id=sid, chart_type=chart_type, backend_name=backend_name, style=style, source=source)

    def validate(self) -> list[str]:
        problems = []
        if not self.source.strip():
            problems.append("empty script source")
        else:
            for placeholder in (IO_ARG_DATA, IO_ARG_OUT):
                if placeholder not in self.source:
                    problems.append(f"script does not honor the I/O contract: missing {placeholder}")
        if not self.backend_name:
            problems.append("empty backend name")
        problems.extend(self.style.validate())
        return problems

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "chart_type": self.chart_type,
            "backend_name": self.backend_name,
            "style": self.style.to_dict(),
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RenderScript":
        return cls(
            id=d["id"],
            chart_type=d["chart_type"],
            backend_name=d["backend_name"],
            style=StyleDescriptor.from_dict(d["style"]),
            source=d["source"],
        )


# ---------------------------------------------------------------------------
# Instances and filter reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FilterReport:
    structure_ok: bool
    exec_ok: bool
    ocr_score: float
    threshold: float
    verdict: Verdict
    reasons: tuple[str, ...] = ()

    def validate(self) -> list[str]:
        problems = []
        if not 0.0 <= self.ocr_score <= 1.0:
            problems.append(f"ocr score {self.ocr_score} outside [0, 1]")
        should_accept = self.structure_ok and self.exec_ok and self.ocr_score >= self.threshold
        if (self.verdict is Verdict.ACCEPT) != should_accept:
            problems.append("verdict inconsistent with structure/exec/ocr checks")
        return problems

    def to_dict(self) -> dict:
        return {
            "structure_ok": self.structure_ok,
            "exec_ok": self.exec_ok,
            "ocr_score": self.ocr_score,
            "threshold": self.threshold,
            "verdict": self.verdict.value,
            "reasons": list(self.reasons),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FilterReport":
        return cls(
            structure_ok=d["structure_ok"],
            exec_ok=d["exec_ok"],
            ocr_score=d["ocr_score"],
            threshold=d["threshold"],
            verdict=Verdict(d["verdict"]),
            reasons=tuple(d.get("reasons", [])),
        )


@dataclass(frozen=True)
class ChartInstance:
    data_id: str
    script_id: str
    chart_type: str
    render_status: RenderStatus = RenderStatus.PENDING
    image_ref: Optional[str] = None
    stderr_tail: Optional[str] = None
    filter: Optional[FilterReport] = None

    @property
    def id(self) -> str:
        return content_id("chart_instance", f"{self.data_id}:{self.script_id}")

    def validate(self) -> list[str]:
        problems = []
        if not self.data_id or not self.script_id:
            problems.append("instance missing data or script id")
        if (self.image_ref is not None) != (self.render_status is RenderStatus.OK):
            problems.append("image_ref must be present exactly when render status is ok")
        if self.filter is not None:
            problems.extend(self.filter.validate())
        return problems

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "id": self.id,
            "data_id": self.data_id,
            "script_id": self.script_id,
            "chart_type": self.chart_type,
            "render_status": self.render_status.value,
        }
        if self.image_ref is not None:
            d["image_ref"] = self.image_ref
        if self.stderr_tail is not None:
            d["stderr_tail"] = self.stderr_tail
        if self.filter is not None:
            d["filter"] = self.filter.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChartInstance":
        return cls(
            data_id=d["data_id"],
            script_id=d["script_id"],
            chart_type=d["chart_type"],
            render_status=RenderStatus(d["render_status"]),
            image_ref=d.get("image_ref"),
            stderr_tail=d.get("stderr_tail"),
            filter=FilterReport.from_dict(d["filter"]) if d.get("filter") else None,
        )


# ---------------------------------------------------------------------------
# Training samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Turn:
    role: TurnRole
    content: str
    image_ref: Optional[str] = None

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"role": self.role.value, "content": self.content}
        if self.image_ref is not None:
            d["image_ref"] = self.image_ref
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Turn":
        return cls(role=TurnRole(d["role"]), content=d["content"], image_ref=d.get("image_ref"))


@dataclass(frozen=True)
class TrainingSample:
    id: str
    variant: SampleVariant
    turns: tuple[Turn, ...]
    source_ids: tuple[str, ...] = ()

    def image_refs(self) -> list[str]:
        return [t.image_ref for t in self.turns if t.image_ref is not None]

    def validate(self) -> list[str]:
        problems = []
        if not self.turns:
            problems.append("sample has no turns")
            return problems
        for i, turn in enumerate(self.turns):
            if not turn.content.strip():
                problems.append(f"turn[{i}] has empty content")
        if self.variant is SampleVariant.JSON_ONLY and self.image_refs():
            problems.append("json_only sample references an image")
        if self.variant is SampleVariant.DATA_DRIVEN:
            if len(self.turns) != 4:
                problems.append(f"data_driven sample must have 4 turns, got {len(self.turns)}")
            elif self.turns[0].image_ref is None:
                problems.append("data_driven sample missing image on first turn")
        if self.variant is SampleVariant.GENERAL:
            if len(self.turns) != 2:
                problems.append(f"general sample must have 2 turns, got {len(self.turns)}")
            elif self.turns[0].image_ref is None:
                problems.append("general sample missing image on first user turn")
        roles = [t.role for t in self.turns]
        expect = [TurnRole.USER if i % 2 == 0 else TurnRole.ASSISTANT for i in range(len(roles))]
        if roles != expect:
            problems.append("turns must alternate user/assistant starting with user")
        return problems

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "variant": self.variant.value,
            "turns": [t.to_dict() for t in self.turns],
            "source_ids": list(self.source_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingSample":
        return cls(
            id=d["id"],
            variant=SampleVariant(d["variant"]),
            turns=tuple(Turn.from_dict(t) for t in d["turns"]),
            source_ids=tuple(d.get("source_ids", [])),
        )


# ---------------------------------------------------------------------------
# Benchmark records, review decisions, eval reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkRecord:
    id: str
    image_ref: str
    chart_type: str
    annotated: bool
    style_group: str
    payload: dict
    qas: tuple[QAPair, ...]

    def validate(self) -> list[str]:
        problems = []
        if not self.image_ref:
            problems.append("benchmark record missing image")
        if not self.style_group:
            problems.append("benchmark record missing style group")
        for i, qa in enumerate(self.qas):
            if qa.level not in LEVELED:
                problems.append(f"qa[{i}] level {qa.level.value} not allowed in benchmark")
            problems.extend(f"qa[{i}]: {p}" for p in qa.validate())
        return problems

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "image_ref": self.image_ref,
            "chart_type": self.chart_type,
            "annotated": self.annotated,
            "style_group": self.style_group,
            "payload": self.payload,
            "qas": [qa.to_dict() for qa in self.qas],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkRecord":
        return cls(
            id=d["id"],
            image_ref=d["image_ref"],
            chart_type=d["chart_type"],
            annotated=d["annotated"],
            style_group=d["style_group"],
            payload=d["payload"],
            qas=tuple(QAPair.from_dict(q) for q in d["qas"]),
        )


@dataclass(frozen=True)
class ReviewDecision:
    record_id: str
    qa_index: int
    answerable: bool
    correct: bool
    reviewer: str
    timestamp: str

    def validate(self) -> list[str]:
        problems = []
        if not self.record_id:
            problems.append("decision missing record id")
        if self.qa_index < 0:
            problems.append("negative qa index")
        if not self.reviewer:
            problems.append("decision missing reviewer id")
        return problems

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "qa_index": self.qa_index,
            "answerable": self.answerable,
            "correct": self.correct,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewDecision":
        return cls(
            record_id=d["record_id"],
            qa_index=int(d["qa_index"]),
            answerable=bool(d["answerable"]),
            correct=bool(d["correct"]),
            reviewer=d["reviewer"],
            timestamp=d.get("timestamp", ""),
        )


@dataclass(frozen=True)
class EvalReport:
    per_level_accuracy: dict[str, float]
    basic_accuracy: float
    advanced_accuracy: float
    table_precision: float
    table_recall: float
    table_f1: float
    counts: dict[str, int]
    config_hash: str = ""

    def validate(self) -> list[str]:
        problems = []
        values = list(self.per_level_accuracy.values()) + [
            self.basic_accuracy,
            self.advanced_accuracy,
            self.table_precision,
            self.table_recall,
            self.table_f1,
        ]
        for v in values:
            if not 0.0 <= v <= 1.0:
                problems.append(f"accuracy {v} outside [0, 1]")
        return problems

    def to_dict(self) -> dict:
        return {
            "per_level_accuracy": dict(self.per_level_accuracy),
            "basic_accuracy": self.basic_accuracy,
            "advanced_accuracy": self.advanced_accuracy,
            "table_precision": self.table_precision,
            "table_recall": self.table_recall,
            "table_f1": self.table_f1,
            "counts": dict(self.counts),
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            per_level_accuracy=d["per_level_accuracy"],
            basic_accuracy=d["basic_accuracy"],
            advanced_accuracy=d["advanced_accuracy"],
            table_precision=d["table_precision"],
            table_recall=d["table_recall"],
            table_f1=d["table_f1"],
            counts=d["counts"],
            config_hash=d.get("config_hash", ""),
        )
