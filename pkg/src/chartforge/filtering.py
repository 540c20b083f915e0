"""Automatic corpus filter: structural conformance, execution success, and
OCR-based text verification.

The OCR engine is pluggable: production can wire a real OCR tool, while the
sidecar engine reads the ``<image>.txt`` file the bank scripts emit, giving
the whole filter a deterministic offline path. Scores are containment-based:
an expected string counts as present when it appears (case-insensitively)
anywhere in the recognized text.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import replace
from pathlib import Path
from typing import Protocol, Sequence

from . import chartspec
from .model import (
    ChartData,
    ChartInstance,
    ChartTypeSpec,
    FilterReport,
    RenderStatus,
    Verdict,
    conformance_report,
)

log = logging.getLogger(__name__)

DEFAULT_OCR_THRESHOLD = 0.6

REASON_STRUCTURE = "structure"
REASON_EXEC = "exec"
REASON_OCR = "ocr"
REASON_OCR_UNREADABLE = "ocr-unreadable"


class FilterError(RuntimeError):
    pass


class OcrEngine(Protocol):
    """Anything that maps an image path to recognized text strings."""

    def recognize(self, image_path: str | Path) -> list[str]:
        ...


class SidecarOcrEngine:
    """Mock OCR that reads the shim sidecar (``<image>.txt``) written by bank
    scripts: one drawn string per line."""

    def recognize(self, image_path: str | Path) -> list[str]:
        sidecar = Path(str(image_path) + ".txt")
        return sidecar.read_text(encoding="utf-8").splitlines()


def check_structure(data: ChartData, spec: ChartTypeSpec) -> tuple[bool, list[str], list[str]]:
    """True iff every required template path resolves in the payload with
    its declared kind; extra keys are allowed but reported."""
    return conformance_report(data.payload, spec.template)


def check_ocr(
    instance: ChartInstance,
    data: ChartData,
    engine: OcrEngine,
    images_root: str | Path,
) -> tuple[float, list[str]]:
    """Fraction of expected chart text (title, axis labels, legend/category
    names) found in the OCR output. An empty expected set scores 1.0: absence
    of text is not evidence of corruption."""
    if instance.render_status is not RenderStatus.OK or not instance.image_ref:
        raise FilterError("check_ocr requires a successfully rendered instance")
    expected = chartspec.expected_text_strings(data.chart_type, data.payload)
    if not expected:
        return 1.0, []
    try:
        recognized = engine.recognize(Path(images_root) / instance.image_ref)
    except OSError as exc:
        return 0.0, [f"{REASON_OCR_UNREADABLE}: {exc}"]
    blob = "\n".join(recognized).lower()
    matched = sum(1 for s in expected if s.lower() in blob)
    return matched / len(expected), []


def filter_instance(
    instance: ChartInstance,
    data: ChartData,
    spec: ChartTypeSpec,
    engine: OcrEngine,
    images_root: str | Path,
    threshold: float = DEFAULT_OCR_THRESHOLD,
) -> ChartInstance:
    """Attach a FilterReport to one instance. The verdict depends only on the
    instance's own checks, so filtering is order-independent."""
    structure_ok, _missing, _extra = check_structure(data, spec)
    exec_ok = instance.render_status is RenderStatus.OK
    reasons: list[str] = []
    if not structure_ok:
        reasons.append(REASON_STRUCTURE)
    if not exec_ok:
        reasons.append(REASON_EXEC)
    if structure_ok and exec_ok:
        # OCR expectations come from the payload via template paths, so they
        # are only well-defined for structurally sound data.
        ocr_score, ocr_reasons = check_ocr(instance, data, engine, images_root)
        if ocr_score < threshold:
            reasons.append(REASON_OCR)
        reasons.extend(ocr_reasons)
    else:
        ocr_score = 0.0
    accepted = structure_ok and exec_ok and ocr_score >= threshold
    report = FilterReport(
        structure_ok=structure_ok,
        exec_ok=exec_ok,
        ocr_score=ocr_score,
        threshold=threshold,
        verdict=Verdict.ACCEPT if accepted else Verdict.REJECT,
        reasons=tuple(reasons),
    )
    return replace(instance, filter=report)


def filter_corpus(
    instances: Sequence[ChartInstance],
    data_by_id: dict[str, ChartData],
    specs_by_type: dict[str, ChartTypeSpec],
    engine: OcrEngine,
    images_root: str | Path,
    threshold: float = DEFAULT_OCR_THRESHOLD,
) -> tuple[list[ChartInstance], list[ChartInstance], dict[str, int]]:
    """Filter a rendered corpus. Returns (accepted, all instances with
    reports attached, rejection-reason histogram)."""
    out: list[ChartInstance] = []
    histogram: Counter[str] = Counter()
    for instance in instances:
        data = data_by_id.get(instance.data_id)
        if data is None:
            raise FilterError(f"instance {instance.id} references unknown data {instance.data_id}")
        spec = specs_by_type.get(instance.chart_type)
        if spec is None:
            raise FilterError(f"no chart type spec for {instance.chart_type!r}")
        filtered = filter_instance(instance, data, spec, engine, images_root, threshold)
        out.append(filtered)
        if filtered.filter.verdict is Verdict.ACCEPT:
            histogram["accept"] += 1
        else:
            for reason in filtered.filter.reasons:
                histogram[reason] += 1
    accepted = [i for i in out if i.filter is not None and i.filter.verdict is Verdict.ACCEPT]
    log.info("filter: %d/%d accepted (threshold %.2f)", len(accepted), len(out), threshold)
    return accepted, out, dict(histogram)
