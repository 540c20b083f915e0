"""Newline-delimited JSON stage manifests.

Every pipeline stage writes exactly one manifest: a header line carrying the
stage name, config hash, seed, and counts, followed by one line per typed
record. Field ordering is stable, so identical inputs yield byte-identical
files; that property backs both resumability and the determinism checks.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .model import (
    BenchmarkRecord,
    ChartData,
    ChartInstance,
    ChartTypeSpec,
    EvalReport,
    RenderScript,
    TrainingSample,
    dumps_stable,
)


class ManifestError(ValueError):
    pass


STAGE_RECORD_TYPES: dict[str, Any] = {
    "templates": ChartTypeSpec,
    "data": ChartData,
    "code": RenderScript,
    "compose": ChartInstance,
    "render": ChartInstance,
    "filter": ChartInstance,
    "assemble": TrainingSample,
    "benchmark": BenchmarkRecord,
    "evaluate": EvalReport,
    "stats": None,  # plain dict records
}


def _record_id(record: Any) -> str:
    return getattr(record, "id", "") or ""


@dataclass(frozen=True)
class ManifestHeader:
    stage: str
    config_hash: str
    seed: int
    count: int
    stats: dict

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "count": self.count,
            "stats": self.stats,
        }


def write_manifest(
    path: str | Path,
    stage: str,
    records: Sequence[Any],
    *,
    config_hash: str,
    seed: int,
    stats: dict | None = None,
) -> ManifestHeader:
    """Validate and write records to a stage manifest. Refuses to write when
    any record fails its invariants (the error lists the offending ids) or
    when two records share an id."""
    if stage not in STAGE_RECORD_TYPES:
        raise ManifestError(f"unknown stage name {stage!r}")
    bad: list[str] = []
    for record in records:
        validate = getattr(record, "validate", None)
        problems = validate() if callable(validate) else []
        if problems:
            bad.append(f"{_record_id(record) or '<no id>'}: {'; '.join(problems)}")
    if bad:
        raise ManifestError(f"{len(bad)} record(s) fail invariants: " + " | ".join(bad))

    seen: set[str] = set()
    for record in records:
        rid = _record_id(record)
        if rid:
            if rid in seen:
                raise ManifestError(f"duplicate record id {rid!r} in stage {stage!r}")
            seen.add(rid)

    header = ManifestHeader(
        stage=stage, config_hash=config_hash, seed=seed, count=len(records), stats=stats or {}
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(dumps_stable(header.to_dict()) + "\n")
        for record in records:
            doc = record.to_dict() if hasattr(record, "to_dict") else record
            fh.write(dumps_stable(doc) + "\n")
    os.replace(tmp, path)
    return header


def read_manifest(path: str | Path, *, expect_config_hash: str | None = None) -> tuple[ManifestHeader, list[Any]]:
    """Read a stage manifest back into typed records. Rejects unknown stage
    names, header/record parse errors (with the line number), record-count
    mismatches, and, when resuming, config-hash drift."""
    path = Path(path)
    # Split on "\n" only: JSON strings may legally contain U+2028/U+2029,
    # which str.splitlines would treat as record boundaries.
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ManifestError(f"{path}: empty manifest")

    def parse(line: str, lineno: int) -> dict:
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: parse error at line {lineno}: {exc.msg}") from exc

    head = parse(lines[0], 1)
    stage = head.get("stage")
    if stage not in STAGE_RECORD_TYPES:
        raise ManifestError(f"{path}: unknown stage name {stage!r}")
    header = ManifestHeader(
        stage=stage,
        config_hash=head.get("config_hash", ""),
        seed=int(head.get("seed", 0)),
        count=int(head.get("count", 0)),
        stats=head.get("stats", {}),
    )
    if expect_config_hash is not None and header.config_hash != expect_config_hash:
        raise ManifestError(
            f"{path}: config hash mismatch: manifest has {header.config_hash!r}, "
            f"current run expects {expect_config_hash!r}"
        )

    record_type = STAGE_RECORD_TYPES[stage]
    records: list[Any] = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        doc = parse(line, i)
        records.append(record_type.from_dict(doc) if record_type is not None else doc)
    if len(records) != header.count:
        raise ManifestError(
            f"{path}: header declares {header.count} records but {len(records)} present"
        )
    return header, records
