"""Training corpus assembly: general QAs, the two augmented dual-path
variants (data-driven multi-turn extraction, text-only JSON+README), the
alignment pretraining pairs, and the conversation-format exporter.

Instruction wording lives in prompt assets, not code constants; the payload
serialization inside samples is canonical JSON so extraction targets
round-trip byte-exactly.
"""

from __future__ import annotations

import logging
import random
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from .backends import derive_seed
from .model import (
    ChartData,
    ChartInstance,
    QALevel,
    SampleVariant,
    TrainingSample,
    Turn,
    TurnRole,
    Verdict,
    canonical_json,
    content_id,
    dumps_stable,
)

log = logging.getLogger(__name__)

DEFAULT_BLEND_WEIGHTS = {"general": 2.0, "data_driven": 1.0, "json_only": 1.0}

_TRAIN_VARIANTS = (SampleVariant.GENERAL, SampleVariant.DATA_DRIVEN, SampleVariant.JSON_ONLY)
_ROLE_TO_WIRE = {TurnRole.USER: "human", TurnRole.ASSISTANT: "gpt"}
_WIRE_TO_ROLE = {v: k for k, v in _ROLE_TO_WIRE.items()}


class AssembleError(RuntimeError):
    pass


def _asset(name: str) -> str:
    return (Path(__file__).parent / "prompts" / f"{name}.txt").read_text(encoding="utf-8").strip()


def sample_id(variant: SampleVariant, key: str) -> str:
    return content_id("sample", f"{variant.value}:{key}")


def _require_accepted(instance: ChartInstance) -> None:
    if instance.filter is None or instance.filter.verdict is not Verdict.ACCEPT:
        raise AssembleError(f"instance {instance.id} was not accepted by the filter")


def _qa_index(data: ChartData, qa) -> int:
    try:
        return list(data.qas).index(qa)
    except ValueError:
        raise AssembleError(f"QA does not belong to data {data.id}") from None


def build_general(instance: ChartInstance, data: ChartData, qa) -> TrainingSample:
    """Two-turn image QA: the question over the chart, answered long-form."""
    _require_accepted(instance)
    idx = _qa_index(data, qa)
    return TrainingSample(
        id=sample_id(SampleVariant.GENERAL, f"{instance.id}:{idx}"),
        variant=SampleVariant.GENERAL,
        turns=(
            Turn(TurnRole.USER, qa.question, image_ref=instance.image_ref),
            Turn(TurnRole.ASSISTANT, qa.answer_long),
        ),
        source_ids=(instance.id, data.id, f"qa:{idx}"),
    )


def build_data_driven(
    instance: ChartInstance, data: ChartData, qa, extraction_instruction: Optional[str] = None
) -> TrainingSample:
    """Four-turn sample: extract the raw JSON from the chart first, then
    answer the question given chart plus extraction."""
    _require_accepted(instance)
    idx = _qa_index(data, qa)
    instruction = extraction_instruction or _asset("extract_instruction")
    return TrainingSample(
        id=sample_id(SampleVariant.DATA_DRIVEN, f"{instance.id}:{idx}"),
        variant=SampleVariant.DATA_DRIVEN,
        turns=(
            Turn(TurnRole.USER, instruction, image_ref=instance.image_ref),
            Turn(TurnRole.ASSISTANT, canonical_json(data.payload)),
            Turn(TurnRole.USER, qa.question),
            Turn(TurnRole.ASSISTANT, qa.answer_long),
        ),
        source_ids=(instance.id, data.id, f"qa:{idx}"),
    )


def build_json_only(data: ChartData, readme: str, qa) -> TrainingSample:
    """Text-only QA where README plus serialized payload replace the image."""
    idx = _qa_index(data, qa)
    user = f"{readme}\n\nData:\n{canonical_json(data.payload)}\n\nQuestion: {qa.question}"
    return TrainingSample(
        id=sample_id(SampleVariant.JSON_ONLY, f"{data.id}:{idx}"),
        variant=SampleVariant.JSON_ONLY,
        turns=(Turn(TurnRole.USER, user), Turn(TurnRole.ASSISTANT, qa.answer_long)),
        source_ids=(data.id, f"qa:{idx}"),
    )


def build_pretrain_pairs(instance: ChartInstance, data: ChartData) -> list[TrainingSample]:
    """Alignment pairs for projector pretraining: chart-description and
    chart-JSON targets."""
    _require_accepted(instance)
    description = next((qa for qa in data.qas if qa.level is QALevel.DESCRIPTION), None)
    if description is None:
        raise AssembleError(f"data {data.id} lacks a description QA")
    caption = TrainingSample(
        id=sample_id(SampleVariant.PRETRAIN_CAPTION, instance.id),
        variant=SampleVariant.PRETRAIN_CAPTION,
        turns=(
            Turn(TurnRole.USER, _asset("describe_instruction"), image_ref=instance.image_ref),
            Turn(TurnRole.ASSISTANT, description.answer_long),
        ),
        source_ids=(instance.id, data.id),
    )
    json_pair = TrainingSample(
        id=sample_id(SampleVariant.PRETRAIN_JSON, instance.id),
        variant=SampleVariant.PRETRAIN_JSON,
        turns=(
            Turn(TurnRole.USER, _asset("extract_instruction"), image_ref=instance.image_ref),
            Turn(TurnRole.ASSISTANT, canonical_json(data.payload)),
        ),
        source_ids=(instance.id, data.id),
    )
    return [caption, json_pair]


def data_prompting_prompt(question: str) -> str:
    """The two-step inference prompt: extract the raw data, then answer the
    question using it. Pure function of the question."""
    if not question or not question.strip():
        raise AssembleError("empty question")
    return _asset("data_prompting").format(question=question.strip())


def build_corpus(
    accepted: Sequence[ChartInstance],
    data_by_id: dict[str, ChartData],
    readmes_by_type: dict[str, str],
    *,
    extraction_instruction: Optional[str] = None,
) -> list[TrainingSample]:
    """All training samples for an accepted corpus: per instance 17 general +
    15 data-driven (leveled QAs) + 2 pretrain pairs; per data file 17
    json_only samples."""
    samples: list[TrainingSample] = []
    seen_data: set[str] = set()
    for instance in accepted:
        data = data_by_id[instance.data_id]
        for qa in data.qas:
            samples.append(build_general(instance, data, qa))
        for qa in data.leveled_qas():
            samples.append(build_data_driven(instance, data, qa, extraction_instruction))
        samples.extend(build_pretrain_pairs(instance, data))
        if data.id not in seen_data:
            seen_data.add(data.id)
            readme = readmes_by_type[data.chart_type]
            for qa in data.qas:
                samples.append(build_json_only(data, readme, qa))
    return samples


def blend_samples(
    samples: Sequence[TrainingSample],
    weights: Optional[dict[str, float]] = None,
    seed: int = 0,
) -> list[TrainingSample]:
    """Downsample the three instruction variants to the requested ratio
    (never upsampling), deterministically by seed. Every kept data_driven
    sample keeps its paired general sample so dual-path pairing stays
    complete."""
    weights = DEFAULT_BLEND_WEIGHTS if weights is None else weights
    rng = random.Random(derive_seed(seed, "blend"))
    pools: dict[SampleVariant, list[TrainingSample]] = {v: [] for v in _TRAIN_VARIANTS}
    for s in samples:
        if s.variant in pools:
            pools[s.variant].append(s)
    for pool in pools.values():
        pool.sort(key=lambda s: s.id)
        rng.shuffle(pool)

    active = {v: weights.get(v.value, 0.0) for v in _TRAIN_VARIANTS}
    if all(w <= 0 for w in active.values()):
        raise AssembleError("blend weights are all zero")
    unit = min(
        len(pools[v]) / w for v, w in active.items() if w > 0 and pools[v]
    ) if any(pools[v] for v, w in active.items() if w > 0) else 0.0
    targets = {v: (int(unit * w + 1e-9) if w > 0 else 0) for v, w in active.items()}

    dd_sel = pools[SampleVariant.DATA_DRIVEN][: targets[SampleVariant.DATA_DRIVEN]]
    partner_ids = set()
    for s in dd_sel:
        instance_id, _, qa_tag = s.source_ids
        partner_ids.add(sample_id(SampleVariant.GENERAL, f"{instance_id}:{qa_tag.split(':')[1]}"))
    general_pool = pools[SampleVariant.GENERAL]
    general_sel = [s for s in general_pool if s.id in partner_ids]
    for s in general_pool:
        if len(general_sel) >= targets[SampleVariant.GENERAL]:
            break
        if s.id not in partner_ids:
            general_sel.append(s)
    jo_sel = pools[SampleVariant.JSON_ONLY][: targets[SampleVariant.JSON_ONLY]]

    blended = general_sel + dd_sel + jo_sel
    blended.sort(key=lambda s: s.id)
    rng.shuffle(blended)
    return blended


def export_record(sample: TrainingSample) -> dict:
    doc: dict = {"id": sample.id, "variant": sample.variant.value}
    images = sample.image_refs()
    if images:
        doc["image"] = images[0]
    doc["conversations"] = [
        {"from": _ROLE_TO_WIRE[t.role], "value": t.content} for t in sample.turns
    ]
    return doc


def parse_exported_record(doc: dict) -> TrainingSample:
    """Rebuild a TrainingSample from an exported conversation record (the
    round-trip direction used by the invariant tests)."""
    image = doc.get("image")
    turns = []
    for i, conv in enumerate(doc["conversations"]):
        turns.append(
            Turn(
                role=_WIRE_TO_ROLE[conv["from"]],
                content=conv["value"],
                image_ref=image if (i == 0 and image) else None,
            )
        )
    return TrainingSample(id=doc["id"], variant=SampleVariant(doc["variant"]), turns=tuple(turns))


def export_training_set(
    samples: Sequence[TrainingSample],
    out_dir: str | Path,
    images_root: str | Path,
    *,
    weights: Optional[dict[str, float]] = None,
    seed: int = 0,
) -> dict:
    """Write train.jsonl (blended instruction variants) and pretrain.jsonl
    (alignment pairs) plus per-variant counts. Deterministic for a given
    seed; refuses dangling image references."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images_root = Path(images_root)
    for sample in samples:
        problems = sample.validate()
        if problems:
            raise AssembleError(f"invalid sample {sample.id}: {'; '.join(problems)}")
        for ref in sample.image_refs():
            if not (images_root / ref).is_file():
                raise AssembleError(f"sample {sample.id} has dangling image_ref {ref!r}")

    blended = blend_samples(samples, weights, seed)
    pretrain = sorted(
        (s for s in samples if s.variant not in _TRAIN_VARIANTS), key=lambda s: s.id
    )
    rng = random.Random(derive_seed(seed, "export-pretrain"))
    rng.shuffle(pretrain)

    def write(path: Path, rows: Sequence[TrainingSample]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for s in rows:
                fh.write(dumps_stable(export_record(s)) + "\n")

    write(out / "train.jsonl", blended)
    write(out / "pretrain.jsonl", pretrain)

    built = Counter(s.variant.value for s in samples)
    exported = Counter(s.variant.value for s in blended + pretrain)
    stats = {
        "built": dict(sorted(built.items())),
        "exported": dict(sorted(exported.items())),
        "train_file": "train.jsonl",
        "pretrain_file": "pretrain.jsonl",
        "blend_weights": dict(weights or DEFAULT_BLEND_WEIGHTS),
    }
    log.info("exported %d train + %d pretrain samples", len(blended), len(pretrain))
    return stats
