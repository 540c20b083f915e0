"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Everything runs with the offline backend and the sidecar mock OCR; no
network. Run with ``pytest -s tests/test_acceptance.py`` to see the
per-criterion lines.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from PIL import Image

from chartforge.backends import OfflineBackend
from chartforge.benchmark import score_chart_to_table, score_short_answer
from chartforge.chartspec import DEFAULT_CHART_TYPES, synthesize_payload
from chartforge.cli import run_pipeline
from chartforge.composer import SandboxConfig, compose, render_all
from chartforge.config import load_config
from chartforge.filtering import SidecarOcrEngine, filter_corpus
from chartforge.forge import generate_code, generate_data, generate_template
from chartforge.manifest import read_manifest
from chartforge.model import (
    QA_PLAN,
    ChartData,
    QALevel,
    QAPair,
    RenderScript,
    SampleVariant,
    StyleDescriptor,
    canonical_json,
)
from chartforge.shim import instantiate

from .conftest import stage_records
from .oracles import (
    SHORT_ANSWER_EXPECTED_ACCURACY,
    SHORT_ANSWER_FIXTURE,
    TABLE_FIXTURE_EXPECTED,
    TABLE_FIXTURE_GOLD_CELLS,
    TABLE_FIXTURE_PAYLOAD,
    TABLE_FIXTURE_PRED_CELLS,
    TABLE_FIXTURE_PREDICTION,
    oracle_short_answer,
    oracle_table_f1,
)


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def test_quadratic_composition():
    with criterion("quadratic-composition"):
        started = time.monotonic()
        backend = OfflineBackend(23)
        chart_types = ("bar", "line", "radar")
        per_type = {}
        for name in chart_types:
            spec = generate_template(backend, name)
            data = generate_data(backend, spec, ["market share", "climate data"], 6)
            scripts = generate_code(backend, spec, "matplotlib", 4, seed=23)
            per_type[name] = (spec, data, scripts)

        instances = [i for spec, data, scripts in per_type.values() for i in compose(data, scripts)]
        assert len(instances) == 72
        assert backend.total_calls == 33  # 3 x (1 template + 6 data + 4 code)
        assert backend.call_counts == {"json_expert": 3, "data_expert": 18, "code_expert": 12}

        # Doubling M doubles the composition without any new code-expert calls.
        code_calls_before = backend.call_counts["code_expert"]
        doubled = []
        for name in chart_types:
            spec, _, scripts = per_type[name]
            data = generate_data(backend, spec, ["market share", "climate data"], 12)
            doubled.extend(compose(data, scripts))
        assert len(doubled) == 144
        assert backend.call_counts["code_expert"] == code_calls_before
        assert time.monotonic() - started < 120


def test_qa_plan_holds_for_entire_desk_corpus(desk_run):
    with criterion("qa-plan-17-split-1-1-5-5-5"):
        cfg, _ = desk_run
        corpus = stage_records(cfg, "data")
        assert len(corpus) == 18
        violations = []
        for data in corpus:
            counts = {level: sum(1 for qa in data.qas if qa.level is level) for level in QA_PLAN}
            if len(data.qas) != 17 or counts != QA_PLAN:
                violations.append(data.id)
        assert violations == []


SABOTAGED_SCRIPT = """\
import json
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open(sys.argv[1], "r", encoding="utf-8") as fh:
    payload = json.load(fh)
fig, ax = plt.subplots(figsize=(6.4, 4.8))
ax.bar(range(len(payload["data"]["values"])), [float(v) for v in payload["data"]["values"]])
fig.savefig(sys.argv[2], dpi=100)
with open(sys.argv[2] + ".txt", "w", encoding="utf-8") as fh:
    fh.write(payload["x_axis"]["label"] + "\\n" + payload["y_axis"]["label"] + "\\n")
"""

CRASHING_SCRIPT = "import sys\n_ = (sys.argv[1], sys.argv[2])\nraise ZeroDivisionError('injected crash')\n"


def test_filter_rejects_exactly_the_injected_defects(tmp_path):
    with criterion("filter-correctness-structure-exec-ocr"):
        backend = OfflineBackend(31)
        spec = generate_template(backend, "bar")
        good_data = generate_data(backend, spec, ["market share", "retail sales"], 3)
        malformed_payload = dict(good_data[0].payload)
        del malformed_payload["title"]
        malformed = ChartData.create("bar", "market share", malformed_payload, list(good_data[0].qas))
        data = good_data + [malformed]

        style = StyleDescriptor("tab10", "best", "both", "sans", "solid", annotated=True)
        good_scripts = generate_code(backend, spec, "matplotlib", 2, seed=31)
        crashing = RenderScript.create("bar", "matplotlib", style, CRASHING_SCRIPT)
        sabotaged = RenderScript.create("bar", "matplotlib", style, SABOTAGED_SCRIPT)
        scripts = good_scripts + [crashing, sabotaged]

        instances = compose(data, scripts)
        assert len(instances) == 16
        rendered = render_all(
            instances,
            {d.id: d for d in data},
            {s.id: s for s in scripts},
            tmp_path,
            SandboxConfig(timeout=30.0, jobs=2),
        )
        good_script_ids = {s.id for s in good_scripts}
        good_data_ids = {d.id for d in good_data}

        accepted, everything, histogram = filter_corpus(
            rendered, {d.id: d for d in data}, {"bar": spec}, SidecarOcrEngine(), tmp_path, 0.6
        )
        assert {(i.data_id, i.script_id) for i in accepted} == {
            (d, s) for d in good_data_ids for s in good_script_ids
        }
        for inst in everything:
            reasons = set(inst.filter.reasons)
            if inst.data_id == malformed.id:
                assert "structure" in reasons
            if inst.script_id == crashing.id:
                assert "exec" in reasons
            if inst.script_id == sabotaged.id and inst.data_id in good_data_ids:
                assert reasons == {"ocr"}
            if inst.data_id in good_data_ids and inst.script_id in good_script_ids:
                assert reasons == set()

        accepted_by_threshold = []
        for threshold in (0.0, 0.6, 1.01):
            acc, _, _ = filter_corpus(
                rendered, {d.id: d for d in data}, {"bar": spec}, SidecarOcrEngine(), tmp_path, threshold
            )
            accepted_by_threshold.append({i.id for i in acc})
        assert accepted_by_threshold[2] <= accepted_by_threshold[1] <= accepted_by_threshold[0]
        assert accepted_by_threshold[2] == set()


def test_dual_path_invariants_over_full_export(desk_run):
    with criterion("dual-path-export-invariants"):
        cfg, _ = desk_run
        samples = stage_records(cfg, "assemble")
        payload_by_data_id = {d.id: d.payload for d in stage_records(cfg, "data")}
        sample_by_id = {s.id: s for s in samples}

        # desk corpus: 72 accepted instances x (17 general + 15 data-driven
        # + 2 pretrain) and 18 data files x 17 json-only
        header, _ = read_manifest(cfg.manifest_path("assemble"))
        assert header.stats["built"] == {
            "data_driven": 72 * 15,
            "general": 72 * 17,
            "json_only": 18 * 17,
            "pretrain_caption": 72,
            "pretrain_json": 72,
        }

        exported = []
        for name in ("train.jsonl", "pretrain.jsonl"):
            with open(cfg.out_path() / "train" / name, encoding="utf-8") as fh:
                exported.extend(json.loads(line) for line in fh if line.strip())
        assert exported

        dd_checked = 0
        for doc in exported:
            if doc["variant"] == SampleVariant.JSON_ONLY.value:
                assert "image" not in doc
            if doc["variant"] == SampleVariant.DATA_DRIVEN.value:
                assert len(doc["conversations"]) == 4
                source = sample_by_id[doc["id"]]
                data_id = source.source_ids[1]
                assert doc["conversations"][1]["value"] == canonical_json(payload_by_data_id[data_id])
                dd_checked += 1
        assert dd_checked > 0

        for sample in samples:
            if sample.variant is SampleVariant.JSON_ONLY:
                assert sample.image_refs() == []
            if sample.variant is SampleVariant.DATA_DRIVEN:
                assert len(sample.turns) == 4
                assert sample.turns[1].content == canonical_json(payload_by_data_id[sample.source_ids[1]])

        # dual-path pairing completeness over the exported set: every
        # exported data_driven sample has its answering QA exported as a
        # general sample from the same instance
        from chartforge.assemble import sample_id as mk_sample_id

        exported_general = {d["id"] for d in exported if d["variant"] == SampleVariant.GENERAL.value}
        for doc in exported:
            if doc["variant"] != SampleVariant.DATA_DRIVEN.value:
                continue
            instance_id, _, qa_tag = sample_by_id[doc["id"]].source_ids
            partner = mk_sample_id(SampleVariant.GENERAL, f"{instance_id}:{qa_tag.split(':')[1]}")
            assert partner in exported_general


def test_style_variation_groups(desk_run):
    with criterion("style-variation-groups"):
        cfg, _ = desk_run
        records = stage_records(cfg, "benchmark")
        script_by_instance = {i.id: i.script_id for i in stage_records(cfg, "filter")}

        groups: dict[str, list] = {}
        for rec in records:
            groups.setdefault(rec.style_group, []).append(rec)
        assert groups
        multi = 0
        for group in groups.values():
            if len(group) < 2:
                continue
            multi += 1
            payload_hashes = {hashlib.sha256(canonical_json(r.payload).encode()).hexdigest() for r in group}
            assert len(payload_hashes) == 1
            script_ids = {script_by_instance[r.id] for r in group}
            assert len(script_ids) >= 2
        assert multi / len(groups) >= 0.9


def test_metric_oracles_frozen_fixtures():
    with criterion("metric-oracles-0.7-and-0.75"):
        oracle_verdicts = [oracle_short_answer(pred, gold) for gold, pred, _ in SHORT_ANSWER_FIXTURE]
        assert sum(oracle_verdicts) / len(oracle_verdicts) == SHORT_ANSWER_EXPECTED_ACCURACY

        scored = [
            score_short_answer(pred, QAPair(QALevel.LITERAL, "q", "a", gold))
            for gold, pred, _ in SHORT_ANSWER_FIXTURE
        ]
        assert scored == oracle_verdicts
        assert sum(scored) / len(scored) == 0.7

        assert oracle_table_f1(TABLE_FIXTURE_PRED_CELLS, TABLE_FIXTURE_GOLD_CELLS) == TABLE_FIXTURE_EXPECTED
        assert score_chart_to_table(TABLE_FIXTURE_PREDICTION, TABLE_FIXTURE_PAYLOAD, "bar") == (0.75, 0.75, 0.75)


def _hash_tree(root: Path, pattern: str) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob(pattern))
    }


def test_full_run_determinism(tmp_path):
    with criterion("determinism-byte-identical"):
        outs = []
        for run in ("a", "b"):
            out = tmp_path / run
            cfg = load_config(
                None,
                chart_types=("bar", "pie"),
                scripts_per_type=2,
                data_per_type=3,
                out_dir=str(out),
                seed=5,
                jobs=2,
            )
            assert run_pipeline(cfg, backend=OfflineBackend(cfg.seed)) == 0
            outs.append(out)

        manifests_a = _hash_tree(outs[0] / "manifests", "*.jsonl")
        manifests_b = _hash_tree(outs[1] / "manifests", "*.jsonl")
        assert manifests_a == manifests_b and len(manifests_a) == 9

        images_a = _hash_tree(outs[0] / "images", "*.png")
        images_b = _hash_tree(outs[1] / "images", "*.png")
        assert images_a == images_b and len(images_a) == 12

        train_a = _hash_tree(outs[0] / "train", "*.jsonl")
        train_b = _hash_tree(outs[1] / "train", "*.jsonl")
        assert train_a == train_b


def test_shim_renders_all_twenty_bank_types(tmp_path):
    with criterion("shim-all-20-types-render"):
        import random

        style = StyleDescriptor("Paired", "upper-right", "y", "serif", "striped", annotated=False)
        for i, name in enumerate(DEFAULT_CHART_TYPES):
            payload = synthesize_payload(random.Random(100 + i), name, "energy production")
            script = tmp_path / f"{name}.py"
            data = tmp_path / f"{name}.json"
            out = tmp_path / f"{name}.png"
            script.write_text(instantiate(name, style))
            data.write_text(json.dumps(payload))
            proc = subprocess.run(
                [sys.executable, "-m", "chartforge.shim", str(script), str(data), str(out)],
                capture_output=True, text=True, timeout=90,
            )
            assert proc.returncode == 0, (name, proc.stderr[-500:])
            with Image.open(out) as im:
                assert im.size[0] >= 64 and im.size[1] >= 64, name


def test_shim_crash_exits_1_with_traceback(tmp_path):
    with criterion("shim-crash-exit-1"):
        script = tmp_path / "crash.py"
        script.write_text(CRASHING_SCRIPT)
        data = tmp_path / "d.json"
        data.write_text("{}")
        proc = subprocess.run(
            [sys.executable, "-m", "chartforge.shim", str(script), str(data), str(tmp_path / "o.png")],
            capture_output=True, text=True, timeout=60,
        )
        assert proc.returncode == 1
        assert "Traceback" in proc.stderr and "injected crash" in proc.stderr
