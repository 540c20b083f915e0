"""Stage-oriented pipeline entry point.

Stages form a DAG (templates -> {data, code} -> compose -> render -> filter
-> {assemble, benchmark} -> {evaluate, stats}); each stage reads its
prerequisites' manifests and writes exactly one manifest of its own. A
completed stage with a matching config hash is skipped on rerun; a hash
mismatch means the on-disk corpus was produced by a different configuration
and is refused rather than silently mixed.

Exit codes: 0 ok, 1 stage failure, 2 usage, 3 missing prerequisite stage,
4 config-hash drift.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import assemble as assemble_mod
from . import benchmark as bench_mod
from . import composer as compose_mod
from . import filtering, forge
from .backends import BaseBackend, OfflineBackend, RemoteBackend
from .config import PipelineConfig, load_config, resolve_env
from .manifest import ManifestError, read_manifest, write_manifest
from .model import ChartInstance

log = logging.getLogger(__name__)

STAGES = (
    "templates",
    "data",
    "code",
    "compose",
    "render",
    "filter",
    "assemble",
    "benchmark",
    "evaluate",
    "stats",
)

PREREQS: dict[str, tuple[str, ...]] = {
    "templates": (),
    "data": ("templates",),
    "code": ("templates",),
    "compose": ("data", "code"),
    "render": ("compose", "data", "code"),
    "filter": ("render", "data", "templates"),
    "assemble": ("filter", "data", "templates"),
    "benchmark": ("filter", "data", "code"),
    "evaluate": ("benchmark",),
    "stats": ("benchmark",),
}

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_MISSING_PREREQ = 3
EXIT_HASH_DRIFT = 4


class StageError(RuntimeError):
    def __init__(self, message: str, exit_code: int = EXIT_FAILURE):
        super().__init__(message)
        self.exit_code = exit_code


def build_backend(cfg: PipelineConfig) -> BaseBackend:
    if cfg.backend == "offline":
        return OfflineBackend(cfg.seed)
    if cfg.backend == "remote":
        endpoint = resolve_env(cfg.remote.endpoint)
        if not endpoint:
            raise StageError("remote backend selected but endpoint env var is unset")
        return RemoteBackend(
            endpoint=endpoint,
            api_key=resolve_env(cfg.remote.api_key),
            model=cfg.remote.model,
            temperature=cfg.remote.temperature,
            timeout=cfg.remote.timeout,
            replay_path=cfg.out_path() / cfg.remote.replay_file,
        )
    raise StageError(f"unknown backend {cfg.backend!r}")


def _read_stage(cfg: PipelineConfig, stage: str):
    path = cfg.manifest_path(stage)
    if not path.is_file():
        raise StageError(f"missing prerequisite stage: {stage}", EXIT_MISSING_PREREQ)
    try:
        return read_manifest(path, expect_config_hash=cfg.config_hash)
    except ManifestError as exc:
        if "config hash mismatch" in str(exc):
            raise StageError(str(exc), EXIT_HASH_DRIFT) from exc
        raise StageError(str(exc)) from exc


def _specs_by_type(cfg: PipelineConfig) -> dict:
    _, specs = _read_stage(cfg, "templates")
    return {s.name: s for s in specs}


def _data_by_id(cfg: PipelineConfig) -> dict:
    _, data = _read_stage(cfg, "data")
    return {d.id: d for d in data}


def _scripts_by_id(cfg: PipelineConfig) -> dict:
    _, scripts = _read_stage(cfg, "code")
    return {s.id: s for s in scripts}


# ---------------------------------------------------------------------------
# Stage implementations (each returns records + stats for its manifest)
# ---------------------------------------------------------------------------

def stage_templates(cfg: PipelineConfig, backend: BaseBackend, **_):
    specs = [
        forge.generate_template(backend, name, registry=cfg.chart_types, retry_budget=cfg.retry_budget)
        for name in cfg.chart_types
    ]
    return specs, {"chart_types": len(specs)}


def stage_data(cfg: PipelineConfig, backend: BaseBackend, **_):
    specs = _specs_by_type(cfg)
    records = []
    for name in cfg.chart_types:
        records.extend(
            forge.generate_data(
                backend,
                specs[name],
                cfg.topics,
                cfg.data_per_type,
                retry_budget=cfg.retry_budget,
                floor=cfg.data_floor,
                jobs=cfg.jobs,
            )
        )
    return records, {"per_type": cfg.data_per_type}


def stage_code(cfg: PipelineConfig, backend: BaseBackend, **_):
    specs = _specs_by_type(cfg)
    records = []
    for name in cfg.chart_types:
        records.extend(
            forge.generate_code(
                backend,
                specs[name],
                cfg.plot_backend_name,
                cfg.scripts_per_type,
                cfg.seed,
                unannotated_fraction=cfg.unannotated_fraction,
                retry_budget=cfg.retry_budget,
                jobs=cfg.jobs,
            )
        )
    return records, {"per_type": cfg.scripts_per_type}


def stage_compose(cfg: PipelineConfig, backend: BaseBackend, **_):
    data_by_id = _data_by_id(cfg)
    scripts_by_id = _scripts_by_id(cfg)
    records = []
    for name in cfg.chart_types:
        data = [d for d in data_by_id.values() if d.chart_type == name]
        scripts = [s for s in scripts_by_id.values() if s.chart_type == name]
        records.extend(compose_mod.compose(data, scripts))
    return records, {"pairs": len(records)}


def stage_render(cfg: PipelineConfig, backend: BaseBackend, *, resume: bool = False, **_):
    _, instances = _read_stage(cfg, "compose")
    data_by_id = _data_by_id(cfg)
    scripts_by_id = _scripts_by_id(cfg)

    partial_path = cfg.out_path() / "manifests" / "render.partial.jsonl"
    already_done: dict[str, ChartInstance] = {}
    if resume and partial_path.is_file():
        with open(partial_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    inst = ChartInstance.from_dict(json.loads(line))
                    already_done[inst.id] = inst
        log.info("resuming render: %d instances already terminal", len(already_done))
    partial_path.parent.mkdir(parents=True, exist_ok=True)
    partial = open(partial_path, "a" if resume else "w", encoding="utf-8")

    def on_result(inst: ChartInstance) -> None:
        partial.write(json.dumps(inst.to_dict(), sort_keys=True) + "\n")
        partial.flush()

    sandbox = compose_mod.SandboxConfig(timeout=cfg.render_timeout, jobs=cfg.jobs)
    try:
        rendered = compose_mod.render_all(
            instances,
            data_by_id,
            scripts_by_id,
            cfg.out_path(),
            sandbox,
            already_done=already_done,
            on_result=on_result,
        )
    finally:
        partial.close()
    histogram = compose_mod.enforce_render_budget(rendered, cfg.render_ok_floor)
    partial_path.unlink(missing_ok=True)
    return rendered, {"status": histogram}


def stage_filter(cfg: PipelineConfig, backend: BaseBackend, **_):
    _, rendered = _read_stage(cfg, "render")
    data_by_id = _data_by_id(cfg)
    accepted, all_instances, histogram = filtering.filter_corpus(
        rendered,
        data_by_id,
        _specs_by_type(cfg),
        filtering.SidecarOcrEngine(),
        cfg.out_path(),
        cfg.ocr_threshold,
    )
    write_review_candidates(cfg.out_path() / "review" / "candidates.jsonl", accepted, data_by_id)
    return all_instances, {"verdicts": histogram, "accepted": len(accepted), "threshold": cfg.ocr_threshold}


def write_review_candidates(path: Path, accepted, data_by_id) -> None:
    """Export the human-review corpus: one line per accepted instance with
    its image path, payload, and leveled QAs. The review UI reads this file
    and writes the decisions file the benchmark stage consumes."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for instance in accepted:
            data = data_by_id[instance.data_id]
            row = {
                "record_id": instance.id,
                "chart_type": instance.chart_type,
                "image": instance.image_ref,
                "payload": data.payload,
                "qas": [qa.to_dict() for qa in data.leveled_qas()],
            }
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _accepted_instances(cfg: PipelineConfig) -> list[ChartInstance]:
    _, instances = _read_stage(cfg, "filter")
    from .model import Verdict

    return [i for i in instances if i.filter is not None and i.filter.verdict is Verdict.ACCEPT]


def stage_assemble(cfg: PipelineConfig, backend: BaseBackend, **_):
    accepted = _accepted_instances(cfg)
    data_by_id = _data_by_id(cfg)
    readmes = {name: spec.readme for name, spec in _specs_by_type(cfg).items()}
    samples = assemble_mod.build_corpus(accepted, data_by_id, readmes)
    stats = assemble_mod.export_training_set(
        samples,
        cfg.out_path() / "train",
        cfg.out_path(),
        weights=cfg.blend_weight_map(),
        seed=cfg.seed,
    )
    return samples, stats


def stage_benchmark(cfg: PipelineConfig, backend: BaseBackend, *, decisions_path: Optional[str] = None, **_):
    accepted = _accepted_instances(cfg)
    data_by_id = _data_by_id(cfg)
    scripts_by_id = _scripts_by_id(cfg)
    if decisions_path:
        decisions = bench_mod.read_decisions(decisions_path)
    else:
        decisions = bench_mod.auto_decisions(accepted, data_by_id)
        log.info("no decisions file given; admitting all QAs (single-curator auto mode)")
    records, stats = bench_mod.build_benchmark(
        accepted, data_by_id, scripts_by_id, decisions, quota_per_type=cfg.benchmark_quota
    )
    return records, stats


def stage_evaluate(
    cfg: PipelineConfig,
    backend: BaseBackend,
    *,
    predictions_path: Optional[str] = None,
    table_predictions_path: Optional[str] = None,
    **_,
):
    if not predictions_path:
        raise StageError("evaluate requires --predictions FILE")
    _, records = _read_stage(cfg, "benchmark")
    predictions = bench_mod.read_predictions(predictions_path)
    tables = bench_mod.read_predictions(table_predictions_path) if table_predictions_path else None
    report = bench_mod.evaluate(
        predictions,
        records,
        table_predictions=tables,
        tolerance=cfg.tolerance,
        config_hash=cfg.config_hash,
    )
    reports_dir = cfg.out_path() / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    (reports_dir / "eval_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return [report], {"predictions": len(predictions)}


def stage_stats(cfg: PipelineConfig, backend: BaseBackend, **_):
    _, records = _read_stage(cfg, "benchmark")
    stats = bench_mod.benchmark_stats(records)
    return [stats], stats


_STAGE_FNS = {
    "templates": stage_templates,
    "data": stage_data,
    "code": stage_code,
    "compose": stage_compose,
    "render": stage_render,
    "filter": stage_filter,
    "assemble": stage_assemble,
    "benchmark": stage_benchmark,
    "evaluate": stage_evaluate,
    "stats": stage_stats,
}


def run_stage(
    stage: str,
    cfg: PipelineConfig,
    *,
    backend: Optional[BaseBackend] = None,
    resume: bool = False,
    decisions_path: Optional[str] = None,
    predictions_path: Optional[str] = None,
    table_predictions_path: Optional[str] = None,
) -> int:
    """Run one stage; idempotent per config hash. Prints the one-line
    summary and returns the process exit code."""
    if stage not in STAGES:
        print(f"unknown stage {stage!r}", file=sys.stderr)
        return EXIT_USAGE
    own = cfg.manifest_path(stage)
    if own.is_file():
        try:
            header, _ = read_manifest(own)
        except ManifestError as exc:
            print(f"stage={stage} error: unreadable manifest: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        if header.config_hash == cfg.config_hash:
            print(f"stage={stage} skipped (complete) count={header.count}")
            return EXIT_OK
        print(
            f"stage={stage} error: config-hash drift: manifest has {header.config_hash}, "
            f"current config is {cfg.config_hash}",
            file=sys.stderr,
        )
        return EXIT_HASH_DRIFT

    for prereq in PREREQS[stage]:
        if not cfg.manifest_path(prereq).is_file():
            print(f"stage={stage} error: missing prerequisite stage: {prereq}", file=sys.stderr)
            return EXIT_MISSING_PREREQ

    started = time.monotonic()
    try:
        backend = backend or build_backend(cfg)
        records, stats = _STAGE_FNS[stage](
            cfg,
            backend,
            resume=resume,
            decisions_path=decisions_path,
            predictions_path=predictions_path,
            table_predictions_path=table_predictions_path,
        )
        header = write_manifest(
            own, stage, records, config_hash=cfg.config_hash, seed=cfg.seed, stats=stats
        )
    except StageError as exc:
        print(f"stage={stage} error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (forge.ForgeError, compose_mod.ComposeError, compose_mod.SandboxError,
            compose_mod.RenderBudgetError, filtering.FilterError, assemble_mod.AssembleError,
            bench_mod.BenchmarkError, ManifestError) as exc:
        print(f"stage={stage} error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    elapsed = time.monotonic() - started
    brief = " ".join(f"{k}={v}" for k, v in list(stats.items())[:3])
    print(f"stage={stage} count={header.count} {brief} elapsed={elapsed:.1f}s")
    return EXIT_OK


def run_pipeline(
    cfg: PipelineConfig,
    stages: Sequence[str] = STAGES[:8] + ("stats",),
    *,
    backend: Optional[BaseBackend] = None,
    resume: bool = False,
    decisions_path: Optional[str] = None,
    predictions_path: Optional[str] = None,
    table_predictions_path: Optional[str] = None,
) -> int:
    """Run stages in order, sharing one backend; stops at the first failing
    stage and returns its exit code."""
    backend = backend or build_backend(cfg)
    for stage in stages:
        code = run_stage(
            stage,
            cfg,
            backend=backend,
            resume=resume,
            decisions_path=decisions_path,
            predictions_path=predictions_path,
            table_predictions_path=table_predictions_path,
        )
        if code != EXIT_OK:
            return code
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="chartforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one pipeline stage (or 'all')")
    run.add_argument("stage", choices=STAGES + ("all",))
    run.add_argument("--config", help="YAML config file")
    run.add_argument("--seed", type=int, help="override the run seed")
    run.add_argument("--backend", choices=("offline", "remote"), help="expert backend")
    run.add_argument("--jobs", type=int, help="worker pool size")
    run.add_argument("--out-dir", help="output directory")
    run.add_argument("--resume", action="store_true", help="continue a partial stage")
    run.add_argument("--decisions", help="review decisions file (benchmark stage)")
    run.add_argument("--predictions", help="predictions file (evaluate stage)")
    run.add_argument("--table-predictions", help="chart-to-table predictions file (evaluate stage)")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(
            args.config,
            seed=args.seed,
            backend=args.backend,
            jobs=args.jobs,
            out_dir=args.out_dir,
        )
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    kwargs = dict(
        resume=args.resume,
        decisions_path=args.decisions,
        predictions_path=args.predictions,
        table_predictions_path=args.table_predictions,
    )
    if args.stage == "all":
        stages = list(STAGES[:8]) + ["stats"]
        if args.predictions:
            stages.insert(-1, "evaluate")
        return run_pipeline(cfg, stages, **kwargs)
    return run_stage(args.stage, cfg, **kwargs)


if __name__ == "__main__":
    sys.exit(main())
